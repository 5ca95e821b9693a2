//! Plain structured-text (TOML) representations shared by the model formats.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense matrix stored as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowMatrix(pub Vec<Vec<f64>>);

impl RowMatrix {
    pub fn into_matrix(self) -> Result<DMatrix<f64>> {
        let nrows = self.0.len();
        let ncols = self.0.first().map_or(0, Vec::len);
        if self.0.iter().any(|r| r.len() != ncols) {
            return Err(Error::format("ragged matrix rows"));
        }
        let flat: Vec<f64> = self.0.into_iter().flatten().collect();
        Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
    }
}

impl From<&DMatrix<f64>> for RowMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        RowMatrix(
            m.row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        )
    }
}

/// serde adapter for `DMatrix<f64>` fields, written row-major.
pub mod rows {
    use super::RowMatrix;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        RowMatrix::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        RowMatrix::deserialize(d)?
            .into_matrix()
            .map_err(serde::de::Error::custom)
    }
}

/// serde adapter for `DVector<f64>` fields, written as a flat list.
pub mod vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
