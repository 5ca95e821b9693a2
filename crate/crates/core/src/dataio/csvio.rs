use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One trial read from CSV: one row per channel, optionally led by the
/// channel name.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrial {
    pub data: DMatrix<f64>,
    pub channel_names: Option<Vec<String>>,
}

pub fn read_trial_csv(path: impl AsRef<Path>) -> Result<CsvTrial> {
    let path = path.as_ref();
    let fail = |msg: String| Error::format(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut named = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        let first = record.get(0).unwrap_or("");
        let has_name = first.parse::<f64>().is_err();
        match named {
            None => named = Some(has_name),
            Some(n) if n != has_name => {
                return Err(fail(format!("row {} is inconsistent about the name column", i + 1)))
            }
            _ => {}
        }
        let skip = usize::from(has_name);
        if has_name {
            names.push(first.to_string());
        }
        let values = record
            .iter()
            .skip(skip)
            .map(|v| v.parse::<f64>().map_err(|_| fail(format!("row {}: `{v}` is not a number", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    let n = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() || n == 0 {
        return Err(fail("no samples".into()));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(fail("rows have different lengths".into()));
    }
    Ok(CsvTrial {
        data: DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]),
        channel_names: named.unwrap_or(false).then_some(names),
    })
}
