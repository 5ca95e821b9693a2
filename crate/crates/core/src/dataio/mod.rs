//! Trial data: container, file formats, covariance estimation, band-pass
//! filtering and a synthetic generator.

mod covariance;
mod csvio;
mod eegt;
mod fir;
mod manifest;
mod synth;

pub use covariance::{covariances, empirical_covariance, CovarianceConfig};
pub use csvio::{read_trial_csv, CsvTrial};
pub use eegt::{read_trials, read_trials_from, write_trials, write_trials_to};
pub use fir::{design_bandpass, fir_bandpass, filter_trial, FirConfig};
pub use manifest::{load_manifest, read_manifest, ManifestEntry};
pub use synth::{mixing_matrix, synth_generate, Mixing, SynthConfig};

pub(crate) use covariance::covariance_unchecked;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `T` trials of `C × N` samples with labels, session ids and channel names.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    trials: Vec<DMatrix<f64>>,
    labels: Vec<i8>,
    sessions: Vec<u32>,
    channel_names: Vec<String>,
}

impl TrialSet {
    pub fn new(
        trials: Vec<DMatrix<f64>>,
        labels: Vec<i8>,
        sessions: Vec<u32>,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        let t = trials.len();
        if labels.len() != t || sessions.len() != t {
            return Err(Error::invalid(format!(
                "{t} trials but {} labels and {} session ids",
                labels.len(),
                sessions.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::invalid(format!("label {l} is not -1 or +1")));
        }
        let c = channel_names.len();
        if let Some(first) = trials.first() {
            let shape = first.shape();
            if shape.0 != c {
                return Err(Error::invalid(format!(
                    "{} channel names for {}-channel trials",
                    c, shape.0
                )));
            }
            if trials.iter().any(|x| x.shape() != shape) {
                return Err(Error::invalid("trials differ in shape"));
            }
        }
        Ok(TrialSet {
            trials,
            labels,
            sessions,
            channel_names,
        })
    }

    pub fn trials(&self) -> &[DMatrix<f64>] {
        &self.trials
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn sessions(&self) -> &[u32] {
        &self.sessions
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn samples(&self) -> usize {
        self.trials.first().map_or(0, |x| x.ncols())
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Distinct session ids in order of first appearance.
    pub fn session_ids(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for &s in &self.sessions {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    pub fn subset(&self, indices: &[usize]) -> TrialSet {
        TrialSet {
            trials: indices.iter().map(|&i| self.trials[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            sessions: indices.iter().map(|&i| self.sessions[i]).collect(),
            channel_names: self.channel_names.clone(),
        }
    }

    /// Trials belonging to `session`.
    pub fn session(&self, session: u32) -> TrialSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.sessions[i] == session).collect();
        self.subset(&idx)
    }

    /// Concatenate sets recorded with the same channels.
    pub fn concat(sets: Vec<TrialSet>) -> Result<TrialSet> {
        let mut iter = sets.into_iter();
        let mut out = iter
            .next()
            .ok_or_else(|| Error::invalid("no trial sets to concatenate"))?;
        for s in iter {
            if s.channel_names != out.channel_names {
                return Err(Error::invalid("trial sets have different channels"));
            }
            if !s.is_empty() && !out.is_empty() && s.samples() != out.samples() {
                return Err(Error::invalid("trial sets have different trial lengths"));
            }
            out.trials.extend(s.trials);
            out.labels.extend(s.labels);
            out.sessions.extend(s.sessions);
        }
        Ok(out)
    }

    pub(crate) fn map_trials(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> TrialSet {
        TrialSet {
            trials: self.trials.iter().map(f).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn set_sessions(&mut self, session: u32) {
        self.sessions.iter_mut().for_each(|s| *s = session);
    }
}

/// `ch0`, `ch1`, … for `c` channels.
pub fn default_channel_names(c: usize) -> Vec<String> {
    (0..c).map(|i| format!("ch{i}")).collect()
}
