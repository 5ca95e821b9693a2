use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TrialSet;
use crate::error::{Error, Result};

/// Zero-phase FIR band-pass. `low_hz` and `high_hz` are pass-band edges;
/// the sinc cutoffs sit half a transition width outside them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirConfig {
    pub low_hz: f64,
    pub high_hz: f64,
    pub fs_hz: f64,
    pub taps: usize,
}

impl FirConfig {
    pub fn new(fs_hz: f64) -> Self {
        FirConfig {
            low_hz: 8.0,
            high_hz: 32.0,
            fs_hz,
            taps: 129,
        }
    }

    fn validate(&self) -> Result<()> {
        let nyquist = self.fs_hz / 2.0;
        if !(self.fs_hz > 0.0 && self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < nyquist) {
            return Err(Error::invalid(format!(
                "band-pass needs 0 < low < high < fs/2, got {}..{} Hz at fs {} Hz",
                self.low_hz, self.high_hz, self.fs_hz
            )));
        }
        if self.taps < 3 || self.taps % 2 == 0 {
            return Err(Error::invalid(format!("tap count must be odd and >= 3, got {}", self.taps)));
        }
        Ok(())
    }
}

fn sinc_lowpass(cutoff: f64, m: f64) -> f64 {
    if m == 0.0 {
        2.0 * cutoff
    } else {
        (2.0 * PI * cutoff * m).sin() / (PI * m)
    }
}

/// Hamming-windowed sinc band-pass taps.
pub fn design_bandpass(cfg: &FirConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let nyquist = cfg.fs_hz / 2.0;
    // Hamming main-lobe transition width is about 3.3 fs / taps.
    let half_transition = 3.3 * cfg.fs_hz / (2.0 * cfg.taps as f64);
    let low = (cfg.low_hz - half_transition).max(cfg.low_hz / 2.0) / cfg.fs_hz;
    let high = (cfg.high_hz + half_transition).min((cfg.high_hz + nyquist) / 2.0) / cfg.fs_hz;
    let centre = (cfg.taps - 1) as f64 / 2.0;
    Ok((0..cfg.taps)
        .map(|i| {
            let m = i as f64 - centre;
            let window = 0.54 - 0.46 * (2.0 * PI * i as f64 / (cfg.taps - 1) as f64).cos();
            window * (sinc_lowpass(high, m) - sinc_lowpass(low, m))
        })
        .collect())
}

/// Same-length convolution with a centred odd-length kernel.
fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let half = h.len() / 2;
    let n = x.len() as isize;
    (0..x.len())
        .map(|i| {
            let mut acc = 0.0;
            for (k, &hk) in h.iter().enumerate() {
                let j = i as isize + half as isize - k as isize;
                if (0..n).contains(&j) {
                    acc += hk * x[j as usize];
                }
            }
            acc
        })
        .collect()
}

/// Odd reflection about the end points, as used for zero-phase filtering.
fn pad_reflect(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        out.push(2.0 * x[0] - x[i]);
    }
    out.extend_from_slice(x);
    for i in 1..=pad {
        out.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    out
}

fn filter_row(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.len() < 2 {
        return x.iter().map(|v| v * h.iter().sum::<f64>().powi(2)).collect();
    }
    let pad = (3 * h.len()).min(x.len() - 1);
    let padded = pad_reflect(x, pad);
    let mut y = convolve_same(&padded, h);
    y.reverse();
    let mut y = convolve_same(&y, h);
    y.reverse();
    y[pad..pad + x.len()].to_vec()
}

/// Filter every channel of a `C × N` trial forward and backward.
pub fn filter_trial(trial: &DMatrix<f64>, taps: &[f64]) -> DMatrix<f64> {
    let mut out = trial.clone();
    for (i, row) in trial.row_iter().enumerate() {
        let x: Vec<f64> = row.iter().copied().collect();
        for (j, v) in filter_row(&x, taps).into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

pub fn fir_bandpass(set: &TrialSet, cfg: &FirConfig) -> Result<TrialSet> {
    let h = design_bandpass(cfg)?;
    Ok(set.map_trials(|x| filter_trial(x, &h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `|H(f)|` of the taps by direct evaluation of the transfer function.
    fn gain(h: &[f64], f: f64, fs: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &hk) in h.iter().enumerate() {
            let w = 2.0 * PI * f / fs * k as f64;
            re += hk * w.cos();
            im -= hk * w.sin();
        }
        (re * re + im * im).sqrt()
    }

    fn sine(f: f64, fs: f64, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(1, n, |_, t| (2.0 * PI * f * t as f64 / fs).sin())
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn pass_and_stop_band() {
        let cfg = FirConfig::new(250.0);
        let h = design_bandpass(&cfg).unwrap();
        assert_eq!(h.len(), 129);
        for (f, pass) in [(10.0, true), (20.0, true), (30.0, true), (2.0, false), (60.0, false)] {
            let x = sine(f, 250.0, 2000);
            let y = filter_trial(&x, &h);
            // steady-state part only
            let inner = |m: &DMatrix<f64>| m.row(0).iter().skip(300).take(1400).copied().collect::<Vec<_>>();
            let ratio = rms(&inner(&y)) / rms(&inner(&x));
            let oracle = gain(&h, f, 250.0).powi(2);
            assert!((ratio - oracle).abs() < 0.02, "{f} Hz: {ratio} vs {oracle}");
            if pass {
                assert!(ratio >= 0.9, "{f} Hz passes with {ratio}");
            } else {
                assert!(ratio <= 0.1, "{f} Hz leaks {ratio}");
            }
        }
    }

    #[test]
    fn zero_phase() {
        let h = design_bandpass(&FirConfig::new(250.0)).unwrap();
        let x = sine(15.0, 250.0, 1500);
        let y = filter_trial(&x, &h);
        let xcorr = |d: usize| (500..1000).map(|t| x[(0, t)] * y[(0, t + d)]).sum::<f64>();
        let back = (500..1000).map(|t| x[(0, t + 1)] * y[(0, t)]).sum::<f64>();
        assert!(xcorr(0) > xcorr(1));
        assert!(xcorr(0) > back);
    }

    #[test]
    fn zero_signal_and_validation() {
        let h = design_bandpass(&FirConfig::new(250.0)).unwrap();
        assert_eq!(filter_trial(&DMatrix::zeros(2, 300), &h), DMatrix::zeros(2, 300));
        for cfg in [
            FirConfig { low_hz: 0.0, ..FirConfig::new(250.0) },
            FirConfig { low_hz: 40.0, ..FirConfig::new(250.0) },
            FirConfig { high_hz: 125.0, ..FirConfig::new(250.0) },
            FirConfig { taps: 128, ..FirConfig::new(250.0) },
        ] {
            assert!(matches!(design_bandpass(&cfg), Err(Error::InvalidInput(_))));
        }
    }

    #[test]
    fn short_trials() {
        let h = design_bandpass(&FirConfig::new(250.0)).unwrap();
        let x = sine(10.0, 250.0, 40);
        assert_eq!(filter_trial(&x, &h).shape(), (1, 40));
    }
}
