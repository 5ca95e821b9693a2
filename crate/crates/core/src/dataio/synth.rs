use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{default_channel_names, TrialSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Mixing {
    /// `U diag(s) Vᵀ` with random orthogonal `U`, `V` and `s ∈ [0.5, 2]`.
    #[default]
    Random,
    Identity,
}

/// Linear mixing model `X = A_t S + σE` with class-dependent source
/// variances on the first `discriminative_sources` sources and unit variance
/// on the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub channels: usize,
    pub samples: usize,
    pub trials_per_class: usize,
    pub seed: u64,
    pub discriminative_sources: usize,
    pub positive_variances: Vec<f64>,
    pub negative_variances: Vec<f64>,
    pub noise_sigma: f64,
    /// Scale of the random rotation applied to the mixing matrix per trial.
    pub nonstationarity: f64,
    pub mixing: Mixing,
    /// Trials are split into this many consecutive sessions.
    pub sessions: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            channels: 8,
            samples: 250,
            trials_per_class: 200,
            seed: 0,
            discriminative_sources: 2,
            positive_variances: vec![4.0, 1.0],
            negative_variances: vec![1.0, 4.0],
            noise_sigma: 0.5,
            nonstationarity: 0.0,
            mixing: Mixing::Random,
            sessions: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.channels == 0 || self.samples == 0 || self.trials_per_class == 0 {
            return bad("channels, samples and trials per class must be positive".into());
        }
        if self.discriminative_sources > self.channels {
            return bad(format!(
                "{} discriminative sources exceed {} channels",
                self.discriminative_sources, self.channels
            ));
        }
        for v in [&self.positive_variances, &self.negative_variances] {
            if v.len() != self.discriminative_sources {
                return bad(format!(
                    "expected {} class variances, got {}",
                    self.discriminative_sources,
                    v.len()
                ));
            }
            if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return bad("class variances must be positive".into());
            }
        }
        if !(self.noise_sigma >= 0.0) || !(self.nonstationarity >= 0.0) {
            return bad("noise level and nonstationarity must be non-negative".into());
        }
        if self.sessions == 0 || self.sessions > self.trials_per_class {
            return bad(format!("session count {} is out of range", self.sessions));
        }
        Ok(())
    }

    /// Source variances for a class label.
    pub fn source_variances(&self, label: i8) -> DVector<f64> {
        let class = if label == 1 {
            &self.positive_variances
        } else {
            &self.negative_variances
        };
        DVector::from_fn(self.channels, |i, _| class.get(i).copied().unwrap_or(1.0))
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// The static mixing matrix `A` the generator uses for `cfg`.
pub fn mixing_matrix(cfg: &SynthConfig) -> DMatrix<f64> {
    let c = cfg.channels;
    match cfg.mixing {
        Mixing::Identity => DMatrix::identity(c, c),
        Mixing::Random => {
            let mut rng = stream(cfg.seed, 1);
            let u = gaussian(&mut rng, c, c).qr().q();
            let v = gaussian(&mut rng, c, c).qr().q();
            let s = DVector::from_fn(c, |_, _| (rng.gen_range(-1.0..1.0) * 2f64.ln()).exp());
            u * DMatrix::from_diagonal(&s) * v.transpose()
        }
    }
}

/// Cayley transform of a random skew-symmetric matrix: a rotation that
/// approaches the identity as `scale → 0`.
fn random_rotation(rng: &mut ChaCha8Rng, c: usize, scale: f64) -> DMatrix<f64> {
    let g = gaussian(rng, c, c) * scale;
    let k = (&g - g.transpose()) * 0.5;
    let eye = DMatrix::identity(c, c);
    let inv = (&eye + &k).try_inverse().expect("I + K is invertible for skew K");
    (eye - k) * inv
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<TrialSet> {
    cfg.validate()?;
    let (c, n) = (cfg.channels, cfg.samples);
    let a = mixing_matrix(cfg);
    let mut rng = stream(cfg.seed, 2);
    let total = 2 * cfg.trials_per_class;
    let mut trials = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut sessions = Vec::with_capacity(total);
    for t in 0..total {
        let label: i8 = if t % 2 == 0 { 1 } else { -1 };
        let std = cfg.source_variances(label).map(f64::sqrt);
        let mut sources = gaussian(&mut rng, c, n);
        for (i, mut row) in sources.row_iter_mut().enumerate() {
            row *= std[i];
        }
        let mix = if cfg.nonstationarity > 0.0 {
            &a * random_rotation(&mut rng, c, cfg.nonstationarity)
        } else {
            a.clone()
        };
        let mut x = mix * sources;
        if cfg.noise_sigma > 0.0 {
            x += gaussian(&mut rng, c, n) * cfg.noise_sigma;
        }
        trials.push(x);
        labels.push(label);
        sessions.push(((t / 2) * cfg.sessions / cfg.trials_per_class) as u32);
    }
    TrialSet::new(trials, labels, sessions, default_channel_names(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_covariance(set: &TrialSet, label: i8) -> DMatrix<f64> {
        let c = set.channels();
        let mut sum = DMatrix::zeros(c, c);
        let mut count = 0;
        for (x, &l) in set.trials().iter().zip(set.labels()) {
            if l == label {
                sum += x * x.transpose() / x.ncols() as f64;
                count += 1;
            }
        }
        sum / count as f64
    }

    #[test]
    fn identity_mixing_recovers_variances() {
        let cfg = SynthConfig {
            channels: 2,
            samples: 500,
            trials_per_class: 40,
            noise_sigma: 0.0,
            mixing: Mixing::Identity,
            ..SynthConfig::default()
        };
        let set = synth_generate(&cfg).unwrap();
        let pos = class_covariance(&set, 1);
        let neg = class_covariance(&set, -1);
        for (got, want) in [(pos[(0, 0)], 4.0), (pos[(1, 1)], 1.0), (neg[(0, 0)], 1.0), (neg[(1, 1)], 4.0)] {
            assert!((got - want).abs() < 0.1 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn mixed_covariance_matches_closed_form() {
        let cfg = SynthConfig {
            channels: 4,
            samples: 500,
            trials_per_class: 40,
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let set = synth_generate(&cfg).unwrap();
        let a = mixing_matrix(&cfg);
        for label in [1i8, -1] {
            let oracle = &a * DMatrix::from_diagonal(&cfg.source_variances(label)) * a.transpose();
            let got = class_covariance(&set, label);
            assert!((&got - &oracle).norm() < 0.1 * oracle.norm());
        }
    }

    #[test]
    fn reproducible_and_structured() {
        let cfg = SynthConfig {
            trials_per_class: 6,
            samples: 20,
            sessions: 3,
            nonstationarity: 0.1,
            ..SynthConfig::default()
        };
        let a = synth_generate(&cfg).unwrap();
        assert_eq!(a, synth_generate(&cfg).unwrap());
        let b = synth_generate(&SynthConfig { seed: 1, ..cfg.clone() }).unwrap();
        assert_ne!(a.trials(), b.trials());
        assert_eq!(&a.labels()[..4], &[1, -1, 1, -1]);
        assert_eq!(a.session_ids(), vec![0, 1, 2]);
        for s in 0..3 {
            let part = a.session(s);
            assert_eq!(part.len(), 4);
            assert_eq!(part.labels().iter().filter(|&&l| l == 1).count(), 2);
        }
        let r = random_rotation(&mut stream(0, 9), 5, 0.3);
        assert!((r.transpose() * &r - DMatrix::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let base = SynthConfig::default();
        for cfg in [
            SynthConfig { discriminative_sources: 9, ..base.clone() },
            SynthConfig { positive_variances: vec![1.0], ..base.clone() },
            SynthConfig { noise_sigma: -1.0, ..base.clone() },
            SynthConfig { negative_variances: vec![0.0, 1.0], ..base.clone() },
            SynthConfig { sessions: 0, ..base.clone() },
        ] {
            assert!(matches!(synth_generate(&cfg), Err(Error::InvalidInput(_))));
        }
    }
}
