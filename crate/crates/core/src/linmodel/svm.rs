use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LinearModel, TangentDataset};
use crate::error::{Error, Result};

/// Stopping rule for the dual coordinate solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Maximal KKT violation `max_up(−y∇f) − min_low(−y∇f)` at which the
    /// solver stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep the dual objective after every update.
    #[serde(default)]
    pub record_objective: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            tolerance: 1e-10,
            max_iterations: 100_000,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmReport {
    pub iterations: usize,
    pub converged: bool,
    /// Primal value `½‖w‖² + (reg/n) Σ max(0, 1 − y(wᵀx + b))`.
    pub primal_objective: f64,
    /// Primal minus dual objective; non-negative up to rounding.
    pub duality_gap: f64,
    pub support_vectors: usize,
    /// Dual objective (to be minimized) after each update, if requested.
    pub objective_trace: Vec<f64>,
}

/// L2-regularized linear SVM with unpenalized intercept.
///
/// Minimizes `½‖w‖² + (reg/n) Σ_i max(0, 1 − y_i (wᵀx_i + b))`, so the loss
/// is the mean hinge and the objective does not change when every sample is
/// repeated.
pub fn fit_linear_svm(data: &TangentDataset, reg: f64) -> Result<LinearModel> {
    fit_linear_svm_with_report(data, reg, &SvmConfig::default()).map(|(m, _)| m)
}

pub fn fit_linear_svm_with_report(
    data: &TangentDataset,
    reg: f64,
    cfg: &SvmConfig,
) -> Result<(LinearModel, SvmReport)> {
    if !(reg > 0.0) || !reg.is_finite() {
        return Err(Error::invalid(format!("SVM regularization must be positive, got {reg}")));
    }
    if !(cfg.tolerance > 0.0) || cfg.max_iterations == 0 {
        return Err(Error::invalid("SVM needs a positive tolerance and iteration cap"));
    }
    data.require_two_classes(2)?;

    let x = data.vectors();
    let y: Vec<f64> = data.labels().iter().map(|&l| f64::from(l)).collect();
    let n = y.len();
    let upper = reg / n as f64;
    let gram = x * x.transpose();

    let mut solver = Smo {
        gram: &gram,
        y: &y,
        upper,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        let Some((i, j)) = solver.select(cfg.tolerance) else {
            converged = true;
            break;
        };
        solver.update(i, j);
        iterations += 1;
        if cfg.record_objective {
            trace.push(solver.dual_objective());
        }
    }
    if !converged {
        converged = solver.select(cfg.tolerance).is_none();
        if !converged {
            warn!(
                "linear SVM stopped at the iteration cap ({}) before reaching tolerance {:e}",
                cfg.max_iterations, cfg.tolerance
            );
        }
    }

    let weights = x.transpose() * DVector::from_fn(n, |i, _| solver.alpha[i] * y[i]);
    let intercept = -solver.rho();
    let primal = primal_objective(x, &y, &weights, intercept, upper);
    let dual = -solver.dual_objective();
    let support_vectors = solver.alpha.iter().filter(|&&a| a > 0.0).count();
    let model = LinearModel::new(weights, intercept, reg)?;
    Ok((
        model,
        SvmReport {
            iterations,
            converged,
            primal_objective: primal,
            duality_gap: primal - dual,
            support_vectors,
            objective_trace: trace,
        },
    ))
}

pub(crate) fn primal_objective(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &DVector<f64>,
    b: f64,
    upper: f64,
) -> f64 {
    let scores = x * w;
    let hinge: f64 = scores
        .iter()
        .zip(y)
        .map(|(s, y)| (1.0 - y * (s + b)).max(0.0))
        .sum();
    0.5 * w.norm_squared() + upper * hinge
}

/// Sequential minimal optimization on
/// `min ½ αᵀQα − eᵀα` s.t. `0 ≤ α ≤ U`, `yᵀα = 0`, `Q_ij = y_i y_j x_iᵀx_j`,
/// with second-order working-set selection.
struct Smo<'a> {
    gram: &'a DMatrix<f64>,
    y: &'a [f64],
    upper: f64,
    alpha: Vec<f64>,
    /// `Qα − e`.
    grad: Vec<f64>,
}

const TAU: f64 = 1e-12;

impl Smo<'_> {
    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.upper
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.upper
        }
    }

    fn select(&self, tolerance: f64) -> Option<(usize, usize)> {
        let n = self.y.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let yg = self.y[t] * self.grad[t];
            gmax2 = gmax2.max(yg);
            let b = gmax + yg;
            if b > 0.0 {
                let mut a = self.gram[(i, i)] + self.gram[(t, t)] - 2.0 * self.gram[(i, t)];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < tolerance || j == usize::MAX {
            return None;
        }
        Some((i, j))
    }

    fn q(&self, i: usize, j: usize) -> f64 {
        self.y[i] * self.y[j] * self.gram[(i, j)]
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.upper;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qii = self.gram[(i, i)];
        let qjj = self.gram[(j, j)];
        let qij = self.q(i, j);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for k in 0..self.y.len() {
            self.grad[k] += self.q(i, k) * di + self.q(j, k) * dj;
        }
    }

    /// `½ αᵀQα − eᵀα = ½ αᵀ(∇f − e)`.
    fn dual_objective(&self) -> f64 {
        0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    }

    /// Offset `ρ` with decision `Σ α_i y_i x_iᵀx − ρ`: the mean of `y∇f` over
    /// free variables, else the middle of the feasible interval.
    fn rho(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free = 0usize;
        let mut sum = 0.0;
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            let at_upper = self.alpha[t] >= self.upper;
            let at_lower = self.alpha[t] <= 0.0;
            if at_upper {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if at_lower {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}
