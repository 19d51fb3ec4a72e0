//! Soft-margin SVM training by sequential minimal optimization.
//!
//! Solves the dual
//!
//! ```text
//! min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K_ij
//! ```
//!
//! with second-order working-set selection. The PPK feature map is explicit,
//! so the Gram matrix is built from dot products of `q^rho` vectors and the
//! primal weight vector is available for the duality-gap check.

use super::{PpkConfig, SvmModel};
use crate::histogram::Histogram;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    /// Bound on the maximal KKT violation and on the relative duality gap.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            tolerance: 1e-3,
            max_iters: 100_000,
        }
    }
}

/// Solver diagnostics returned next to the model.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub kkt_violation: f64,
    pub primal: f64,
    pub dual: f64,
    /// Dual coefficients `alpha_i` for every training sample.
    pub alphas: Vec<f64>,
}

impl TrainReport {
    pub fn duality_gap(&self) -> f64 {
        self.primal - self.dual
    }
}

const TAU: f64 = 1e-12;

struct Problem<'a> {
    gram: Vec<f64>,
    y: &'a [f64],
    n: usize,
    c: f64,
}

impl Problem<'_> {
    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    #[inline]
    fn in_up(&self, t: usize, alpha: &[f64]) -> bool {
        (self.y[t] > 0.0 && alpha[t] < self.c) || (self.y[t] < 0.0 && alpha[t] > 0.0)
    }

    #[inline]
    fn in_low(&self, t: usize, alpha: &[f64]) -> bool {
        (self.y[t] > 0.0 && alpha[t] > 0.0) || (self.y[t] < 0.0 && alpha[t] < self.c)
    }

    /// Returns `(i, j, violation)`, or `None` when no violating pair exists.
    fn select(&self, alpha: &[f64], grad: &[f64]) -> Option<(usize, usize, f64)> {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..self.n {
            if self.in_up(t, alpha) {
                let v = -self.y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..self.n {
            if !self.in_low(t, alpha) {
                continue;
            }
            let v = -self.y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let a = (self.k(i, i) + self.k(t, t) - 2.0 * self.k(i, t)).max(TAU);
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            return None;
        }
        Some((i, j, gmax - gmin))
    }

    /// Analytic two-variable update keeping `y'a` fixed.
    fn step(&self, i: usize, j: usize, alpha: &mut [f64], grad: &mut [f64]) {
        let (yi, yj, c) = (self.y[i], self.y[j], self.c);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j)).max(TAU);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..self.n {
            let yt = self.y[t];
            grad[t] += yt * (yi * self.k(t, i) * di + yj * self.k(t, j) * dj);
        }
    }

    /// Bias from the KKT conditions: mean over free vectors, else the
    /// midpoint of the feasible interval.
    fn bias(&self, alpha: &[f64], grad: &[f64]) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum, mut free) = (0.0, 0usize);
        for t in 0..self.n {
            let yg = self.y[t] * grad[t];
            if alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[t] <= 0.0 {
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
        let rho = if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }

    /// `(primal, dual)` objective values for the current iterate.
    fn objectives(&self, alpha: &[f64], grad: &[f64], b: f64) -> (f64, f64) {
        // grad_t = y_t (sum_j a_j y_j K_tj) - 1, so y_t grad_t + y_t ... gives f
        let mut w2 = 0.0;
        let mut hinge = 0.0;
        let mut sum_alpha = 0.0;
        for t in 0..self.n {
            let margin = grad[t] + 1.0; // y_t * (w . phi_t)
            w2 += alpha[t] * margin;
            hinge += (1.0 - (margin + self.y[t] * b)).max(0.0);
            sum_alpha += alpha[t];
        }
        let primal = 0.5 * w2 + self.c * hinge;
        let dual = sum_alpha - 0.5 * w2;
        (primal, dual)
    }
}

/// Trains a soft-margin PPK-SVM. Labels must be `+1.0` or `-1.0`.
pub fn train_batch(
    samples: &[Histogram],
    labels: &[f64],
    cfg: &TrainConfig,
    ppk: PpkConfig,
) -> Result<(SvmModel, TrainReport)> {
    if samples.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} samples but {} labels",
            samples.len(),
            labels.len()
        )));
    }
    if !(cfg.c > 0.0) || !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidArgument(
            "C and tolerance must be positive".into(),
        ));
    }
    if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    let scheme = samples[0].scheme();
    if let Some(s) = samples.iter().find(|s| s.scheme() != scheme) {
        return Err(Error::SchemeMismatch {
            left: s.len(),
            right: scheme.len(),
        });
    }

    // The dual is symmetric under y -> -y with (beta, b) -> -(beta, b).
    // Training in the orientation where the first label is +1 makes that
    // symmetry exact rather than tolerance-level.
    let flip = labels[0] < 0.0;
    let y: Vec<f64> = labels.iter().map(|&l| if flip { -l } else { l }).collect();

    let features: Vec<Vec<f64>> = samples.iter().map(|s| ppk.feature_map(s)).collect();
    let n = samples.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = features[i]
                .iter()
                .zip(&features[j])
                .map(|(a, b)| a * b)
                .sum();
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    let problem = Problem {
        gram,
        y: &y,
        n,
        c: cfg.c,
    };

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let (violation, b, primal, dual) = loop {
        let selected = problem.select(&alpha, &grad);
        let violation = selected.map_or(0.0, |s| s.2);
        if violation <= cfg.tolerance {
            let b = problem.bias(&alpha, &grad);
            let (primal, dual) = problem.objectives(&alpha, &grad, b);
            let gap_ok = primal - dual <= cfg.tolerance * primal.abs().max(1.0);
            if gap_ok || violation <= 1e-12 || selected.is_none() {
                break (violation, b, primal, dual);
            }
        }
        if iterations >= cfg.max_iters {
            return Err(Error::NonConvergence(cfg.max_iters));
        }
        let (i, j, _) = selected.expect("violating pair");
        problem.step(i, j, &mut alpha, &mut grad);
        iterations += 1;
    };

    let sign = if flip { -1.0 } else { 1.0 };
    let mut support = Vec::new();
    let mut betas = Vec::new();
    for t in 0..n {
        if alpha[t] > cfg.tolerance {
            support.push(samples[t].clone());
            betas.push(sign * y[t] * alpha[t]);
        }
    }
    let model = SvmModel::new(scheme, ppk, support, betas, sign * b)?;
    Ok((
        model,
        TrainReport {
            iterations,
            kkt_violation: violation,
            primal,
            dual,
            alphas: alpha,
        },
    ))
}
