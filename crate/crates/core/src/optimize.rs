//! Ascent drivers: L-BFGS maximization and fixed-point iteration.

use std::collections::VecDeque;

use crate::{Error, Result};

/// A smooth objective to maximize.
pub trait AscentProblem {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x)?, self.gradient(x)?))
    }

    /// Maps a trial point back into the problem's domain. Identity by default.
    fn project(&self, _x: &mut [f64]) {}
}

/// An [`AscentProblem`] built from two closures.
pub struct FnProblem<F, G> {
    dim: usize,
    value: F,
    gradient: G,
}

impl<F, G> FnProblem<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dim: usize, value: F, gradient: G) -> Self {
        Self {
            dim,
            value,
            gradient,
        }
    }
}

impl<F, G> AscentProblem for FnProblem<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.value)(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.gradient)(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    /// The accepted step was shorter than the configured step tolerance.
    SmallStep,
    MaxIterations,
    /// Backtracking could not find an ascent step.
    StepCollapse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AscentResult {
    pub argmax: Vec<f64>,
    /// Objective at `argmax`; `None` for fixed-point runs without an objective.
    pub value: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub trajectory: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsOptions {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Stop once an accepted step moves less than this (0 disables).
    pub step_tol: f64,
    /// Length of the very first trial step.
    pub initial_step: f64,
    /// Upper bound on the length of any trial step.
    pub max_step: f64,
    /// Armijo sufficient-increase constant.
    pub armijo_c1: f64,
    /// Backtracking shrink factor.
    pub backtrack: f64,
    pub min_step: f64,
    pub record_trajectory: bool,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 5,
            grad_tol: 1e-4,
            max_iters: 50,
            step_tol: 0.0,
            initial_step: 1.0,
            max_step: f64::INFINITY,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            min_step: 1e-12,
            record_trajectory: false,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_finite(v: f64, g: &[f64]) -> Result<()> {
    if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("objective evaluation"));
    }
    Ok(())
}

/// Two-loop recursion: returns `H * grad` for the inverse-Hessian estimate
/// of the negated objective.
fn two_loop(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, r) in pairs.iter().rev() {
        let a = r * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, r), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = r * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q
}

/// Maximizes `problem` from `x0` with L-BFGS and backtracking Armijo line
/// search. Accepted steps never decrease the objective.
pub fn lbfgs_maximize(problem: &impl AscentProblem, x0: &[f64], opts: &LbfgsOptions) -> Result<AscentResult> {
    if x0.len() != problem.dim() {
        return Err(Error::LengthMismatch(format!(
            "start point has {} coordinates, problem has {}",
            x0.len(),
            problem.dim()
        )));
    }
    let mut x = x0.to_vec();
    problem.project(&mut x);
    let (f, g) = problem.value_and_gradient(&x)?;
    check_finite(f, &g)?;
    // minimize phi = -f
    let mut phi = -f;
    let mut grad: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut trajectory = Vec::new();
    if opts.record_trajectory {
        trajectory.push(x.clone());
    }

    let mut iterations = 0;
    let stop = loop {
        if norm(&grad) <= opts.grad_tol {
            break StopReason::GradientTolerance;
        }
        if iterations >= opts.max_iters {
            break StopReason::MaxIterations;
        }
        let mut dir: Vec<f64> = if pairs.is_empty() {
            let s = opts.initial_step / norm(&grad);
            grad.iter().map(|v| -v * s).collect()
        } else {
            two_loop(&grad, &pairs).iter().map(|v| -v).collect()
        };
        if dot(&dir, &grad) >= 0.0 {
            pairs.clear();
            let s = opts.initial_step / norm(&grad);
            dir = grad.iter().map(|v| -v * s).collect();
        }
        let len = norm(&dir);
        if len > opts.max_step {
            dir.iter_mut().for_each(|d| *d *= opts.max_step / len);
        }

        let mut alpha = 1.0;
        let accepted = loop {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
            problem.project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let slope = dot(&grad, &step);
            if norm(&step) > 0.0 && slope < 0.0 {
                let (ft, gt) = problem.value_and_gradient(&trial)?;
                check_finite(ft, &gt)?;
                if -ft <= phi + opts.armijo_c1 * slope {
                    break Some((trial, step, -ft, gt));
                }
            }
            alpha *= opts.backtrack;
            if alpha * norm(&dir) < opts.min_step {
                break None;
            }
        };
        let Some((trial, step, phi_new, g_new)) = accepted else {
            break StopReason::StepCollapse;
        };
        iterations += 1;
        let grad_new: Vec<f64> = g_new.iter().map(|v| -v).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        // skip pairs that would break positive definiteness
        if sy > 1e-16 * norm(&step) * norm(&y) && sy > 0.0 {
            if pairs.len() == opts.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((step.clone(), y, 1.0 / sy));
        }
        let moved = norm(&step);
        x = trial;
        phi = phi_new;
        grad = grad_new;
        if opts.record_trajectory {
            trajectory.push(x.clone());
        }
        if opts.step_tol > 0.0 && moved < opts.step_tol {
            break if norm(&grad) <= opts.grad_tol {
                StopReason::GradientTolerance
            } else {
                StopReason::SmallStep
            };
        }
    };

    Ok(AscentResult {
        argmax: x,
        value: Some(-phi),
        iterations,
        converged: stop == StopReason::GradientTolerance,
        stop,
        trajectory,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    /// Stop once `|c' - c| < tol`.
    pub tol: f64,
    pub max_iters: usize,
    pub record_trajectory: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 0.1,
            max_iters: 20,
            record_trajectory: false,
        }
    }
}

/// Iterates `c <- step(c)` until the update is shorter than `opts.tol`.
pub fn fixed_point_iterate<S>(mut step: S, c0: &[f64], opts: &FixedPointOptions) -> Result<AscentResult>
where
    S: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut c = c0.to_vec();
    let mut trajectory = Vec::new();
    if opts.record_trajectory {
        trajectory.push(c.clone());
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        let next = step(&c)?;
        if next.len() != c.len() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fixed-point step"));
        }
        iterations += 1;
        let moved = norm(&next.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>());
        c = next;
        if opts.record_trajectory {
            trajectory.push(c.clone());
        }
        if moved < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(AscentResult {
        argmax: c,
        value: None,
        iterations,
        converged,
        stop: if converged {
            StopReason::SmallStep
        } else {
            StopReason::MaxIterations
        },
        trajectory,
    })
}
