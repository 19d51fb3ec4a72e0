//! The 1-D signed-weight counterexample for the modified mean shift.
//!
//! A signed Gaussian mixture `f(x) = sum_i w_i exp(-(x - mu_i)^2 / (2 h^2))`
//! is iterated with the absolute-denominator update until it stops moving.
//! The gradient there is compared against the true extrema of `f`, found by
//! a dense grid and bisection on `f'`.

use std::fmt;
use std::str::FromStr;

use super::{collins_ms_step, WeightField};
use crate::histogram::SpatialKernel;
use crate::imgproc::{Region, RegionPixel};
use crate::optimize::{fixed_point_iterate, lbfgs_maximize, FixedPointOptions, FnProblem, LbfgsOptions};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    pub centers: Vec<f64>,
    pub weights: Vec<f64>,
    pub h: f64,
    pub start: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self {
            centers: vec![-2.0, 2.0, 0.3],
            weights: vec![1.0, 1.0, -1.2],
            h: 1.0,
            start: 0.25,
        }
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::EmptyInput("mixture centers"));
        }
        if self.centers.len() != self.weights.len() {
            return Err(Error::LengthMismatch(format!(
                "{} centers, {} weights",
                self.centers.len(),
                self.weights.len()
            )));
        }
        if !(self.h > 0.0) || !self.start.is_finite() {
            return Err(Error::InvalidArgument("bandwidth must be > 0 and start finite".into()));
        }
        if self.centers.iter().chain(&self.weights).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mixture spec"));
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * (-(x - m).powi(2) / (2.0 * self.h * self.h)).exp())
            .sum()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * (-(x - m).powi(2) / (2.0 * self.h * self.h)).exp() * (m - x) / (self.h * self.h))
            .sum()
    }

    fn domain(&self) -> (f64, f64) {
        let lo = self.centers.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo - 3.0 * self.h, hi + 3.0 * self.h)
    }
}

impl fmt::Display for MixtureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(
            f,
            "centers={};weights={};h={};start={}",
            join(&self.centers),
            join(&self.weights),
            self.h,
            self.start
        )
    }
}

/// Parses `centers=a,b,..;weights=..;h=..;start=..`. Missing keys keep the defaults.
impl FromStr for MixtureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = MixtureSpec::default();
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::malformed("mixture spec", format!("{v:?}: {e}")))
        };
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::malformed("mixture spec", format!("expected key=value, got {part:?}")))?;
            match key.trim() {
                "centers" => spec.centers = val.split(',').map(num).collect::<Result<_>>()?,
                "weights" => spec.weights = val.split(',').map(num).collect::<Result<_>>()?,
                "h" => spec.h = num(val)?,
                "start" => spec.start = num(val)?,
                other => return Err(Error::malformed("mixture spec", format!("unknown key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

impl fmt::Display for ExtremumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtremumKind::Maximum => "maximum",
            ExtremumKind::Minimum => "minimum",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub location: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AppendixReport {
    pub spec: MixtureSpec,
    pub collins_fixed_point: f64,
    pub collins_iterations: usize,
    pub collins_converged: bool,
    pub gradient_norm_there: f64,
    pub extrema: Vec<Extremum>,
    /// True extremum closest to the modified-MS fixed point.
    pub nearest_extremum: Option<Extremum>,
    pub lbfgs_point: f64,
    pub lbfgs_gradient_norm: f64,
    /// L-BFGS ended on a grid-confirmed local maximum.
    pub lbfgs_at_local_max: bool,
    /// The modified-MS fixed point has `|f'| > STATIONARY_TOL`.
    pub non_stationary: bool,
}

/// Gradient norms above this count as non-stationary.
pub const STATIONARY_TOL: f64 = 1e-2;

const GRID_POINTS: usize = 20_001;

fn true_extrema(spec: &MixtureSpec) -> (Vec<Extremum>, f64) {
    let (lo, hi) = spec.domain();
    let dx = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut out = Vec::new();
    let mut prev = spec.derivative(lo);
    for i in 1..GRID_POINTS {
        let x = lo + dx * i as f64;
        let d = spec.derivative(x);
        if prev != 0.0 && d != 0.0 && (prev > 0.0) != (d > 0.0) || d == 0.0 && prev != 0.0 {
            let kind = if prev > 0.0 {
                ExtremumKind::Maximum
            } else {
                ExtremumKind::Minimum
            };
            let (mut a, mut b) = (x - dx, x);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (spec.derivative(m) > 0.0) == (prev > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            let location = 0.5 * (a + b);
            out.push(Extremum {
                location,
                value: spec.value(location),
                kind,
            });
        }
        prev = d;
    }
    (out, dx)
}

fn nearest(extrema: &[Extremum], x: f64) -> Option<Extremum> {
    extrema
        .iter()
        .copied()
        .min_by(|a, b| (a.location - x).abs().total_cmp(&(b.location - x).abs()))
}

/// Runs the modified mean shift and L-BFGS on the mixture from `spec.start`.
pub fn appendix_demo(spec: &MixtureSpec) -> Result<AppendixReport> {
    spec.validate()?;
    let h = [spec.h, spec.h];
    let weights = WeightField::new(spec.weights.clone())?;
    let step = |c: &[f64]| -> Result<Vec<f64>> {
        let region = Region {
            center: [c[0], 0.0],
            bandwidth: h,
            pixels: spec
                .centers
                .iter()
                .map(|&m| RegionPixel {
                    pos: [m, 0.0],
                    color: [0, 0, 0],
                })
                .collect(),
        };
        Ok(vec![collins_ms_step(&region, &weights, [c[0], 0.0], h, SpatialKernel::Gaussian)?[0]])
    };
    let fp = fixed_point_iterate(
        step,
        &[spec.start],
        &FixedPointOptions {
            tol: 1e-12,
            max_iters: 100_000,
            record_trajectory: false,
        },
    )?;
    let x_fp = fp.argmax[0];
    let (extrema, spacing) = true_extrema(spec);

    let problem = FnProblem::new(1, |x: &[f64]| spec.value(x[0]), |x: &[f64]| vec![spec.derivative(x[0])]);
    let lb = lbfgs_maximize(
        &problem,
        &[spec.start],
        &LbfgsOptions {
            grad_tol: 1e-9,
            max_iters: 500,
            initial_step: 0.1 * spec.h,
            max_step: 0.5 * spec.h,
            ..LbfgsOptions::default()
        },
    )?;
    let x_lb = lb.argmax[0];
    let lb_grad = spec.derivative(x_lb).abs();
    let lbfgs_at_local_max = nearest(&extrema, x_lb)
        .is_some_and(|e| e.kind == ExtremumKind::Maximum && (e.location - x_lb).abs() <= spacing);
    let gradient_norm_there = spec.derivative(x_fp).abs();
    Ok(AppendixReport {
        spec: spec.clone(),
        collins_fixed_point: x_fp,
        collins_iterations: fp.iterations,
        collins_converged: fp.converged,
        gradient_norm_there,
        nearest_extremum: nearest(&extrema, x_fp),
        extrema,
        lbfgs_point: x_lb,
        lbfgs_gradient_norm: lb_grad,
        lbfgs_at_local_max,
        non_stationary: gradient_norm_there > STATIONARY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_argmax_near(spec: &MixtureSpec, x: f64, radius: f64) -> f64 {
        let mut best = (f64::NEG_INFINITY, x);
        for i in 0..=20_000 {
            let t = x - radius + 2.0 * radius * i as f64 / 20_000.0;
            let v = spec.value(t);
            if v > best.0 {
                best = (v, t);
            }
        }
        best.1
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let s = MixtureSpec::default();
        for i in 0..20 {
            let x = -4.0 + 0.41 * i as f64;
            let fd = (s.value(x + 1e-5) - s.value(x - 1e-5)) / 2e-5;
            assert!((fd - s.derivative(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn default_mixture_fixed_point_is_not_stationary() {
        let r = appendix_demo(&MixtureSpec::default()).unwrap();
        assert!(r.collins_converged);
        assert!((r.collins_fixed_point - -1.7919).abs() < 1e-3, "{}", r.collins_fixed_point);
        assert!(r.gradient_norm_there > 1e-2);
        assert!(r.non_stationary);
        // maxima near -2.148 and 2.328, minimum near 0.179
        let kinds: Vec<_> = r.extrema.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ExtremumKind::Maximum, ExtremumKind::Minimum, ExtremumKind::Maximum]);
        assert!((r.extrema[0].location - -2.1477).abs() < 1e-3);
        assert!((r.extrema[1].location - 0.179).abs() < 1e-3);
        assert!((r.extrema[2].location - 2.3281).abs() < 1e-3);
    }

    #[test]
    fn lbfgs_reaches_a_grid_confirmed_maximum() {
        let s = MixtureSpec::default();
        let r = appendix_demo(&s).unwrap();
        assert!(r.lbfgs_gradient_norm <= 1e-6);
        assert!(r.lbfgs_at_local_max, "{r:?}");
        let g = grid_argmax_near(&s, r.lbfgs_point, 0.5);
        assert!((g - r.lbfgs_point).abs() <= 1e-4);
    }

    #[test]
    fn positive_mixture_fixed_point_is_stationary() {
        let s = MixtureSpec {
            weights: vec![1.0, 0.8, 0.5],
            ..MixtureSpec::default()
        };
        let r = appendix_demo(&s).unwrap();
        assert!(r.gradient_norm_there <= 1e-6, "{}", r.gradient_norm_there);
        assert!(!r.non_stationary);
    }

    #[test]
    fn spec_parsing() {
        let s: MixtureSpec = "centers=-1,1;weights=1,-0.5;h=0.7;start=0.1".parse().unwrap();
        assert_eq!(s.centers, vec![-1.0, 1.0]);
        assert_eq!(s.h, 0.7);
        assert_eq!(s.to_string().parse::<MixtureSpec>().unwrap(), s);
        assert_eq!("".parse::<MixtureSpec>().unwrap(), MixtureSpec::default());
        assert!("centers=1,2;weights=1".parse::<MixtureSpec>().is_err());
        assert!("bogus=1".parse::<MixtureSpec>().is_err());
        assert!("h=abc".parse::<MixtureSpec>().is_err());
    }
}
