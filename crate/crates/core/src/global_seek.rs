//! Annealed bandwidth-cascade localization and 1-D mode counting.

use crate::histogram::SpatialKernel;
use crate::imgproc::Image;
use crate::optimize::{lbfgs_maximize, AscentProblem, LbfgsOptions};
use crate::ppk_svm::SvmModel;
use crate::trackers::ScoreProblem;
use crate::{Error, Result, Vec2};

/// Bandwidth pyramid `h_m = h0 / ratio^m` for `m = 0..max_stages`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSchedule {
    pub h0: Vec2,
    pub ratio: f64,
    pub max_stages: usize,
}

impl AnnealSchedule {
    pub fn new(h0: Vec2, ratio: f64, max_stages: usize) -> Result<Self> {
        let s = Self { h0, ratio, max_stages };
        s.validate()?;
        Ok(s)
    }

    /// Starts from the full image extent.
    pub fn full_image(image: &Image) -> Self {
        Self {
            h0: [image.width() as f64, image.height() as f64],
            ratio: 1.25,
            max_stages: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 1.0) {
            return Err(Error::InvalidArgument(format!("ratio must be > 1, got {}", self.ratio)));
        }
        if self.max_stages == 0 {
            return Err(Error::InvalidArgument("max_stages must be >= 1".into()));
        }
        if !(self.h0[0] > 0.0 && self.h0[1] > 0.0) {
            return Err(Error::InvalidArgument("h0 must be positive".into()));
        }
        Ok(())
    }

    pub fn bandwidth(&self, m: usize) -> Vec2 {
        let d = self.ratio.powi(m as i32);
        [self.h0[0] / d, self.h0[1] / d]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizeOptions {
    pub kernel: SpatialKernel,
    pub lbfgs: LbfgsOptions,
    /// Cap on a single line-search move as a fraction of the stage bandwidth.
    pub max_step_frac: f64,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        Self {
            kernel: SpatialKernel::Epanechnikov,
            lbfgs: LbfgsOptions {
                step_tol: 1e-3,
                ..LbfgsOptions::default()
            },
            max_step_frac: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageTrace {
    pub stage: usize,
    pub bandwidth: Vec2,
    pub start: Vec2,
    pub start_score: f64,
    pub center: Vec2,
    pub score: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizeResult {
    pub center: Vec2,
    pub scale: Vec2,
    pub stage: usize,
    pub accepted: bool,
    pub trace: Vec<StageTrace>,
}

impl LocalizeResult {
    pub fn score(&self) -> f64 {
        self.trace[self.stage].score
    }
}

/// Runs the cascade from `c0`, stopping at the first stage whose maximized
/// score is positive. If no stage accepts, the best-scoring stage is
/// reported with `accepted = false`.
pub fn anneal_localize(
    model: &SvmModel,
    image: &Image,
    c0: Vec2,
    schedule: &AnnealSchedule,
    opts: &LocalizeOptions,
) -> Result<LocalizeResult> {
    schedule.validate()?;
    if !image.contains(c0) {
        return Err(Error::OutOfBounds {
            x: c0[0],
            y: c0[1],
            width: image.width(),
            height: image.height(),
        });
    }
    let mut trace: Vec<StageTrace> = Vec::with_capacity(schedule.max_stages);
    let mut c = c0;
    for m in 0..schedule.max_stages {
        let h = schedule.bandwidth(m);
        let problem = ScoreProblem {
            model,
            image,
            bandwidth: h,
            kernel: opts.kernel,
        };
        let start_score = problem.value(&c)?;
        let lbfgs = LbfgsOptions {
            max_step: opts.max_step_frac * h[0].max(h[1]),
            ..opts.lbfgs
        };
        let r = lbfgs_maximize(&problem, &c, &lbfgs)?;
        let center = [r.argmax[0], r.argmax[1]];
        let score = r.value.expect("lbfgs always reports a value");
        let accepted = score > 0.0;
        trace.push(StageTrace {
            stage: m,
            bandwidth: h,
            start: c,
            start_score,
            center,
            score,
            accepted,
        });
        if accepted {
            return Ok(LocalizeResult {
                center,
                scale: h,
                stage: m,
                accepted: true,
                trace,
            });
        }
        c = center;
    }
    let best = trace
        .iter()
        .max_by(|a, b| a.score.total_cmp(&b.score))
        .copied()
        .expect("at least one stage");
    Ok(LocalizeResult {
        center: best.center,
        scale: best.bandwidth,
        stage: best.stage,
        accepted: false,
        trace,
    })
}

/// Default grid resolution for [`mode_count_1d`].
pub const MODE_GRID: usize = 2001;

/// Number of strict interior local maxima of the weighted Gaussian KDE of
/// `samples` (location, weight), evaluated on `grid` points spanning
/// `[min - 3h, max + 3h]`.
pub fn mode_count_1d(samples: &[(f64, f64)], h: f64, grid: usize) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("mode count samples"));
    }
    if !(h > 0.0) || grid < 3 {
        return Err(Error::InvalidArgument("need h > 0 and at least 3 grid points".into()));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let dx = (hi - lo) / (grid - 1) as f64;
    let f: Vec<f64> = (0..grid)
        .map(|i| {
            let x = lo + dx * i as f64;
            samples
                .iter()
                .map(|(m, w)| w * (-(x - m).powi(2) / (2.0 * h * h)).exp())
                .sum()
        })
        .collect();
    Ok(f.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count())
}
