//! SVM-score maximization tracker with online NORMA updates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ScoreProblem, TrackState};
use crate::histogram::{histogram_at, BinningScheme, Histogram, SpatialKernel};
use crate::imgproc::Image;
use crate::optimize::{lbfgs_maximize, LbfgsOptions};
use crate::ppk_svm::{train_batch, NormaConfig, PpkConfig, SvmModel, TrainConfig};
use crate::{Error, Result, Vec2};

/// How the model is refreshed from each tracked frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnlineUpdatePolicy {
    pub enabled: bool,
    pub negatives_per_frame: usize,
    /// Ring radius range for negatives, in units of the bandwidth.
    pub ring_min: f64,
    pub ring_max: f64,
    /// Largest allowed overlap of a negative box with the tracked box, as an area fraction.
    pub max_overlap: f64,
    pub min_score_to_update: f64,
}

impl Default for OnlineUpdatePolicy {
    fn default() -> Self {
        Self {
            enabled: true,
            negatives_per_frame: 4,
            ring_min: 1.5,
            ring_max: 2.5,
            max_overlap: 0.25,
            min_score_to_update: 0.0,
        }
    }
}

impl OnlineUpdatePolicy {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ring_min > 0.0 && self.ring_max >= self.ring_min) {
            return Err(Error::InvalidArgument(format!(
                "ring radii must satisfy 0 < min <= max, got {} and {}",
                self.ring_min, self.ring_max
            )));
        }
        if !(0.0..=1.0).contains(&self.max_overlap) {
            return Err(Error::InvalidArgument(format!(
                "max_overlap must be in [0, 1], got {}",
                self.max_overlap
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedOptions {
    pub kernel: SpatialKernel,
    pub lbfgs: LbfgsOptions,
    pub norma: NormaConfig,
}

impl Default for GeneralizedOptions {
    fn default() -> Self {
        Self {
            kernel: SpatialKernel::Epanechnikov,
            lbfgs: LbfgsOptions {
                step_tol: 1e-3,
                ..LbfgsOptions::default()
            },
            norma: NormaConfig::default(),
        }
    }
}

/// Fraction of box `a`'s area covered by box `b`; both boxes share half-extents `h`.
fn overlap_fraction(a: Vec2, b: Vec2, h: Vec2) -> f64 {
    let ox = (2.0 * h[0] - (a[0] - b[0]).abs()).max(0.0);
    let oy = (2.0 * h[1] - (a[1] - b[1]).abs()).max(0.0);
    ox * oy / (4.0 * h[0] * h[1])
}

/// Samples up to `count` background boxes on a ring around `center`.
///
/// Centers falling outside the frame or overlapping the target box by more
/// than `policy.max_overlap` are redrawn; a negative is dropped after 64
/// failed draws.
pub fn ring_negatives(
    frame: &Image,
    center: Vec2,
    h: Vec2,
    count: usize,
    policy: &OnlineUpdatePolicy,
    rng: &mut impl Rng,
) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..64 {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let r = if policy.ring_max > policy.ring_min {
                rng.random_range(policy.ring_min..policy.ring_max)
            } else {
                policy.ring_min
            };
            let c = [center[0] + r * h[0] * theta.cos(), center[1] + r * h[1] * theta.sin()];
            if frame.contains(c) && overlap_fraction(c, center, h) <= policy.max_overlap {
                out.push(c);
                break;
            }
        }
    }
    out
}

/// Tracks one frame from `state`, then applies the online update in place.
pub fn track_frame_generalized(
    state: &TrackState,
    model: &mut SvmModel,
    frame: &Image,
    policy: &OnlineUpdatePolicy,
    opts: &GeneralizedOptions,
    rng: &mut impl Rng,
) -> Result<TrackState> {
    policy.validate()?;
    let problem = ScoreProblem {
        model,
        image: frame,
        bandwidth: state.bandwidth,
        kernel: opts.kernel,
    };
    let start = frame.clamp_point(state.center);
    let result = lbfgs_maximize(&problem, &start, &opts.lbfgs)?;
    let center = [result.argmax[0], result.argmax[1]];
    let score = result.value.expect("lbfgs always reports a value");
    let next = TrackState {
        center,
        bandwidth: state.bandwidth,
        score,
        frame_index: state.frame_index + 1,
        lost: score < 0.0,
    };
    if policy.enabled && score >= policy.min_score_to_update {
        let scheme = model.scheme();
        let pos = histogram_at(frame, center, state.bandwidth, opts.kernel, scheme)?;
        model.norma_step(&pos, 1.0, &opts.norma)?;
        for c in ring_negatives(frame, center, state.bandwidth, policy.negatives_per_frame, policy, rng) {
            let neg = histogram_at(frame, c, state.bandwidth, opts.kernel, scheme)?;
            model.norma_step(&neg, -1.0, &opts.norma)?;
        }
    }
    Ok(next)
}

/// Trains an initial model from a single template box.
///
/// Positives are the template and its one-pixel shifts; negatives are the
/// user boxes `(center, half_extent)` plus `negatives` ring samples.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_model(
    frame: &Image,
    center: Vec2,
    h: Vec2,
    kernel: SpatialKernel,
    scheme: BinningScheme,
    ppk: PpkConfig,
    user_negatives: &[(Vec2, Vec2)],
    negatives: usize,
    train: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<SvmModel> {
    let mut samples: Vec<Histogram> = Vec::new();
    let mut labels = Vec::new();
    for d in [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
        let c = [center[0] + d[0], center[1] + d[1]];
        if frame.contains(c) {
            samples.push(histogram_at(frame, c, h, kernel, scheme)?);
            labels.push(1.0);
        }
    }
    for &(c, hn) in user_negatives {
        samples.push(histogram_at(frame, c, hn, kernel, scheme)?);
        labels.push(-1.0);
    }
    let policy = OnlineUpdatePolicy::default();
    for c in ring_negatives(frame, center, h, negatives, &policy, rng) {
        samples.push(histogram_at(frame, c, h, kernel, scheme)?);
        labels.push(-1.0);
    }
    Ok(train_batch(&samples, &labels, train, ppk)?.0)
}

/// A generalized tracker instance owning its model and RNG.
#[derive(Clone, Debug)]
pub struct GeneralizedTracker {
    pub state: TrackState,
    pub model: SvmModel,
    pub policy: OnlineUpdatePolicy,
    pub opts: GeneralizedOptions,
    rng: ChaCha8Rng,
}

impl GeneralizedTracker {
    pub fn new(
        state: TrackState,
        model: SvmModel,
        policy: OnlineUpdatePolicy,
        opts: GeneralizedOptions,
        seed: u64,
    ) -> Self {
        Self {
            state,
            model,
            policy,
            opts,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn step(&mut self, frame: &Image) -> Result<TrackState> {
        self.state = track_frame_generalized(&self.state, &mut self.model, frame, &self.policy, &self.opts, &mut self.rng)?;
        Ok(self.state)
    }
}
