//! Fixed-point mean-shift trackers.

use super::{collins_ms_step, ms_step, ms_weights, svm_score, svm_weights, TrackState};
use crate::histogram::{bhattacharyya_distance, histogram_at, Histogram, SpatialKernel};
use crate::imgproc::{crop_region, Image};
use crate::optimize::{fixed_point_iterate, AscentResult, FixedPointOptions};
use crate::ppk_svm::SvmModel;
use crate::{Error, Result};

/// An empty weighted support leaves the center where it is.
fn or_stay(c: [f64; 2], next: Result<[f64; 2]>) -> Result<Vec<f64>> {
    match next {
        Ok(n) => Ok(n.to_vec()),
        Err(Error::EmptyKernelSupport) => Ok(c.to_vec()),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MsOptions {
    pub kernel: SpatialKernel,
    pub fixed_point: FixedPointOptions,
}

impl Default for MsOptions {
    fn default() -> Self {
        Self {
            kernel: SpatialKernel::Epanechnikov,
            fixed_point: FixedPointOptions::default(),
        }
    }
}

fn finish(state: &TrackState, frame: &Image, result: AscentResult, score: impl Fn([f64; 2]) -> Result<f64>) -> Result<TrackState> {
    let center = frame.clamp_point([result.argmax[0], result.argmax[1]]);
    Ok(TrackState {
        center,
        bandwidth: state.bandwidth,
        score: score(center)?,
        frame_index: state.frame_index + 1,
        lost: false,
    })
}

/// Standard single-template mean shift. The returned score is the
/// Bhattacharyya distance to `q_target`.
pub fn track_frame_ms(state: &TrackState, q_target: &Histogram, frame: &Image, opts: &MsOptions) -> Result<TrackState> {
    let h = state.bandwidth;
    let step = |c: &[f64]| -> Result<Vec<f64>> {
        let c = frame.clamp_point([c[0], c[1]]);
        let region = crop_region(frame, c, h)?;
        let w = ms_weights(q_target, &region, c, h, opts.kernel)?;
        or_stay(c, ms_step(&region, &w, c, h, opts.kernel).map(|n| frame.clamp_point(n)))
    };
    let result = fixed_point_iterate(step, &frame.clamp_point(state.center), &opts.fixed_point)?;
    let mut next = finish(state, frame, result, |c| {
        bhattacharyya_distance(q_target, &histogram_at(frame, c, h, opts.kernel, q_target.scheme())?)
    })?;
    // no overlap at all with the template
    next.lost = next.score >= 1.0 - 1e-12;
    Ok(next)
}

/// Mean shift with SVM weights and the absolute-value denominator. The
/// score is the SVM score; `lost` flags a negative score.
pub fn track_frame_collins(state: &TrackState, model: &SvmModel, frame: &Image, opts: &MsOptions) -> Result<TrackState> {
    let h = state.bandwidth;
    let step = |c: &[f64]| -> Result<Vec<f64>> {
        let c = frame.clamp_point([c[0], c[1]]);
        let region = crop_region(frame, c, h)?;
        let w = svm_weights(model, &region, c, h, opts.kernel)?;
        or_stay(c, collins_ms_step(&region, &w, c, h, opts.kernel).map(|n| frame.clamp_point(n)))
    };
    let result = fixed_point_iterate(step, &frame.clamp_point(state.center), &opts.fixed_point)?;
    let mut next = finish(state, frame, result, |c| svm_score(model, frame, c, h, opts.kernel))?;
    next.lost = next.score < 0.0;
    Ok(next)
}
