//! Runs any tracker over a frame sequence.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    pf_init, pf_step, track_frame_collins, track_frame_ms, GeneralizedOptions, GeneralizedTracker, MsOptions,
    OnlineUpdatePolicy, PfOptions, TrackState,
};
use crate::eval::{TrackEntry, TrackRecord};
use crate::histogram::Histogram;
use crate::imgproc::Image;
use crate::ppk_svm::SvmModel;
use crate::{Error, Result, Vec2};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TrackerKind {
    #[default]
    Generalized,
    Ms,
    Collins,
    Pf,
}

impl TrackerKind {
    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::Generalized => "generalized",
            TrackerKind::Ms => "ms",
            TrackerKind::Collins => "collins",
            TrackerKind::Pf => "pf",
        }
    }

    /// Whether the tracker scores against an SVM model rather than a template.
    pub fn uses_model(self) -> bool {
        matches!(self, TrackerKind::Generalized | TrackerKind::Collins)
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generalized" => Ok(TrackerKind::Generalized),
            "ms" => Ok(TrackerKind::Ms),
            "collins" => Ok(TrackerKind::Collins),
            "pf" => Ok(TrackerKind::Pf),
            other => Err(Error::InvalidArgument(format!(
                "unknown tracker {other:?} (expected generalized, ms, collins or pf)"
            ))),
        }
    }
}

/// What a tracker scores candidates against.
#[derive(Clone, Debug)]
pub enum Appearance {
    Model(SvmModel),
    Template(Histogram),
}

#[derive(Clone, Debug)]
pub struct RunSetup {
    pub kind: TrackerKind,
    pub init_center: Vec2,
    pub bandwidth: Vec2,
    pub appearance: Appearance,
    pub policy: OnlineUpdatePolicy,
    pub generalized: GeneralizedOptions,
    pub ms: MsOptions,
    pub pf: PfOptions,
    pub seed: u64,
}

/// Output of [`run_sequence`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub track: TrackRecord,
    /// The model after the last frame, for model-based trackers.
    pub final_model: Option<SvmModel>,
    pub lost_at_end: bool,
}

/// Tracks every frame in order, starting from the initial box on frame 0.
pub fn run_sequence(sequence_id: &str, frames: &[Image], setup: &RunSetup) -> Result<RunOutput> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("frames"));
    }
    let init = TrackState::new(setup.init_center, setup.bandwidth)?;
    let mut track = TrackRecord::new(sequence_id, Vec::new())?;
    let push = |track: &mut TrackRecord, t: usize, s: &TrackState| {
        track.push(TrackEntry {
            frame_index: t,
            center: s.center,
            bandwidth: s.bandwidth,
            score: s.score,
        })
    };
    let mut last = init;
    let mut final_model = None;
    match (&setup.appearance, setup.kind) {
        (Appearance::Model(model), TrackerKind::Generalized) => {
            let mut tracker = GeneralizedTracker::new(init, model.clone(), setup.policy, setup.generalized, setup.seed);
            for (t, f) in frames.iter().enumerate() {
                last = tracker.step(f)?;
                push(&mut track, t, &last)?;
            }
            final_model = Some(tracker.model);
        }
        (Appearance::Model(model), TrackerKind::Collins) => {
            for (t, f) in frames.iter().enumerate() {
                last = track_frame_collins(&last, model, f, &setup.ms)?;
                push(&mut track, t, &last)?;
            }
            final_model = Some(model.clone());
        }
        (Appearance::Template(q), TrackerKind::Ms) => {
            for (t, f) in frames.iter().enumerate() {
                last = track_frame_ms(&last, q, f, &setup.ms)?;
                push(&mut track, t, &last)?;
            }
        }
        (Appearance::Template(q), TrackerKind::Pf) => {
            let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
            let mut pf = pf_init(setup.init_center, setup.pf.count)?;
            for (t, f) in frames.iter().enumerate() {
                let (next, s, _) = pf_step(&pf, q, f, &last, &setup.pf, &mut rng)?;
                pf = next;
                last = s;
                push(&mut track, t, &last)?;
            }
        }
        (_, kind) => {
            return Err(Error::InvalidArgument(format!(
                "tracker {kind} needs {}",
                if kind.uses_model() { "an SVM model" } else { "a template histogram" }
            )))
        }
    }
    Ok(RunOutput {
        track,
        final_model,
        lost_at_end: last.lost,
    })
}
