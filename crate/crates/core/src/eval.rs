//! Center-error and failure-rate metrics against ground truth.

use std::fmt;

use crate::imgproc::GroundTruthBox;
use crate::{Error, Result, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackEntry {
    pub frame_index: usize,
    pub center: Vec2,
    pub bandwidth: Vec2,
    pub score: f64,
}

/// A tracker's output for one sequence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrackRecord {
    pub sequence_id: String,
    entries: Vec<TrackEntry>,
}

impl TrackRecord {
    pub fn new(sequence_id: impl Into<String>, entries: Vec<TrackEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| w[1].frame_index <= w[0].frame_index) {
            return Err(Error::InvalidArgument("track frame indices must be strictly increasing".into()));
        }
        Ok(Self {
            sequence_id: sequence_id.into(),
            entries,
        })
    }

    pub fn entries(&self) -> &[TrackEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, e: TrackEntry) -> Result<()> {
        if self.entries.last().is_some_and(|l| l.frame_index >= e.frame_index) {
            return Err(Error::InvalidArgument("track frame indices must be strictly increasing".into()));
        }
        self.entries.push(e);
        Ok(())
    }

    /// One `frame cx cy hx hy score` line per entry.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!(
                "{} {} {} {} {} {}\n",
                e.frame_index, e.center[0], e.center[1], e.bandwidth[0], e.bandwidth[1], e.score
            ));
        }
        s
    }

    pub fn parse(sequence_id: impl Into<String>, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(Error::malformed("track file", format!("line {}: expected 6 fields", n + 1)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::malformed("track file", format!("line {}: {e}", n + 1)))
            };
            let frame_index = f[0]
                .parse()
                .map_err(|e| Error::malformed("track file", format!("line {}: {e}", n + 1)))?;
            entries.push(TrackEntry {
                frame_index,
                center: [num(f[1])?, num(f[2])?],
                bandwidth: [num(f[3])?, num(f[4])?],
                score: num(f[5])?,
            });
        }
        Self::new(sequence_id, entries)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameError {
    pub frame_index: usize,
    pub abs_dx: f64,
    pub abs_dy: f64,
    pub euclidean: f64,
    /// Full-box diagonal of the ground truth.
    pub diagonal: f64,
}

/// Per-frame errors on every frame whose ground truth is present.
pub fn center_errors(track: &TrackRecord, gt: &[Option<GroundTruthBox>]) -> Result<Vec<FrameError>> {
    if track.len() != gt.len() {
        return Err(Error::LengthMismatch(format!(
            "track has {} frames, ground truth {}",
            track.len(),
            gt.len()
        )));
    }
    let mut out = Vec::with_capacity(gt.len());
    for e in track.entries() {
        let Some(g) = gt.get(e.frame_index).ok_or_else(|| {
            Error::LengthMismatch(format!("frame {} has no ground-truth row", e.frame_index))
        })?
        else {
            continue;
        };
        let dx = e.center[0] - g.center[0];
        let dy = e.center[1] - g.center[1];
        out.push(FrameError {
            frame_index: e.frame_index,
            abs_dx: dx.abs(),
            abs_dy: dy.abs(),
            euclidean: dx.hypot(dy),
            diagonal: g.diagonal(),
        });
    }
    Ok(out)
}

fn rate(errors: &[FrameError], frac: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("frames with ground truth"));
    }
    if errors.iter().any(|e| !(e.diagonal > 0.0)) {
        return Err(Error::InvalidArgument("ground-truth boxes must have positive extents".into()));
    }
    let failed = errors.iter().filter(|e| e.euclidean > frac * e.diagonal).count();
    Ok(failed as f64 / errors.len() as f64)
}

/// Fraction of counted frames whose center error exceeds `frac` times the
/// ground-truth box diagonal.
pub fn failure_rate(track: &TrackRecord, gt: &[Option<GroundTruthBox>], frac: f64) -> Result<f64> {
    rate(&center_errors(track, gt)?, frac)
}

/// Mean and population standard deviation.
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("error values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub sequence_id: String,
    pub frames: usize,
    pub mean_abs_dx: f64,
    pub mean_abs_dy: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub fr_020: f64,
    pub fr_025: f64,
    pub per_frame: Vec<FrameError>,
}

pub fn evaluate(track: &TrackRecord, gt: &[Option<GroundTruthBox>]) -> Result<EvalReport> {
    let per_frame = center_errors(track, gt)?;
    let eu: Vec<f64> = per_frame.iter().map(|e| e.euclidean).collect();
    let (mean_error, std_error) = summarize(&eu)?;
    let n = per_frame.len() as f64;
    Ok(EvalReport {
        sequence_id: track.sequence_id.clone(),
        frames: per_frame.len(),
        mean_abs_dx: per_frame.iter().map(|e| e.abs_dx).sum::<f64>() / n,
        mean_abs_dy: per_frame.iter().map(|e| e.abs_dy).sum::<f64>() / n,
        mean_error,
        std_error,
        fr_020: rate(&per_frame, 0.20)?,
        fr_025: rate(&per_frame, 0.25)?,
        per_frame,
    })
}

impl EvalReport {
    /// `metric value` lines.
    pub fn to_machine(&self) -> String {
        format!(
            "frames {}\nmean_abs_dx {}\nmean_abs_dy {}\nmean_error {}\nstd_error {}\nfr_0.20 {}\nfr_0.25 {}\n",
            self.frames, self.mean_abs_dx, self.mean_abs_dy, self.mean_error, self.std_error, self.fr_020, self.fr_025
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.sequence_id.is_empty() {
            writeln!(f, "sequence {}", self.sequence_id)?;
        }
        writeln!(f, "  frames evaluated : {}", self.frames)?;
        writeln!(f, "  center error     : {:.2} +/- {:.2} px", self.mean_error, self.std_error)?;
        writeln!(f, "  mean |dx|, |dy|  : {:.2}, {:.2} px", self.mean_abs_dx, self.mean_abs_dy)?;
        write!(
            f,
            "  FR0.20 / FR0.25  : {:.1}% / {:.1}%",
            100.0 * self.fr_020,
            100.0 * self.fr_025
        )
    }
}
