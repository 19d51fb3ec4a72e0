//! Deterministic synthetic tracking sequences.
//!
//! A colored rectangular target moves over a blocky, noisy background.
//! Optional global illumination drift and an occluding box make the
//! sequence harder. Every pixel is a pure function of the config.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GroundTruthBox, Image, SequenceDataset};
use crate::{Error, Result, Vec2};

#[derive(Clone, Debug, PartialEq)]
pub enum MotionPath {
    Static(Vec2),
    /// Constant velocity from `start` (first frame) to `end` (last frame).
    Linear { start: Vec2, end: Vec2 },
    /// Piecewise linear through the points, equal time per segment.
    Waypoints(Vec<Vec2>),
}

impl MotionPath {
    fn center_at(&self, frame: usize, frames: usize) -> Result<Vec2> {
        let s = if frames > 1 {
            frame as f64 / (frames - 1) as f64
        } else {
            0.0
        };
        let lerp = |a: Vec2, b: Vec2, t: f64| [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
        match self {
            MotionPath::Static(p) => Ok(*p),
            MotionPath::Linear { start, end } => Ok(lerp(*start, *end, s)),
            MotionPath::Waypoints(points) => match points.len() {
                0 => Err(Error::InvalidArgument("motion path is empty".into())),
                1 => Ok(points[0]),
                n => {
                    let pos = s * (n - 1) as f64;
                    let seg = (pos.floor() as usize).min(n - 2);
                    Ok(lerp(points[seg], points[seg + 1], pos - seg as f64))
                }
            },
        }
    }
}

/// A box painted over the scene during `[first_frame, last_frame]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Occluder {
    pub center: Vec2,
    pub half_extent: Vec2,
    pub color: [u8; 3],
    pub first_frame: usize,
    pub last_frame: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Full target extent in pixels.
    pub target_size: [usize; 2],
    pub target_color: [u8; 3],
    /// Colour of a horizontal band across the middle third of the target.
    pub target_accent: Option<[u8; 3]>,
    /// Uniform per-pixel jitter amplitude on the target.
    pub target_noise: u8,
    pub path: MotionPath,
    pub seed: u64,
    pub background_palette: Vec<[u8; 3]>,
    /// Side of the square background texture blocks.
    pub background_block: usize,
    pub background_noise: u8,
    /// Global brightness gain change per frame: gain(t) = 1 + drift * t.
    pub illumination_drift: f64,
    pub occluder: Option<Occluder>,
    /// Minimum Euclidean RGB distance between the target colour and the
    /// mean background colour.
    pub color_margin: f64,
    pub frame_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            frames: 30,
            target_size: [12, 12],
            target_color: [200, 40, 40],
            target_accent: None,
            target_noise: 10,
            path: MotionPath::Linear {
                start: [20.0, 24.0],
                end: [44.0, 40.0],
            },
            seed: 7,
            background_palette: vec![
                [60, 110, 70],
                [70, 90, 140],
                [110, 110, 110],
                [90, 130, 90],
                [50, 70, 110],
            ],
            background_block: 4,
            background_noise: 12,
            illumination_drift: 0.0,
            occluder: None,
            color_margin: 60.0,
            frame_rate: 30.0,
        }
    }
}

fn jitter(rng: &mut ChaCha8Rng, base: [u8; 3], amp: u8, gain: f64) -> [u8; 3] {
    let amp = amp as i32;
    let mut out = [0u8; 3];
    for (o, &b) in out.iter_mut().zip(&base) {
        let n = if amp > 0 {
            rng.random_range(-amp..=amp)
        } else {
            0
        };
        *o = ((b as i32 + n) as f64 * gain).round().clamp(0.0, 255.0) as u8;
    }
    out
}

fn frame_seed(seed: u64, frame: usize) -> u64 {
    seed ^ (frame as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(Error::InvalidArgument(
                "canvas and frame count must be positive".into(),
            ));
        }
        let [sx, sy] = self.target_size;
        if sx == 0 || sy == 0 {
            return Err(Error::InvalidArgument("target size must be positive".into()));
        }
        if sx > self.width || sy > self.height {
            return Err(Error::InvalidArgument(format!(
                "target {sx}x{sy} larger than canvas {}x{}",
                self.width, self.height
            )));
        }
        if self.background_palette.is_empty() || self.background_block == 0 {
            return Err(Error::InvalidArgument(
                "background needs a palette and a positive block size".into(),
            ));
        }
        let n = self.background_palette.len() as f64;
        let dist2: f64 = (0..3)
            .map(|ch| {
                let mean = self.background_palette.iter().map(|c| c[ch] as f64).sum::<f64>() / n;
                (self.target_color[ch] as f64 - mean).powi(2)
            })
            .sum();
        if dist2.sqrt() < self.color_margin {
            return Err(Error::InvalidArgument(format!(
                "target colour within {:.1} of mean background (margin {})",
                dist2.sqrt(),
                self.color_margin
            )));
        }
        Ok(())
    }
}

/// Renders the sequence described by `cfg`.
pub fn synth_sequence(cfg: &SynthConfig) -> Result<SequenceDataset> {
    cfg.validate()?;
    let (w, h) = (cfg.width, cfg.height);
    let half = [cfg.target_size[0] as f64 / 2.0, cfg.target_size[1] as f64 / 2.0];

    let mut centers = Vec::with_capacity(cfg.frames);
    for t in 0..cfg.frames {
        let c = cfg.path.center_at(t, cfg.frames)?;
        let inside = c[0] - half[0] >= -0.5
            && c[1] - half[1] >= -0.5
            && c[0] + half[0] <= w as f64 - 0.5
            && c[1] + half[1] <= h as f64 - 0.5;
        if !inside {
            return Err(Error::InvalidArgument(format!(
                "target leaves the canvas at frame {t} (center {:?})",
                c
            )));
        }
        centers.push(c);
    }

    let mut bg_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bw = w.div_ceil(cfg.background_block);
    let bh = h.div_ceil(cfg.background_block);
    let blocks: Vec<[u8; 3]> = (0..bw * bh)
        .map(|_| cfg.background_palette[bg_rng.random_range(0..cfg.background_palette.len())])
        .collect();

    let mut frames = Vec::with_capacity(cfg.frames);
    let mut ground_truth = Vec::with_capacity(cfg.frames);
    for (t, &c) in centers.iter().enumerate() {
        let gain = (1.0 + cfg.illumination_drift * t as f64).max(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(cfg.seed, t));
        let mut img = Image::filled(w, h, [0, 0, 0])?;
        let occ = cfg
            .occluder
            .as_ref()
            .filter(|o| (o.first_frame..=o.last_frame).contains(&t));
        for y in 0..h {
            for x in 0..w {
                let (px, py) = (x as f64, y as f64);
                let in_box = |center: Vec2, he: Vec2| {
                    (px - center[0]).abs() < he[0] && (py - center[1]).abs() < he[1]
                };
                let color = if occ.is_some_and(|o| in_box(o.center, o.half_extent)) {
                    let o = occ.unwrap();
                    jitter(&mut rng, o.color, cfg.background_noise, gain)
                } else if in_box(c, half) {
                    let band = cfg
                        .target_accent
                        .filter(|_| (py - c[1]).abs() < half[1] / 3.0);
                    jitter(
                        &mut rng,
                        band.unwrap_or(cfg.target_color),
                        cfg.target_noise,
                        gain,
                    )
                } else {
                    let b = blocks[(y / cfg.background_block) * bw + x / cfg.background_block];
                    jitter(&mut rng, b, cfg.background_noise, gain)
                };
                img.set_pixel(x, y, color);
            }
        }
        frames.push(img);
        ground_truth.push(Some(GroundTruthBox {
            center: c,
            half_extent: half,
        }));
    }
    SequenceDataset::new(frames, ground_truth, cfg.frame_rate)
}
