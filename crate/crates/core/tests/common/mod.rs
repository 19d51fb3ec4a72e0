//! Fixtures shared by the acceptance suite.

use kernel_track::eval::TrackRecord;
use kernel_track::histogram::{histogram_at, BinningScheme, Histogram, SpatialKernel};
use kernel_track::imgproc::{synth_sequence, GroundTruthBox, Image, MotionPath, Occluder, SequenceDataset, SynthConfig};
use kernel_track::ppk_svm::{train_batch, PpkConfig, SvmModel, TrainConfig};
use kernel_track::trackers::{
    bootstrap_model, run_sequence, Appearance, GeneralizedOptions, MsOptions, OnlineUpdatePolicy, PfOptions,
    RunSetup, TrackerKind,
};
use kernel_track::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPAN: SpatialKernel = SpatialKernel::Epanechnikov;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A normalized density over `occupied` random bins.
pub fn random_histogram(rng: &mut impl Rng, scheme: BinningScheme, occupied: usize) -> Histogram {
    let mut w = vec![0.0; scheme.len()];
    for _ in 0..occupied {
        w[rng.random_range(0..scheme.len())] += rng.random::<f64>() + 0.01;
    }
    Histogram::from_weights(w, scheme).unwrap()
}

pub fn random_model(rng: &mut impl Rng, scheme: BinningScheme, n: usize) -> SvmModel {
    let support = (0..n).map(|_| random_histogram(rng, scheme, 30)).collect();
    let betas = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    SvmModel::new(scheme, PpkConfig::default(), support, betas, rng.random_range(-1.0..1.0)).unwrap()
}

/// A single-frame textured scene with the target at `center`.
pub fn scene(seed: u64, center: Vec2) -> (Image, GroundTruthBox) {
    let cfg = SynthConfig {
        frames: 1,
        seed,
        path: MotionPath::Static(center),
        ..SynthConfig::default()
    };
    let ds = synth_sequence(&cfg).unwrap();
    (ds.frames()[0].clone(), ds.ground_truth()[0].unwrap())
}

/// A model whose support vectors are histograms of random boxes in `img`.
pub fn model_from_image(rng: &mut impl Rng, img: &Image, n: usize, h: Vec2) -> SvmModel {
    let scheme = BinningScheme::default();
    let support = (0..n)
        .map(|_| {
            let c = [
                rng.random_range(h[0]..img.width() as f64 - h[0]),
                rng.random_range(h[1]..img.height() as f64 - h[1]),
            ];
            histogram_at(img, c, h, EPAN, scheme).unwrap()
        })
        .collect();
    let betas = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    SvmModel::new(scheme, PpkConfig::default(), support, betas, rng.random_range(-0.5..0.5)).unwrap()
}

/// Separate training scenes: the target box and its one-pixel shifts as
/// positives, random boxes clear of the target as negatives.
pub fn localization_model() -> SvmModel {
    let mut r = rng(500);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for seed in 500..505 {
        let c = [r.random_range(14.0f64..50.0).round(), r.random_range(14.0f64..50.0).round()];
        let (img, g) = scene(seed, c);
        let h = g.half_extent;
        for d in [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            samples.push(histogram_at(&img, [c[0] + d[0], c[1] + d[1]], h, EPAN, BinningScheme::default()).unwrap());
            labels.push(1.0);
        }
        let mut placed = 0;
        while placed < 8 {
            let n = [r.random_range(6.0..58.0), r.random_range(6.0..58.0)];
            if (n[0] - c[0]).abs() < 1.5 * 2.0 * h[0] && (n[1] - c[1]).abs() < 1.5 * 2.0 * h[1] {
                continue;
            }
            samples.push(histogram_at(&img, n, h, EPAN, BinningScheme::default()).unwrap());
            labels.push(-1.0);
            placed += 1;
        }
    }
    train_batch(&samples, &labels, &TrainConfig::default(), PpkConfig::default())
        .unwrap()
        .0
}

/// The image corner farthest from `c`.
pub fn far_corner(img: &Image, c: Vec2) -> Vec2 {
    let (w, h) = ((img.width() - 1) as f64, (img.height() - 1) as f64);
    [if c[0] < w / 2.0 { w } else { 0.0 }, if c[1] < h / 2.0 { h } else { 0.0 }]
}

/// The easy fixture: 30 frames of linear motion, no drift or occlusion.
pub fn easy_sequence() -> SequenceDataset {
    synth_sequence(&SynthConfig::default()).unwrap()
}

/// 60 frames along a closed path with a gradual brightness gain and a
/// six-frame occluder over the top half of the target.
pub fn drift_sequence() -> SequenceDataset {
    let path = MotionPath::Waypoints(vec![[18.0, 18.0], [42.0, 22.0], [46.0, 44.0], [20.0, 46.0]]);
    let base = SynthConfig {
        frames: 60,
        path,
        illumination_drift: 0.008,
        seed: 21,
        ..SynthConfig::default()
    };
    let plain = synth_sequence(&base).unwrap();
    let g = plain.ground_truth()[30].unwrap();
    let cfg = SynthConfig {
        occluder: Some(Occluder {
            center: [g.center[0], g.center[1] - 3.0],
            half_extent: [8.0, 3.5],
            color: [120, 120, 120],
            first_frame: 28,
            last_frame: 33,
        }),
        ..base
    };
    synth_sequence(&cfg).unwrap()
}

fn setup_for(ds: &SequenceDataset, kind: TrackerKind, policy: OnlineUpdatePolicy, seed: u64) -> RunSetup {
    let g = ds.ground_truth()[0].unwrap();
    let frame = &ds.frames()[0];
    let appearance = if kind.uses_model() {
        Appearance::Model(
            bootstrap_model(
                frame,
                g.center,
                g.half_extent,
                EPAN,
                BinningScheme::default(),
                PpkConfig::default(),
                &[],
                8,
                &TrainConfig::default(),
                &mut rng(seed),
            )
            .unwrap(),
        )
    } else {
        Appearance::Template(histogram_at(frame, g.center, g.half_extent, EPAN, BinningScheme::default()).unwrap())
    };
    RunSetup {
        kind,
        init_center: g.center,
        bandwidth: g.half_extent,
        appearance,
        policy,
        generalized: GeneralizedOptions::default(),
        ms: MsOptions::default(),
        pf: PfOptions::default(),
        seed,
    }
}

pub fn track(ds: &SequenceDataset, kind: TrackerKind, policy: OnlineUpdatePolicy, seed: u64) -> TrackRecord {
    run_sequence(kind.name(), ds.frames(), &setup_for(ds, kind, policy, seed))
        .unwrap()
        .track
}

/// A `w`×`h` image of pixels drawn from a random palette of `colors` colours.
pub fn palette_image(rng: &mut impl Rng, w: usize, h: usize, colors: usize) -> Image {
    let palette: Vec<[u8; 3]> = (0..colors).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    let data = (0..w * h).flat_map(|_| palette[rng.random_range(0..colors)]).collect();
    Image::new(w, h, data).unwrap()
}
