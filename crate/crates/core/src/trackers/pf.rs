//! Color-histogram particle filter baseline.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::TrackState;
use crate::histogram::{bhattacharyya, histogram_at, Histogram, SpatialKernel};
use crate::imgproc::Image;
use crate::{Error, Result, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PfOptions {
    pub count: usize,
    /// Random-walk standard deviation per axis, pixels.
    pub noise_std: f64,
    /// Likelihood sharpness in `exp(-lambda (1 - rho))`.
    pub lambda_lik: f64,
    pub kernel: SpatialKernel,
}

impl Default for PfOptions {
    fn default() -> Self {
        Self {
            count: 1500,
            noise_std: 4.0,
            lambda_lik: 20.0,
            kernel: SpatialKernel::Epanechnikov,
        }
    }
}

/// Particles with normalized weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PfState {
    pub particles: Vec<(Vec2, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PfStepInfo {
    /// Sum of the normalized weights before resampling.
    pub weight_sum: f64,
    /// Every likelihood was zero and the weights were reset to uniform.
    pub degenerate: bool,
}

/// `count` equally weighted particles at `center`.
pub fn pf_init(center: Vec2, count: usize) -> Result<PfState> {
    if count == 0 {
        return Err(Error::InvalidArgument("particle count must be >= 1".into()));
    }
    let w = 1.0 / count as f64;
    Ok(PfState {
        particles: vec![(center, w); count],
    })
}

/// Propagate, weight against `q_target`, estimate, then resample systematically.
pub fn pf_step(
    pf: &PfState,
    q_target: &Histogram,
    frame: &Image,
    state: &TrackState,
    opts: &PfOptions,
    rng: &mut impl Rng,
) -> Result<(PfState, TrackState, PfStepInfo)> {
    if pf.particles.is_empty() {
        return Err(Error::InvalidArgument("particle set is empty".into()));
    }
    if !(opts.noise_std >= 0.0) || !(opts.lambda_lik >= 0.0) {
        return Err(Error::InvalidArgument("noise_std and lambda_lik must be >= 0".into()));
    }
    let noise = (opts.noise_std > 0.0).then(|| Normal::new(0.0, opts.noise_std).expect("valid std"));
    let h = state.bandwidth;
    let mut moved: Vec<Vec2> = Vec::with_capacity(pf.particles.len());
    for &(c, _) in &pf.particles {
        let c = match &noise {
            Some(n) => [c[0] + n.sample(rng), c[1] + n.sample(rng)],
            None => c,
        };
        moved.push(frame.clamp_point(c));
    }
    let mut weights = Vec::with_capacity(moved.len());
    for &c in &moved {
        let lik = match histogram_at(frame, c, h, opts.kernel, q_target.scheme()) {
            Ok(p) => (-opts.lambda_lik * (1.0 - bhattacharyya(q_target, &p)?)).exp(),
            Err(Error::EmptyKernelSupport) => 0.0,
            Err(e) => return Err(e),
        };
        weights.push(lik);
    }
    let total: f64 = weights.iter().sum();
    let degenerate = !(total > 0.0 && total.is_finite());
    let n = weights.len() as f64;
    if degenerate {
        weights.iter_mut().for_each(|w| *w = 1.0 / n);
    } else {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let weight_sum = weights.iter().sum();
    let mut est = [0.0, 0.0];
    for (c, w) in moved.iter().zip(&weights) {
        est[0] += w * c[0];
        est[1] += w * c[1];
    }
    let center = frame.clamp_point(est);
    let score = match histogram_at(frame, center, h, opts.kernel, q_target.scheme()) {
        Ok(p) => (1.0 - bhattacharyya(q_target, &p)?).max(0.0).sqrt(),
        Err(_) => 1.0,
    };

    // systematic resampling
    let count = moved.len();
    let u0: f64 = rng.random::<f64>() / count as f64;
    let mut particles = Vec::with_capacity(count);
    let (mut i, mut cum) = (0, weights[0]);
    for k in 0..count {
        let u = u0 + k as f64 / count as f64;
        while u > cum && i + 1 < count {
            i += 1;
            cum += weights[i];
        }
        particles.push((moved[i], 1.0 / count as f64));
    }
    Ok((
        PfState { particles },
        TrackState {
            center,
            bandwidth: h,
            score,
            frame_index: state.frame_index + 1,
            lost: degenerate,
        },
        PfStepInfo { weight_sum, degenerate },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::BinningScheme;
    use crate::imgproc::{synth_sequence, MotionPath, SynthConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_noise_static_target_is_exact() {
        let cfg = SynthConfig {
            path: MotionPath::Static([32.0, 30.0]),
            frames: 3,
            ..SynthConfig::default()
        };
        let ds = synth_sequence(&cfg).unwrap();
        let g = ds.ground_truth()[0].unwrap();
        let opts = PfOptions {
            noise_std: 0.0,
            count: 50,
            ..PfOptions::default()
        };
        let q = histogram_at(&ds.frames()[0], g.center, g.half_extent, opts.kernel, BinningScheme::default()).unwrap();
        let mut pf = pf_init(g.center, opts.count).unwrap();
        let mut s = TrackState::new(g.center, g.half_extent).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for f in ds.frames() {
            let (next, st, info) = pf_step(&pf, &q, f, &s, &opts, &mut rng).unwrap();
            assert!((info.weight_sum - 1.0).abs() < 1e-12);
            assert!(!info.degenerate);
            assert!((st.center[0] - g.center[0]).abs() < 1e-9 && (st.center[1] - g.center[1]).abs() < 1e-9);
            assert!((next.particles.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-9);
            pf = next;
            s = st;
        }
    }

    #[test]
    fn weights_normalize_and_runs_are_seeded() {
        let ds = synth_sequence(&SynthConfig {
            frames: 4,
            ..SynthConfig::default()
        })
        .unwrap();
        let g = ds.ground_truth()[0].unwrap();
        let opts = PfOptions {
            count: 200,
            ..PfOptions::default()
        };
        let q = histogram_at(&ds.frames()[0], g.center, g.half_extent, opts.kernel, BinningScheme::default()).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pf = pf_init(g.center, opts.count).unwrap();
            let mut s = TrackState::new(g.center, g.half_extent).unwrap();
            let mut out = Vec::new();
            for f in ds.frames() {
                let (next, st, info) = pf_step(&pf, &q, f, &s, &opts, &mut rng).unwrap();
                assert!((info.weight_sum - 1.0).abs() < 1e-9);
                pf = next;
                s = st;
                out.push(s.center);
            }
            out
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn degenerate_likelihood_resets_to_uniform() {
        let img = Image::filled(16, 16, [0, 0, 0]).unwrap();
        let mut other = vec![0.0; BinningScheme::default().len()];
        other[4095] = 1.0;
        let q = Histogram::new(other, BinningScheme::default()).unwrap();
        let opts = PfOptions {
            count: 10,
            lambda_lik: 1e6,
            ..PfOptions::default()
        };
        let pf = pf_init([8.0, 8.0], 10).unwrap();
        let s = TrackState::new([8.0, 8.0], [3.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, st, info) = pf_step(&pf, &q, &img, &s, &opts, &mut rng).unwrap();
        assert!(info.degenerate && st.lost);
        assert!((info.weight_sum - 1.0).abs() < 1e-12);
        assert!(pf_init([0.0, 0.0], 0).is_err());
    }
}
