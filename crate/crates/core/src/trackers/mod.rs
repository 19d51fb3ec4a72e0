//! Tracking engines built on kernel-weighted histograms.
//!
//! [`generalized`] maximizes the SVM score with L-BFGS, [`ms`] holds the
//! standard and modified mean-shift trackers, [`pf`] the color particle
//! filter, and [`appendix`] the 1-D signed-weight counterexample.

pub mod appendix;
pub mod generalized;
pub mod ms;
pub mod pf;
pub mod runner;

pub use appendix::{appendix_demo, AppendixReport, Extremum, ExtremumKind, MixtureSpec};
pub use generalized::{
    bootstrap_model, ring_negatives, track_frame_generalized, GeneralizedOptions, GeneralizedTracker,
    OnlineUpdatePolicy,
};
pub use ms::{track_frame_collins, track_frame_ms, MsOptions};
pub use pf::{pf_init, pf_step, PfOptions, PfState, PfStepInfo};
pub use runner::{run_sequence, Appearance, RunOutput, RunSetup, TrackerKind};

use crate::histogram::{compute_histogram, BinningScheme, Histogram, SpatialKernel};
use crate::imgproc::{crop_region, normalized_offset, Image, Region};
use crate::optimize::AscentProblem;
use crate::ppk_svm::SvmModel;
use crate::{Error, Result, Vec2};

/// Densities at or below this are treated as empty bins.
pub const BIN_EPS: f64 = 1e-12;

/// Tracker state carried from frame to frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackState {
    pub center: Vec2,
    pub bandwidth: Vec2,
    /// SVM score for score-based trackers, Bhattacharyya distance for MS and PF.
    pub score: f64,
    /// Number of frames processed so far.
    pub frame_index: usize,
    pub lost: bool,
}

impl TrackState {
    pub fn new(center: Vec2, bandwidth: Vec2) -> Result<Self> {
        if !(bandwidth[0] > 0.0 && bandwidth[1] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got ({}, {})",
                bandwidth[0], bandwidth[1]
            )));
        }
        Ok(Self {
            center,
            bandwidth,
            score: f64::NAN,
            frame_index: 0,
            lost: false,
        })
    }
}

/// Per-pixel weights aligned with a [`Region`]'s pixel list.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    values: Vec<f64>,
}

impl WeightField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight field"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn per_pixel(region: &Region, scheme: BinningScheme, bin_weights: &[f64]) -> Result<WeightField> {
    WeightField::new(
        region
            .pixels
            .iter()
            .map(|px| bin_weights[scheme.bin_index(px.color)])
            .collect(),
    )
}

/// Standard mean-shift weights `sqrt(q_u / p_u(c0))` per pixel.
pub fn ms_weights(
    q_target: &Histogram,
    region: &Region,
    c0: Vec2,
    h: Vec2,
    kernel: SpatialKernel,
) -> Result<WeightField> {
    let scheme = q_target.scheme();
    let p = compute_histogram(region, c0, h, kernel, scheme)?;
    q_target.check_same_scheme(&p)?;
    let bins: Vec<f64> = q_target
        .values()
        .iter()
        .zip(p.values())
        .map(|(&q, &p)| if p > BIN_EPS { q.sqrt() / p.sqrt() } else { 0.0 })
        .collect();
    per_pixel(region, scheme, &bins)
}

/// Per-bin generalized weights `2 rho A_u p_u^(rho-1)` where `A` is the
/// model aggregate. For `rho = 0.5` this is `A_u / sqrt(p_u)`.
fn svm_bin_weights(model: &SvmModel, p: &Histogram) -> Vec<f64> {
    let rho = model.ppk().rho();
    model
        .aggregate()
        .iter()
        .zip(p.values())
        .map(|(&a, &p)| {
            if p <= BIN_EPS {
                0.0
            } else if rho == 0.5 {
                a / p.sqrt()
            } else {
                2.0 * rho * a * p.powf(rho - 1.0)
            }
        })
        .collect()
}

/// SVM-derived signed weights, read from the model's aggregate.
pub fn svm_weights(model: &SvmModel, region: &Region, c0: Vec2, h: Vec2, kernel: SpatialKernel) -> Result<WeightField> {
    let p = compute_histogram(region, c0, h, kernel, model.scheme())?;
    per_pixel(region, model.scheme(), &svm_bin_weights(model, &p))
}

fn check_lengths(region: &Region, weights: &WeightField) -> Result<()> {
    if region.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} weights for {} pixels",
            weights.len(),
            region.len()
        )));
    }
    Ok(())
}

fn weighted_centroid(
    region: &Region,
    weights: &WeightField,
    c: Vec2,
    h: Vec2,
    kernel: SpatialKernel,
    signed_denominator: bool,
) -> Result<Vec2> {
    check_lengths(region, weights)?;
    let (mut nx, mut ny, mut den) = (0.0, 0.0, 0.0);
    for (px, &w) in region.pixels.iter().zip(weights.values()) {
        let [dx, dy] = normalized_offset(px.pos, c, h);
        let wg = w * kernel.g(dx * dx + dy * dy);
        nx += px.pos[0] * wg;
        ny += px.pos[1] * wg;
        den += if signed_denominator { wg } else { wg.abs() };
    }
    if !(den > 0.0) {
        return Err(Error::EmptyKernelSupport);
    }
    Ok([nx / den, ny / den])
}

/// One mean-shift update: the `w g`-weighted centroid of the region.
pub fn ms_step(region: &Region, weights: &WeightField, c: Vec2, h: Vec2, kernel: SpatialKernel) -> Result<Vec2> {
    weighted_centroid(region, weights, c, h, kernel, true)
}

/// Collins' modified update: signed numerator over `sum |w g|`.
pub fn collins_ms_step(
    region: &Region,
    weights: &WeightField,
    c: Vec2,
    h: Vec2,
    kernel: SpatialKernel,
) -> Result<Vec2> {
    weighted_centroid(region, weights, c, h, kernel, false)
}

/// Exact SVM score of the histogram at `(c, h)`.
pub fn svm_score(model: &SvmModel, image: &Image, c: Vec2, h: Vec2, kernel: SpatialKernel) -> Result<f64> {
    let region = crop_region(image, c, h)?;
    let p = compute_histogram(&region, c, h, kernel, model.scheme())?;
    model.decision(&p)
}

/// Score and its gradient with respect to the center.
///
/// The histogram normalizer depends on `c`, so the gradient is
/// `lambda * sum_l (w_l - 2 rho (f - b)) g(t_l) (I_l - c) / h^2` per axis,
/// with `w_l` re-anchored at `c`. Dropping the `f - b` term gives the
/// fixed-normalizer approximation.
pub fn svm_score_and_gradient(
    model: &SvmModel,
    image: &Image,
    c: Vec2,
    h: Vec2,
    kernel: SpatialKernel,
) -> Result<(f64, Vec2)> {
    let region = crop_region(image, c, h)?;
    let p = compute_histogram(&region, c, h, kernel, model.scheme())?;
    let f = model.decision(&p)?;
    let bins = svm_bin_weights(model, &p);
    let shift = 2.0 * model.ppk().rho() * (f - model.bias());
    let scheme = model.scheme();
    let (mut mass, mut gx, mut gy) = (0.0, 0.0, 0.0);
    for px in &region.pixels {
        let [dx, dy] = normalized_offset(px.pos, c, h);
        let t = dx * dx + dy * dy;
        mass += kernel.k(t);
        let g = kernel.g(t);
        if g == 0.0 {
            continue;
        }
        let w = bins[scheme.bin_index(px.color)] - shift;
        gx += w * g * (px.pos[0] - c[0]);
        gy += w * g * (px.pos[1] - c[1]);
    }
    let lambda = 1.0 / mass;
    Ok((f, [lambda * gx / (h[0] * h[0]), lambda * gy / (h[1] * h[1])]))
}

pub fn svm_score_gradient(model: &SvmModel, image: &Image, c: Vec2, h: Vec2, kernel: SpatialKernel) -> Result<Vec2> {
    Ok(svm_score_and_gradient(model, image, c, h, kernel)?.1)
}

/// The SVM score over the image plane at a fixed bandwidth.
pub struct ScoreProblem<'a> {
    pub model: &'a SvmModel,
    pub image: &'a Image,
    pub bandwidth: Vec2,
    pub kernel: SpatialKernel,
}

impl AscentProblem for ScoreProblem<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        svm_score(self.model, self.image, [x[0], x[1]], self.bandwidth, self.kernel)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(svm_score_gradient(self.model, self.image, [x[0], x[1]], self.bandwidth, self.kernel)?.to_vec())
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (f, g) = svm_score_and_gradient(self.model, self.image, [x[0], x[1]], self.bandwidth, self.kernel)?;
        Ok((f, g.to_vec()))
    }

    fn project(&self, x: &mut [f64]) {
        let [cx, cy] = self.image.clamp_point([x[0], x[1]]);
        x[0] = cx;
        x[1] = cy;
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::histogram::histogram_at;
    use crate::imgproc::RegionPixel;
    use crate::ppk_svm::test_support::random_model;
    use crate::ppk_svm::PpkConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPAN: SpatialKernel = SpatialKernel::Epanechnikov;

    fn random_image(rng: &mut impl Rng, w: usize, h: usize, palette: &[[u8; 3]]) -> Image {
        let data = (0..w * h).flat_map(|_| palette[rng.random_range(0..palette.len())]).collect();
        Image::new(w, h, data).unwrap()
    }

    #[test]
    fn ms_weights_uniform_ratio_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 9, 9, &[[10, 10, 10], [200, 30, 30], [30, 200, 30]]);
        let (c, h) = ([4.0, 4.0], [3.0, 3.0]);
        let region = crop_region(&img, c, h).unwrap();
        let q = compute_histogram(&region, c, h, EPAN, BinningScheme::default()).unwrap();
        let w = ms_weights(&q, &region, c, h, EPAN).unwrap();
        // pixels outside the ellipse can belong to bins with p = 0
        let p = compute_histogram(&region, c, h, EPAN, BinningScheme::default()).unwrap();
        for (px, &v) in region.pixels.iter().zip(w.values()) {
            let u = BinningScheme::default().bin_index(px.color);
            if p.values()[u] > 0.0 {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ms_weights_two_color_formula() {
        let s = BinningScheme::new(2).unwrap();
        let (a, b) = ([0, 0, 0], [255, 255, 255]);
        let data: Vec<u8> = (0..9).flat_map(|i| if i % 2 == 0 { a } else { b }).collect();
        let img = Image::new(3, 3, data).unwrap();
        let (c, h) = ([1.0, 1.0], [2.0, 2.0]);
        let region = crop_region(&img, c, h).unwrap();
        // with these positions both colors carry kernel mass 3 of 6: p = [0.5, 0.5]
        let p = compute_histogram(&region, c, h, EPAN, s).unwrap();
        assert!((p.values()[0] - 0.5).abs() < 1e-12 && (p.values()[7] - 0.5).abs() < 1e-12);
        let mut qv = vec![0.0; 8];
        qv[0] = 0.8;
        qv[7] = 0.2;
        let q = Histogram::new(qv, s).unwrap();
        let w = ms_weights(&q, &region, c, h, EPAN).unwrap();
        for (px, &v) in region.pixels.iter().zip(w.values()) {
            let expect = if px.color == a { 1.6f64.sqrt() } else { 0.4f64.sqrt() };
            assert!((v - expect).abs() < 1e-12);
        }
        let mut qv = vec![0.0; 8];
        qv[0] = 1.0;
        let q = Histogram::new(qv, s).unwrap();
        let w = ms_weights(&q, &region, c, h, EPAN).unwrap();
        assert!(region.pixels.iter().zip(w.values()).all(|(px, &v)| px.color == a || v == 0.0));
    }

    fn region_at(points: &[Vec2], center: Vec2, h: Vec2) -> Region {
        Region {
            center,
            bandwidth: h,
            pixels: points.iter().map(|&pos| RegionPixel { pos, color: [0, 0, 0] }).collect(),
        }
    }

    #[test]
    fn ms_step_centroid_and_single_weight() {
        let img = Image::filled(11, 11, [5, 5, 5]).unwrap();
        let (c, h) = ([5.0, 5.0], [3.0, 3.0]);
        let region = crop_region(&img, c, h).unwrap();
        let ones = WeightField::new(vec![1.0; region.len()]).unwrap();
        assert_eq!(ms_step(&region, &ones, c, h, EPAN).unwrap(), [5.0, 5.0]);
        let mut w = vec![0.0; region.len()];
        w[10] = 2.5;
        let target = region.pixels[10].pos;
        let single = WeightField::new(w).unwrap();
        assert_eq!(ms_step(&region, &single, c, h, EPAN).unwrap(), target);
        let zero = WeightField::new(vec![0.0; region.len()]).unwrap();
        assert!(matches!(ms_step(&region, &zero, c, h, EPAN), Err(Error::EmptyKernelSupport)));
    }

    #[test]
    fn ms_step_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = Image::filled(5, 5, [0, 0, 0]).unwrap();
        let (c, h) = ([2.3, 1.8], [2.0, 2.5]);
        let region = crop_region(&img, c, h).unwrap();
        let w: Vec<f64> = (0..region.len()).map(|_| rng.random_range(0.0..2.0)).collect();
        for kernel in [EPAN, SpatialKernel::Gaussian] {
            let got = ms_step(&region, &WeightField::new(w.clone()).unwrap(), c, h, kernel).unwrap();
            let (mut nx, mut ny, mut d) = (0.0, 0.0, 0.0);
            for y in 0..5 {
                for x in 0..5 {
                    let (fx, fy) = (x as f64, y as f64);
                    if (fx - c[0]).abs() > h[0] || (fy - c[1]).abs() > h[1] {
                        continue;
                    }
                    let i = region.pixels.iter().position(|p| p.pos == [fx, fy]).unwrap();
                    let t = ((fx - c[0]) / h[0]).powi(2) + ((fy - c[1]) / h[1]).powi(2);
                    let g = match kernel {
                        SpatialKernel::Epanechnikov => f64::from(t < 1.0),
                        SpatialKernel::Gaussian => 0.5 * (-t / 2.0).exp(),
                    };
                    nx += fx * w[i] * g;
                    ny += fy * w[i] * g;
                    d += w[i] * g;
                }
            }
            assert!((got[0] - nx / d).abs() < 1e-12 && (got[1] - ny / d).abs() < 1e-12);
        }
    }

    #[test]
    fn collins_step_equals_ms_for_positive_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = Image::filled(9, 9, [0, 0, 0]).unwrap();
        let (c, h) = ([4.2, 3.7], [3.0, 2.0]);
        let region = crop_region(&img, c, h).unwrap();
        let w = WeightField::new((0..region.len()).map(|_| rng.random_range(0.1..3.0)).collect()).unwrap();
        assert_eq!(
            collins_ms_step(&region, &w, c, h, EPAN).unwrap(),
            ms_step(&region, &w, c, h, EPAN).unwrap()
        );
    }

    #[test]
    fn collins_step_on_signed_pair_opposes_the_gradient() {
        // +1 at x=-1, -1 at x=+1, Gaussian, h=1: the numerator is -(ga + gb)
        // and the denominator ga + gb, so every center maps to -1
        let h = [1.0, 1.0];
        let w = WeightField::new(vec![1.0, -1.0]).unwrap();
        for x in [0.5, 3.0] {
            let c = [x, 0.0];
            let region = region_at(&[[-1.0, 0.0], [1.0, 0.0]], c, h);
            let got = collins_ms_step(&region, &w, c, h, SpatialKernel::Gaussian).unwrap();
            assert!((got[0] + 1.0).abs() < 1e-12);
            assert_eq!(got[1], 0.0);
        }
        // df/dx at 3 = 2 [ga (-1 - x) - gb (1 - x)] > 0 while the step goes left
        let ga = 0.5 * (-(4.0f64).powi(2) / 2.0).exp();
        let gb = 0.5 * (-(2.0f64).powi(2) / 2.0).exp();
        let grad = 2.0 * (ga * (-4.0) - gb * (-2.0));
        assert!(grad > 0.0);
    }

    #[test]
    fn svm_weights_reduce_to_ms_weights_for_one_support_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = scene(4);
        let h = [6.0, 6.0];
        for _ in 0..10 {
            let q = histogram_at(&img, [rng.random_range(8.0..56.0), rng.random_range(8.0..56.0)], h, EPAN, BinningScheme::default())
                .unwrap();
            let m = SvmModel::new(BinningScheme::default(), PpkConfig::default(), vec![q.clone()], vec![1.0], rng.random())
                .unwrap();
            let c = [rng.random_range(8.0..56.0), rng.random_range(8.0..56.0)];
            let region = crop_region(&img, c, h).unwrap();
            let a = svm_weights(&m, &region, c, h, EPAN).unwrap();
            let b = ms_weights(&q, &region, c, h, EPAN).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-12);
            }
            let neg = svm_weights(&m.negated(), &region, c, h, EPAN).unwrap();
            assert!(neg.values().iter().zip(a.values()).all(|(x, y)| *x == -*y));
        }
    }

    #[test]
    fn svm_weights_match_naive_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = BinningScheme::new(2).unwrap();
        let palette: Vec<[u8; 3]> = (0..8).map(|i| [if i & 1 > 0 { 200 } else { 20 }, if i & 2 > 0 { 200 } else { 20 }, if i & 4 > 0 { 200 } else { 20 }]).collect();
        let img = random_image(&mut rng, 4, 4, &palette);
        let m = random_model(&mut rng, s, 3);
        let (c, h) = ([1.5, 1.5], [2.0, 2.0]);
        let region = crop_region(&img, c, h).unwrap();
        let w = svm_weights(&m, &region, c, h, EPAN).unwrap();
        let p = compute_histogram(&region, c, h, EPAN, s).unwrap();
        for (px, &got) in region.pixels.iter().zip(w.values()) {
            let u = s.bin_index(px.color);
            let mut expect = 0.0;
            if p.values()[u] > 0.0 {
                for (q, beta) in m.support().iter().zip(m.betas()) {
                    expect += beta * q.values()[u].sqrt() / p.values()[u].sqrt();
                }
            }
            assert!((got - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn svm_score_examples() {
        let img = scene(6);
        let (c, h) = ([30.0, 30.0], [5.0, 5.0]);
        let q = histogram_at(&img, c, h, EPAN, BinningScheme::default()).unwrap();
        let m = SvmModel::new(BinningScheme::default(), PpkConfig::default(), vec![q], vec![1.0], 0.0).unwrap();
        assert!((svm_score(&m, &img, c, h, EPAN).unwrap() - 1.0).abs() < 1e-12);

        let flat = Image::filled(20, 20, [90, 120, 30]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_model(&mut rng, BinningScheme::default(), 4);
        let f0 = svm_score(&m, &flat, [10.0, 10.0], [3.0, 3.0], EPAN).unwrap();
        for _ in 0..10 {
            let c = [rng.random_range(3.0..16.0), rng.random_range(3.0..16.0)];
            assert!((svm_score(&m, &flat, c, [3.0, 3.0], EPAN).unwrap() - f0).abs() < 1e-9);
        }
    }

    #[test]
    fn svm_score_is_decision_of_histogram() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut img = random_image(&mut rng, 20, 20, &[[200, 40, 40], [40, 200, 40], [40, 40, 200], [128, 128, 128]]);
        img.set_pixel(0, 0, [1, 2, 3]);
        let h = [4.0, 3.0];
        let m = model_from_image(&mut rng, &img, 2, h);
        for _ in 0..10 {
            let c = [rng.random_range(0.0..19.0), rng.random_range(0.0..19.0)];
            let direct = m.decision(&histogram_at(&img, c, h, EPAN, m.scheme()).unwrap()).unwrap();
            assert!((svm_score(&m, &img, c, h, EPAN).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_by_symmetry() {
        // concentric square rings give a symmetric region around (8, 8)
        let mut img = Image::filled(17, 17, [0, 0, 0]).unwrap();
        for y in 0..17 {
            for x in 0..17 {
                let r = (x as i32 - 8).abs().max((y as i32 - 8).abs());
                let v = (r * 30).min(255) as u8;
                img.set_pixel(x, y, [v, 255 - v, 100]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = model_from_image(&mut rng, &img, 3, [4.0, 4.0]);
        let g = svm_score_gradient(&m, &img, [8.0, 8.0], [5.0, 5.0], EPAN).unwrap();
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
    }

    #[test]
    fn slab_image_has_no_vertical_gradient() {
        let mut img = Image::filled(24, 24, [0, 0, 0]).unwrap();
        for y in 0..24 {
            for x in 0..24 {
                img.set_pixel(x, y, [(x * 10) as u8, 50, 200 - (x * 5) as u8]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = model_from_image(&mut rng, &img, 3, [4.0, 4.0]);
        for _ in 0..5 {
            let c = [rng.random_range(6.0..18.0), rng.random_range(6.0f64..18.0).round()];
            let g = svm_score_gradient(&m, &img, c, [4.0, 4.0], EPAN).unwrap();
            assert!(g[1].abs() < 1e-12, "{g:?}");
        }
    }

    fn fd_gradient(m: &SvmModel, img: &Image, c: Vec2, h: Vec2, step: f64) -> Vec2 {
        let f = |x: Vec2| svm_score(m, img, x, h, EPAN).unwrap();
        [
            (f([c[0] + step, c[1]]) - f([c[0] - step, c[1]])) / (2.0 * step),
            (f([c[0], c[1] + step]) - f([c[0], c[1] - step])) / (2.0 * step),
        ]
    }

    fn rel_err(a: Vec2, b: Vec2) -> f64 {
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        d / (b[0].hypot(b[1])).max(1e-8)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let palette: Vec<[u8; 3]> = (0..12).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let img = random_image(&mut rng, 16, 16, &palette);
        let h = [4.0, 3.5];
        let m = model_from_image(&mut rng, &img, 4, h);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let c = [rng.random_range(3.0..12.0), rng.random_range(3.0..12.0)];
            let a = svm_score_gradient(&m, &img, c, h, EPAN).unwrap();
            worst = worst.max(rel_err(a, fd_gradient(&m, &img, c, h, 1e-3)));
        }
        assert!(worst <= 1e-2, "worst relative error {worst}");
    }

    #[test]
    fn fixed_normalizer_gradient_is_only_approximate() {
        // dropping the normalizer term misses the finite-difference gradient
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = scene(11);
        let h = [6.0, 6.0];
        let m = model_from_image(&mut rng, &img, 4, h);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let c = [rng.random_range(10.0..54.0), rng.random_range(10.0..54.0)];
            let region = crop_region(&img, c, h).unwrap();
            let w = svm_weights(&m, &region, c, h, EPAN).unwrap();
            let mass: f64 = region
                .pixels
                .iter()
                .map(|px| {
                    let [dx, dy] = normalized_offset(px.pos, c, h);
                    EPAN.k(dx * dx + dy * dy)
                })
                .sum();
            let mut g = [0.0; 2];
            for (px, &wl) in region.pixels.iter().zip(w.values()) {
                let [dx, dy] = normalized_offset(px.pos, c, h);
                let gl = EPAN.g(dx * dx + dy * dy);
                g[0] += wl * gl * (px.pos[0] - c[0]) / (mass * h[0] * h[0]);
                g[1] += wl * gl * (px.pos[1] - c[1]) / (mass * h[1] * h[1]);
            }
            worst = worst.max(rel_err(g, fd_gradient(&m, &img, c, h, 1e-3)));
        }
        assert!(worst > 1e-2, "worst relative error {worst}");
    }

    #[test]
    fn weight_field_rejects_non_finite() {
        assert!(WeightField::new(vec![1.0, f64::NAN]).is_err());
    }
}
