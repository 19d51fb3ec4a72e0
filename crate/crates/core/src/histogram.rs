//! Spatial kernel profiles and kernel-weighted RGB histograms.

use crate::imgproc::{crop_region, normalized_offset, Image, Region};
use crate::{Error, Result, Vec2};

/// Radial kernel profile `k(t)` over the squared normalized distance `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpatialKernel {
    #[default]
    Epanechnikov,
    /// Unit-variance Gaussian, `k(t) = exp(-t/2)`.
    Gaussian,
}

impl SpatialKernel {
    /// `(k(t), g(t))` with `g = -k'`. `t` must be non-negative.
    pub fn profile_eval(self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile argument must be >= 0, got {t}"
            )));
        }
        Ok((self.k(t), self.g(t)))
    }

    #[inline]
    pub(crate) fn k(self, t: f64) -> f64 {
        match self {
            SpatialKernel::Epanechnikov => {
                if t <= 1.0 {
                    1.0 - t
                } else {
                    0.0
                }
            }
            SpatialKernel::Gaussian => (-0.5 * t).exp(),
        }
    }

    #[inline]
    pub(crate) fn g(self, t: f64) -> f64 {
        match self {
            SpatialKernel::Epanechnikov => {
                if t < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpatialKernel::Gaussian => 0.5 * (-0.5 * t).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpatialKernel::Epanechnikov => "epanechnikov",
            SpatialKernel::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for SpatialKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" => Ok(SpatialKernel::Epanechnikov),
            "gaussian" => Ok(SpatialKernel::Gaussian),
            other => Err(Error::InvalidArgument(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Uniform quantization of each RGB channel into `B` levels, `m = B^3` bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinningScheme {
    bins_per_channel: u32,
}

impl Default for BinningScheme {
    fn default() -> Self {
        Self {
            bins_per_channel: 16,
        }
    }
}

impl BinningScheme {
    pub fn new(bins_per_channel: u32) -> Result<Self> {
        if !(1..=256).contains(&bins_per_channel) {
            return Err(Error::InvalidArgument(format!(
                "bins per channel must be in 1..=256, got {bins_per_channel}"
            )));
        }
        Ok(Self { bins_per_channel })
    }

    pub fn bins_per_channel(self) -> u32 {
        self.bins_per_channel
    }

    /// Total number of bins `m`.
    pub fn len(self) -> usize {
        (self.bins_per_channel as usize).pow(3)
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Zero-based bin of a color: `floor(r B/256) B^2 + floor(g B/256) B + floor(b B/256)`.
    #[inline]
    pub fn bin_index(self, color: [u8; 3]) -> usize {
        let b = self.bins_per_channel as usize;
        let q = |v: u8| v as usize * b / 256;
        q(color[0]) * b * b + q(color[1]) * b + q(color[2])
    }
}

/// A normalized `m`-bin density.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    values: Vec<f64>,
    scheme: BinningScheme,
}

impl Histogram {
    /// Wraps values that already form a normalized density.
    pub fn new(values: Vec<f64>, scheme: BinningScheme) -> Result<Self> {
        if values.len() != scheme.len() {
            return Err(Error::SchemeMismatch {
                left: values.len(),
                right: scheme.len(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "histogram values must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "histogram must sum to 1, sums to {sum}"
            )));
        }
        Ok(Self { values, scheme })
    }

    /// Normalizes non-negative weights into a density.
    pub fn from_weights(mut weights: Vec<f64>, scheme: BinningScheme) -> Result<Self> {
        if weights.len() != scheme.len() {
            return Err(Error::SchemeMismatch {
                left: weights.len(),
                right: scheme.len(),
            });
        }
        if weights.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "histogram weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyKernelSupport);
        }
        let lambda = 1.0 / total;
        weights.iter_mut().for_each(|v| *v *= lambda);
        Ok(Self {
            values: weights,
            scheme,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scheme(&self) -> BinningScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_same_scheme(&self, other: &Histogram) -> Result<()> {
        if self.scheme != other.scheme {
            return Err(Error::SchemeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// `B` as little-endian u32 followed by `m` little-endian f64 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.values.len());
        out.extend_from_slice(&self.scheme.bins_per_channel.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let b = bytes
            .get(..4)
            .ok_or_else(|| Error::malformed("histogram", "missing bin count"))?;
        let scheme = BinningScheme::new(u32::from_le_bytes(b.try_into().unwrap()))?;
        let body = &bytes[4..];
        if body.len() != 8 * scheme.len() {
            return Err(Error::malformed(
                "histogram",
                format!("expected {} value bytes, found {}", 8 * scheme.len(), body.len()),
            ));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Histogram::new(values, scheme)
    }
}

/// Kernel-weighted histogram of `region`'s pixels evaluated with the kernel
/// centered at `center`.
pub fn compute_histogram(
    region: &Region,
    center: Vec2,
    bandwidth: Vec2,
    kernel: SpatialKernel,
    scheme: BinningScheme,
) -> Result<Histogram> {
    if region.is_empty() {
        return Err(Error::EmptyKernelSupport);
    }
    if !(bandwidth[0] > 0.0 && bandwidth[1] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got ({}, {})",
            bandwidth[0], bandwidth[1]
        )));
    }
    let mut values = vec![0.0; scheme.len()];
    for px in &region.pixels {
        let [dx, dy] = normalized_offset(px.pos, center, bandwidth);
        let w = kernel.k(dx * dx + dy * dy);
        if w > 0.0 {
            values[scheme.bin_index(px.color)] += w;
        }
    }
    Histogram::from_weights(values, scheme)
}

/// Crops the box at `(center, bandwidth)` and builds its histogram.
pub fn histogram_at(
    img: &Image,
    center: Vec2,
    bandwidth: Vec2,
    kernel: SpatialKernel,
    scheme: BinningScheme,
) -> Result<Histogram> {
    let region = crop_region(img, center, bandwidth)?;
    compute_histogram(&region, center, bandwidth, kernel, scheme)
}

/// Bhattacharyya coefficient `sum_u sqrt(q_u p_u)`.
pub fn bhattacharyya(q: &Histogram, p: &Histogram) -> Result<f64> {
    q.check_same_scheme(p)?;
    let s: f64 = q
        .values
        .iter()
        .zip(&p.values)
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Ok(s.min(1.0))
}

/// `sqrt(1 - bhattacharyya(q, p))`.
pub fn bhattacharyya_distance(q: &Histogram, p: &Histogram) -> Result<f64> {
    Ok((1.0 - bhattacharyya(q, p)?).max(0.0).sqrt())
}
