//! Images, regions and synthetic sequences.

mod dataset;
mod ppm;
mod synth;

pub use dataset::{
    format_ground_truth, load_dataset, parse_ground_truth, save_dataset, GroundTruthBox,
    SequenceDataset,
};
pub use ppm::{decode_ppm, encode_ppm, load_image, save_image};
pub use synth::{synth_sequence, MotionPath, Occluder, SynthConfig};

use crate::{Error, Result, Vec2};

/// An 8-bit RGB image stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::LengthMismatch(format!(
                "{}x{} RGB image needs {} bytes, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A uniformly colored image.
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        let data = color
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&color);
    }

    /// Whether a continuous point lies inside `[0, w-1] x [0, h-1]`.
    pub fn contains(&self, p: Vec2) -> bool {
        p[0] >= 0.0
            && p[1] >= 0.0
            && p[0] <= (self.width - 1) as f64
            && p[1] <= (self.height - 1) as f64
    }

    /// Clamps a continuous point into the image's pixel-center rectangle.
    pub fn clamp_point(&self, p: Vec2) -> Vec2 {
        [
            p[0].clamp(0.0, (self.width - 1) as f64),
            p[1].clamp(0.0, (self.height - 1) as f64),
        ]
    }

    /// Copies the integer box `[x0, x0+w) x [y0, y0+h)` into a new image.
    pub fn sub_image(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidArgument(format!(
                "sub-image {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * 3;
            data.extend_from_slice(&self.data[start..start + w * 3]);
        }
        Image::new(w, h, data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionPixel {
    pub pos: Vec2,
    pub color: [u8; 3],
}

/// The pixels of an axis-aligned box around a continuous center.
///
/// The box is not masked to a circle; the spatial kernel does that when a
/// histogram is built.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub center: Vec2,
    pub bandwidth: Vec2,
    pub pixels: Vec<RegionPixel>,
}

impl Region {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Offset of a pixel divided component-wise by the bandwidth.
    #[inline]
    pub fn normalized_offset(&self, p: Vec2) -> Vec2 {
        normalized_offset(p, self.center, self.bandwidth)
    }
}

#[inline]
pub(crate) fn normalized_offset(p: Vec2, center: Vec2, bandwidth: Vec2) -> Vec2 {
    let nx = if bandwidth[0] > 0.0 {
        (p[0] - center[0]) / bandwidth[0]
    } else {
        0.0
    };
    let ny = if bandwidth[1] > 0.0 {
        (p[1] - center[1]) / bandwidth[1]
    } else {
        0.0
    };
    [nx, ny]
}

/// Integer pixel span `[lo, hi]` of `|x - c| <= h`, clipped to `[0, n-1]`.
fn span(c: f64, h: f64, n: usize) -> Option<(usize, usize)> {
    let lo = (c - h).ceil().max(0.0);
    let hi = (c + h).floor().min((n - 1) as f64);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Collects every pixel of the box `|p - center| <= bandwidth` (per axis)
/// that lies inside the image.
pub fn crop_region(img: &Image, center: Vec2, bandwidth: Vec2) -> Result<Region> {
    if !center[0].is_finite() || !center[1].is_finite() || !img.contains(center) {
        return Err(Error::OutOfBounds {
            x: center[0],
            y: center[1],
            width: img.width,
            height: img.height,
        });
    }
    if !(bandwidth[0] >= 0.0 && bandwidth[1] >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be non-negative, got ({}, {})",
            bandwidth[0], bandwidth[1]
        )));
    }
    let (Some((x0, x1)), Some((y0, y1))) = (
        span(center[0], bandwidth[0], img.width),
        span(center[1], bandwidth[1], img.height),
    ) else {
        return Err(Error::EmptyKernelSupport);
    };
    let mut pixels = Vec::with_capacity((x1 - x0 + 1) * (y1 - y0 + 1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            pixels.push(RegionPixel {
                pos: [x as f64, y as f64],
                color: img.pixel(x, y),
            });
        }
    }
    Ok(Region {
        center,
        bandwidth,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn crop_interior_box() {
        let img = Image::filled(10, 10, [1, 2, 3]).unwrap();
        let r = crop_region(&img, [5.0, 5.0], [2.0, 2.0]).unwrap();
        assert_eq!(r.len(), 25);
    }

    #[test]
    fn crop_clips_at_corner() {
        let img = Image::filled(10, 10, [0, 0, 0]).unwrap();
        let r = crop_region(&img, [0.0, 0.0], [2.0, 2.0]).unwrap();
        assert_eq!(r.len(), 9);
    }

    #[test]
    fn crop_degenerate_box() {
        let img = Image::filled(10, 10, [0, 0, 0]).unwrap();
        let r = crop_region(&img, [5.0, 5.0], [0.0, 0.0]).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.pixels[0].pos, [5.0, 5.0]);
    }

    #[test]
    fn crop_outside_is_error() {
        let img = Image::filled(10, 10, [0, 0, 0]).unwrap();
        assert!(matches!(
            crop_region(&img, [10.5, 3.0], [2.0, 2.0]),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(matches!(
            crop_region(&img, [-0.1, 3.0], [2.0, 2.0]),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn image_rejects_bad_lengths() {
        assert!(Image::new(2, 2, vec![0; 11]).is_err());
        assert!(Image::new(0, 2, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn crop_count_matches_enumeration(
            w in 1usize..20, h in 1usize..20,
            fx in 0.0f64..1.0, fy in 0.0f64..1.0,
            hx in 0.0f64..8.0, hy in 0.0f64..8.0,
        ) {
            let img = Image::filled(w, h, [9, 9, 9]).unwrap();
            let c = [fx * (w - 1) as f64, fy * (h - 1) as f64];
            let mut expected = 0usize;
            for y in 0..h {
                for x in 0..w {
                    if (x as f64 - c[0]).abs() <= hx && (y as f64 - c[1]).abs() <= hy {
                        expected += 1;
                    }
                }
            }
            match crop_region(&img, c, [hx, hy]) {
                Ok(r) => {
                    prop_assert_eq!(r.len(), expected);
                    for p in &r.pixels {
                        let o = r.normalized_offset(p.pos);
                        prop_assert!((p.pos[0] - c[0]).abs() <= hx);
                        prop_assert!((p.pos[1] - c[1]).abs() <= hy);
                        prop_assert!((o[0] * o[0] + o[1] * o[1]).sqrt() <= 2f64.sqrt() + 1e-12);
                    }
                }
                Err(Error::EmptyKernelSupport) => prop_assert_eq!(expected, 0),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
