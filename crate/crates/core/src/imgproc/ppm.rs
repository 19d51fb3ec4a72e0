//! Binary PPM (P6, maxval 255).

use std::fs;
use std::path::Path;

use super::Image;
use crate::{Error, Result};

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let bytes = fs::read(path)?;
    decode_ppm(&bytes)
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_ppm(img))?;
    Ok(())
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.data());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    /// Skips whitespace and `#` comments between header tokens.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &str) -> Result<usize> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::malformed("ppm header", format!("missing {field}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::malformed("ppm header", format!("bad {field}")))
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(b"\x89PNG") {
        return Err(Error::UnsupportedFormat("PNG".into()));
    }
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::UnsupportedFormat("not a PPM file".into()));
    }
    if bytes[1] != b'6' {
        return Err(Error::UnsupportedFormat(format!(
            "PNM variant P{}",
            bytes[1] as char
        )));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::malformed("ppm header", "no raster separator")),
    }
    if width == 0 || height == 0 {
        return Err(Error::malformed("ppm header", "zero dimension"));
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::malformed("ppm header", "dimensions overflow"))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < need {
        return Err(Error::malformed(
            "ppm payload",
            format!("expected {need} bytes, found {}", raster.len()),
        ));
    }
    Image::new(width, height, raster[..need].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_two() -> Vec<u8> {
        let mut f = b"P6\n# hand written\n2 2\n255\n".to_vec();
        f.extend_from_slice(&[255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255]);
        f
    }

    #[test]
    fn decodes_hand_written_file() {
        let img = decode_ppm(&two_by_two()).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixel(0, 0), [255, 0, 0]);
        assert_eq!(img.pixel(1, 0), [0, 255, 0]);
        assert_eq!(img.pixel(0, 1), [0, 0, 255]);
        assert_eq!(img.pixel(1, 1), [255, 255, 255]);
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let mut f = two_by_two();
        f.truncate(f.len() - 1);
        let err = decode_ppm(&f).unwrap_err();
        assert!(err.to_string().contains("malformed"), "{err}");
    }

    #[test]
    fn other_formats_are_rejected() {
        assert!(matches!(
            decode_ppm(b"P3\n1 1\n255\n0 0 0\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_ppm(b"\x89PNG\r\n\x1a\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_ppm(b"P6\n1 1\n65535\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(decode_ppm(b"P6\n1\n"), Err(Error::Malformed { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ppm");
        let img = decode_ppm(&two_by_two()).unwrap();
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    proptest! {
        #[test]
        fn encode_decode_is_identity(data in proptest::collection::vec(any::<u8>(), 8 * 8 * 3)) {
            let img = Image::new(8, 8, data).unwrap();
            prop_assert_eq!(decode_ppm(&encode_ppm(&img)).unwrap(), img);
        }
    }
}
