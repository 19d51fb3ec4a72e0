//! Binary model files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   "KTSVM\0\0\x01"          8 bytes
//! version u32
//! B       u32                      bins per channel
//! rho     f64
//! N_S     u64
//! b       f64
//! beta    N_S x f64
//! agg     m x f64                  cached aggregate, m = B^3
//! q_i     N_S x m x f64            support histograms
//! ```

use std::fs;
use std::path::Path;

use super::{PpkConfig, SvmModel};
use crate::histogram::{BinningScheme, Histogram};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"KTSVM\0\0\x01";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model(model: &SvmModel) -> Vec<u8> {
    let m = model.scheme().len();
    let mut out = Vec::with_capacity(40 + 8 * (model.len() * (m + 1) + m));
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&model.scheme().bins_per_channel().to_le_bytes());
    out.extend_from_slice(&model.ppk().rho().to_le_bytes());
    out.extend_from_slice(&(model.len() as u64).to_le_bytes());
    out.extend_from_slice(&model.bias().to_le_bytes());
    let floats = model
        .betas()
        .iter()
        .chain(model.aggregate())
        .chain(model.support().iter().flat_map(|h| h.values()));
    for v in floats {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::malformed("model file", "truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::malformed("model file", "size overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn read_model(bytes: &[u8]) -> Result<SvmModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MODEL_MAGIC.len())? != MODEL_MAGIC {
        return Err(Error::malformed("model file", "bad magic"));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let scheme = BinningScheme::new(r.u32()?)?;
    let ppk = PpkConfig::new(r.f64()?)?;
    let n = usize::try_from(r.u64()?).map_err(|_| Error::malformed("model file", "support count"))?;
    let bias = r.f64()?;
    let m = scheme.len();
    // reject absurd counts before allocating
    let need = n
        .checked_mul(m + 1)
        .and_then(|v| v.checked_add(m))
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::malformed("model file", "size overflow"))?;
    if bytes.len() - r.pos != need {
        return Err(Error::malformed(
            "model file",
            format!("expected {need} payload bytes, found {}", bytes.len() - r.pos),
        ));
    }
    let betas = r.f64s(n)?;
    let aggregate = r.f64s(m)?;
    let support = (0..n)
        .map(|_| Histogram::new(r.f64s(m)?, scheme))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::malformed("model file", format!("support histogram: {e}")))?;
    if betas.iter().chain(&aggregate).any(|v| !v.is_finite()) || !bias.is_finite() {
        return Err(Error::malformed("model file", "non-finite coefficient"));
    }
    let model = SvmModel::from_parts_unchecked(scheme, ppk, support, betas, bias, aggregate);
    let scale = model.betas().iter().map(|b| b.abs()).sum::<f64>().max(1.0);
    if model.aggregate_drift() > 1e-9 * scale {
        return Err(Error::malformed("model file", "aggregate does not match support vectors"));
    }
    Ok(model)
}

pub fn save_model(model: &SvmModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_model(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    read_model(&fs::read(path)?)
}
