//! Probability product kernel SVMs over color histograms.
//!
//! The PPK `K(q, p) = sum_u q_u^rho p_u^rho` has the explicit feature map
//! `q -> q^rho`, so a trained decision function collapses to a single dot
//! product with the cached aggregate `sum_i beta_i q_i^rho`. Evaluating a
//! model therefore costs `O(m)` no matter how many support vectors it has.

mod io;
mod norma;
mod smo;

pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use norma::{norma_update, NormaConfig, NormaOutcome};
pub use smo::{train_batch, TrainConfig, TrainReport};

use crate::histogram::{BinningScheme, Histogram};
use crate::{Error, Result};

/// Probability product kernel exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpkConfig {
    rho: f64,
}

impl Default for PpkConfig {
    /// The Bhattacharyya kernel, `rho = 0.5`.
    fn default() -> Self {
        Self { rho: 0.5 }
    }
}

impl PpkConfig {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(self) -> f64 {
        self.rho
    }

    #[inline]
    pub(crate) fn pow(self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else if self.rho == 0.5 {
            v.sqrt()
        } else if self.rho == 1.0 {
            v
        } else {
            v.powf(self.rho)
        }
    }

    /// The explicit feature map `q^rho`.
    pub fn feature_map(self, q: &Histogram) -> Vec<f64> {
        q.values().iter().map(|&v| self.pow(v)).collect()
    }
}

pub fn ppk_kernel(q: &Histogram, p: &Histogram, cfg: PpkConfig) -> Result<f64> {
    q.check_same_scheme(p)?;
    Ok(q
        .values()
        .iter()
        .zip(p.values())
        .map(|(&a, &b)| cfg.pow(a) * cfg.pow(b))
        .sum())
}

/// A PPK-SVM decision function with its support-vector aggregate cached.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    scheme: BinningScheme,
    ppk: PpkConfig,
    support: Vec<Histogram>,
    betas: Vec<f64>,
    bias: f64,
    aggregate: Vec<f64>,
}

impl SvmModel {
    pub fn new(
        scheme: BinningScheme,
        ppk: PpkConfig,
        support: Vec<Histogram>,
        betas: Vec<f64>,
        bias: f64,
    ) -> Result<Self> {
        if support.len() != betas.len() {
            return Err(Error::LengthMismatch(format!(
                "{} support histograms but {} coefficients",
                support.len(),
                betas.len()
            )));
        }
        if let Some(h) = support.iter().find(|h| h.scheme() != scheme) {
            return Err(Error::SchemeMismatch {
                left: h.len(),
                right: scheme.len(),
            });
        }
        if betas.iter().any(|b| !b.is_finite()) || !bias.is_finite() {
            return Err(Error::NonFinite("model coefficients"));
        }
        let mut model = Self {
            scheme,
            ppk,
            support,
            betas,
            bias,
            aggregate: Vec::new(),
        };
        model.aggregate = model.aggregate_from_scratch();
        Ok(model)
    }

    /// A model with no support vectors; its decision is the bias alone.
    pub fn empty(scheme: BinningScheme, ppk: PpkConfig, bias: f64) -> Self {
        Self {
            scheme,
            ppk,
            support: Vec::new(),
            betas: Vec::new(),
            bias,
            aggregate: vec![0.0; scheme.len()],
        }
    }

    pub(crate) fn from_parts_unchecked(
        scheme: BinningScheme,
        ppk: PpkConfig,
        support: Vec<Histogram>,
        betas: Vec<f64>,
        bias: f64,
        aggregate: Vec<f64>,
    ) -> Self {
        Self {
            scheme,
            ppk,
            support,
            betas,
            bias,
            aggregate,
        }
    }

    pub fn scheme(&self) -> BinningScheme {
        self.scheme
    }

    pub fn ppk(&self) -> PpkConfig {
        self.ppk
    }

    pub fn support(&self) -> &[Histogram] {
        &self.support
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Number of support vectors, `N_S`.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `sum_i beta_i q_i^rho`.
    pub fn aggregate(&self) -> &[f64] {
        &self.aggregate
    }

    pub fn aggregate_from_scratch(&self) -> Vec<f64> {
        let mut agg = vec![0.0; self.scheme.len()];
        for (q, &beta) in self.support.iter().zip(&self.betas) {
            for (a, &v) in agg.iter_mut().zip(q.values()) {
                if v > 0.0 {
                    *a += beta * self.ppk.pow(v);
                }
            }
        }
        agg
    }

    /// Largest absolute difference between the cached and a freshly
    /// recomputed aggregate.
    pub fn aggregate_drift(&self) -> f64 {
        self.aggregate_from_scratch()
            .iter()
            .zip(&self.aggregate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn recompute_aggregate(&mut self) {
        self.aggregate = self.aggregate_from_scratch();
    }

    /// Returns a copy with every coefficient and the bias negated.
    pub fn negated(&self) -> SvmModel {
        let mut m = self.clone();
        m.betas.iter_mut().for_each(|b| *b = -*b);
        m.aggregate.iter_mut().for_each(|a| *a = -*a);
        m.bias = -m.bias;
        m
    }

    /// `f(p) = aggregate . p^rho + b`.
    pub fn decision(&self, p: &Histogram) -> Result<f64> {
        if p.scheme() != self.scheme {
            return Err(Error::SchemeMismatch {
                left: p.len(),
                right: self.scheme.len(),
            });
        }
        let mut s = 0.0;
        for (&a, &v) in self.aggregate.iter().zip(p.values()) {
            if v > 0.0 {
                s += a * self.ppk.pow(v);
            }
        }
        Ok(s + self.bias)
    }

    pub(crate) fn push_support(&mut self, q: Histogram, beta: f64) {
        for (a, &v) in self.aggregate.iter_mut().zip(q.values()) {
            if v > 0.0 {
                *a += beta * self.ppk.pow(v);
            }
        }
        self.support.push(q);
        self.betas.push(beta);
    }

    pub(crate) fn remove_support(&mut self, i: usize) -> (Histogram, f64) {
        let q = self.support.remove(i);
        let beta = self.betas.remove(i);
        for (a, &v) in self.aggregate.iter_mut().zip(q.values()) {
            if v > 0.0 {
                *a -= beta * self.ppk.pow(v);
            }
        }
        (q, beta)
    }

    pub(crate) fn scale_betas(&mut self, factor: f64) {
        self.betas.iter_mut().for_each(|b| *b *= factor);
        self.aggregate.iter_mut().for_each(|a| *a *= factor);
    }

    pub(crate) fn add_bias(&mut self, delta: f64) {
        self.bias += delta;
    }
}
