//! NORMA online updates: stochastic gradient steps on the regularized hinge
//! loss with a bounded support buffer.

use super::SvmModel;
use crate::histogram::Histogram;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormaConfig {
    /// Learning rate.
    pub eta: f64,
    /// Regularization rate; coefficients decay by `1 - eta * lambda_reg`.
    pub lambda_reg: f64,
    /// Maximum number of retained support vectors.
    pub buffer_cap: usize,
}

impl Default for NormaConfig {
    fn default() -> Self {
        Self {
            eta: 0.2,
            lambda_reg: 0.1,
            buffer_cap: 100,
        }
    }
}

impl NormaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be > 0, got {}", self.eta)));
        }
        let decay = self.eta * self.lambda_reg;
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::InvalidArgument(format!(
                "eta * lambda_reg must be in [0, 1), got {decay}"
            )));
        }
        if self.buffer_cap == 0 {
            return Err(Error::InvalidArgument("buffer_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// What a single update did to the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormaOutcome {
    /// Decision value of the sample before the update.
    pub score: f64,
    pub inserted: bool,
    pub evicted: bool,
}

impl SvmModel {
    /// Applies one NORMA step in place.
    ///
    /// The margin is checked against the model as it was before the step.
    pub fn norma_step(&mut self, sample: &Histogram, label: f64, cfg: &NormaConfig) -> Result<NormaOutcome> {
        cfg.validate()?;
        if label != 1.0 && label != -1.0 {
            return Err(Error::InvalidArgument("label must be +1 or -1".into()));
        }
        let score = self.decision(sample)?;
        let decay = 1.0 - cfg.eta * cfg.lambda_reg;
        if decay != 1.0 {
            self.scale_betas(decay);
        }
        let mut outcome = NormaOutcome {
            score,
            inserted: false,
            evicted: false,
        };
        if label * score < 1.0 {
            self.push_support(sample.clone(), cfg.eta * label);
            self.add_bias(cfg.eta * label);
            outcome.inserted = true;
        }
        while self.len() > cfg.buffer_cap {
            let weakest = self
                .betas()
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| i)
                .expect("non-empty buffer");
            self.remove_support(weakest);
            outcome.evicted = true;
        }
        Ok(outcome)
    }
}

/// Value-returning form of [`SvmModel::norma_step`].
pub fn norma_update(model: &SvmModel, sample: &Histogram, label: f64, cfg: &NormaConfig) -> Result<SvmModel> {
    let mut next = model.clone();
    next.norma_step(sample, label, cfg)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::BinningScheme;
    use crate::ppk_svm::test_support::{random_histogram, random_model};
    use crate::ppk_svm::PpkConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn satisfied_margin_without_decay_is_identity() {
        let scheme = BinningScheme::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = random_histogram(&mut rng, scheme, 5);
        let model = SvmModel::new(scheme, PpkConfig::default(), vec![q.clone()], vec![3.0], 0.0).unwrap();
        let cfg = NormaConfig {
            lambda_reg: 0.0,
            ..NormaConfig::default()
        };
        let next = norma_update(&model, &q, 1.0, &cfg).unwrap();
        assert_eq!(next, model);
    }

    #[test]
    fn first_step_on_empty_model() {
        let scheme = BinningScheme::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let q = random_histogram(&mut rng, scheme, 5);
        let model = SvmModel::empty(scheme, PpkConfig::default(), 0.0);
        let cfg = NormaConfig {
            eta: 0.1,
            ..NormaConfig::default()
        };
        let next = norma_update(&model, &q, 1.0, &cfg).unwrap();
        assert_eq!(next.len(), 1);
        assert_eq!(next.betas(), &[0.1]);
        assert_eq!(next.bias(), 0.1);
    }

    #[test]
    fn buffer_cap_evicts_weakest() {
        let scheme = BinningScheme::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut model = random_model(&mut rng, scheme, 3);
        let cfg = NormaConfig {
            buffer_cap: 3,
            ..NormaConfig::default()
        };
        let weakest_before = model.betas().iter().map(|b| b.abs()).fold(f64::INFINITY, f64::min);
        // A violating sample (label opposite its own score) forces insertion.
        let q = random_histogram(&mut rng, scheme, 5);
        let label = if model.decision(&q).unwrap() >= 0.0 { -1.0 } else { 1.0 };
        let out = model.norma_step(&q, label, &cfg).unwrap();
        assert!(out.inserted && out.evicted);
        assert_eq!(model.len(), 3);
        let decayed = weakest_before * (1.0 - cfg.eta * cfg.lambda_reg);
        let eta = cfg.eta;
        // either the new vector (|beta| = eta) or the decayed weakest went
        assert!(model.betas().iter().all(|b| b.abs() >= decayed.min(eta) - 1e-15));
        assert!(model.aggregate_drift() < 1e-9);
    }

    #[test]
    fn tiny_learning_rate_leaves_decisions_unchanged() {
        let scheme = BinningScheme::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let model = random_model(&mut rng, scheme, 5);
        let cfg = NormaConfig {
            eta: 1e-12,
            ..NormaConfig::default()
        };
        let q = random_histogram(&mut rng, scheme, 5);
        let next = norma_update(&model, &q, 1.0, &cfg).unwrap();
        for _ in 0..5 {
            let p = random_histogram(&mut rng, scheme, 8);
            assert!((next.decision(&p).unwrap() - model.decision(&p).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let scheme = BinningScheme::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let model = random_model(&mut rng, scheme, 1);
        let q = random_histogram(&mut rng, scheme, 5);
        for cfg in [
            NormaConfig { eta: 0.0, ..NormaConfig::default() },
            NormaConfig { eta: 1.0, lambda_reg: 1.0, ..NormaConfig::default() },
            NormaConfig { buffer_cap: 0, ..NormaConfig::default() },
        ] {
            assert!(norma_update(&model, &q, 1.0, &cfg).is_err());
        }
        let other = random_histogram(&mut rng, BinningScheme::new(2).unwrap(), 3);
        assert!(norma_update(&model, &other, 1.0, &NormaConfig::default()).is_err());
    }

    /// Two Gaussian-ish clusters in a 2-bin family whose class centers drift
    /// over time; the frozen model falls behind, the online one follows.
    #[test]
    fn online_updates_track_a_drifting_stream() {
        let scheme = BinningScheme::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let sample = |rng: &mut ChaCha8Rng, center: f64| {
            let a: f64 = (center + rng.random_range(-0.08..0.08)).clamp(0.0, 1.0);
            let mut v = vec![0.0; 8];
            v[0] = a;
            v[1] = 1.0 - a;
            Histogram::new(v, scheme).unwrap()
        };
        // initial centers: positive 0.8, negative 0.2; both drift by -0.5
        let mut init = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let pos = i % 2 == 0;
            init.push(sample(&mut rng, if pos { 0.8 } else { 0.2 }));
            labels.push(if pos { 1.0 } else { -1.0 });
        }
        let (frozen, _) = super::super::train_batch(&init, &labels, &Default::default(), PpkConfig::default()).unwrap();
        let cfg = NormaConfig::default();
        let mut online = frozen.clone();
        let mut stream = Vec::new();
        for t in 0..50 {
            let drift = -0.5 * t as f64 / 49.0;
            let pos = t % 2 == 0;
            let label = if pos { 1.0 } else { -1.0 };
            let h = sample(&mut rng, if pos { 0.8 + drift } else { 0.2 + drift.max(-0.2) });
            online.norma_step(&h, label, &cfg).unwrap();
            stream.push((h, label));
        }
        let acc = |m: &SvmModel| {
            stream[30..]
                .iter()
                .filter(|(h, l)| l * m.decision(h).unwrap() > 0.0)
                .count()
        };
        assert!(acc(&online) >= acc(&frozen), "online {} frozen {}", acc(&online), acc(&frozen));
        assert!(online.aggregate_drift() < 1e-9);
    }
}
