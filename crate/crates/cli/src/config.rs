//! Run configuration: defaults, `key = value` files and flag overrides.

use std::fmt::Write as _;
use std::str::FromStr;

use kernel_track::global_seek::{AnnealSchedule, LocalizeOptions};
use kernel_track::trackers::{GeneralizedOptions, MsOptions, OnlineUpdatePolicy, PfOptions, TrackerKind};
use kernel_track::{BinningScheme, Image, NormaConfig, PpkConfig, SpatialKernel, TrainConfig, Vec2};

/// A configuration problem the user has to fix.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value {value:?} for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub tracker: TrackerKind,
    pub kernel: SpatialKernel,
    pub bins: u32,
    pub rho: f64,
    pub c: f64,
    pub svm_tolerance: f64,
    pub eta: f64,
    pub lambda_reg: f64,
    pub buffer_cap: usize,
    /// `None` starts the cascade from the full image extent.
    pub h0: Option<Vec2>,
    pub ratio: f64,
    pub stages: usize,
    pub update: bool,
    pub negatives_per_frame: usize,
    pub ring_min: f64,
    pub ring_max: f64,
    pub max_overlap: f64,
    pub min_score_to_update: f64,
    /// Negatives drawn on frame 0 when a model is bootstrapped from a box.
    pub bootstrap_negatives: usize,
    pub pf_particles: usize,
    pub pf_noise: f64,
    pub pf_lambda: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let policy = OnlineUpdatePolicy::default();
        let norma = NormaConfig::default();
        let train = TrainConfig::default();
        let pf = PfOptions::default();
        Self {
            tracker: TrackerKind::default(),
            kernel: SpatialKernel::default(),
            bins: 16,
            rho: PpkConfig::default().rho(),
            c: train.c,
            svm_tolerance: train.tolerance,
            eta: norma.eta,
            lambda_reg: norma.lambda_reg,
            buffer_cap: norma.buffer_cap,
            h0: None,
            ratio: 1.25,
            stages: 12,
            update: policy.enabled,
            negatives_per_frame: policy.negatives_per_frame,
            ring_min: policy.ring_min,
            ring_max: policy.ring_max,
            max_overlap: policy.max_overlap,
            min_score_to_update: policy.min_score_to_update,
            bootstrap_negatives: 8,
            pf_particles: pf.count,
            pf_noise: pf.noise_std,
            pf_lambda: pf.lambda_lik,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

pub fn parse_pair(key: &str, value: &str) -> Result<Vec2, ConfigError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok([parse(key, x)?, parse(key, y)?]),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            reason: "expected `x,y`".into(),
        }),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 23] = [
        "tracker",
        "kernel",
        "bins",
        "rho",
        "c",
        "svm_tolerance",
        "eta",
        "lambda_reg",
        "buffer_cap",
        "h0",
        "ratio",
        "stages",
        "update",
        "negatives_per_frame",
        "ring_min",
        "ring_max",
        "max_overlap",
        "min_score_to_update",
        "bootstrap_negatives",
        "pf_particles",
        "pf_noise",
        "pf_lambda",
        "seed",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "tracker" => self.tracker = parse(key, v)?,
            "kernel" => self.kernel = parse(key, v)?,
            "bins" => self.bins = parse(key, v)?,
            "rho" => self.rho = parse(key, v)?,
            "c" => self.c = parse(key, v)?,
            "svm_tolerance" => self.svm_tolerance = parse(key, v)?,
            "eta" => self.eta = parse(key, v)?,
            "lambda_reg" => self.lambda_reg = parse(key, v)?,
            "buffer_cap" => self.buffer_cap = parse(key, v)?,
            "h0" => self.h0 = if v == "auto" { None } else { Some(parse_pair(key, v)?) },
            "ratio" => self.ratio = parse(key, v)?,
            "stages" => self.stages = parse(key, v)?,
            "update" => self.update = parse(key, v)?,
            "negatives_per_frame" => self.negatives_per_frame = parse(key, v)?,
            "ring_min" => self.ring_min = parse(key, v)?,
            "ring_max" => self.ring_max = parse(key, v)?,
            "max_overlap" => self.max_overlap = parse(key, v)?,
            "min_score_to_update" => self.min_score_to_update = parse(key, v)?,
            "bootstrap_negatives" => self.bootstrap_negatives = parse(key, v)?,
            "pf_particles" => self.pf_particles = parse(key, v)?,
            "pf_noise" => self.pf_noise = parse(key, v)?,
            "pf_lambda" => self.pf_lambda = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.into(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in Self::KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_of(key));
        }
        s
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "tracker" => self.tracker.to_string(),
            "kernel" => self.kernel.name().into(),
            "bins" => self.bins.to_string(),
            "rho" => self.rho.to_string(),
            "c" => self.c.to_string(),
            "svm_tolerance" => self.svm_tolerance.to_string(),
            "eta" => self.eta.to_string(),
            "lambda_reg" => self.lambda_reg.to_string(),
            "buffer_cap" => self.buffer_cap.to_string(),
            "h0" => match self.h0 {
                None => "auto".into(),
                Some([x, y]) => format!("{x},{y}"),
            },
            "ratio" => self.ratio.to_string(),
            "stages" => self.stages.to_string(),
            "update" => self.update.to_string(),
            "negatives_per_frame" => self.negatives_per_frame.to_string(),
            "ring_min" => self.ring_min.to_string(),
            "ring_max" => self.ring_max.to_string(),
            "max_overlap" => self.max_overlap.to_string(),
            "min_score_to_update" => self.min_score_to_update.to_string(),
            "bootstrap_negatives" => self.bootstrap_negatives.to_string(),
            "pf_particles" => self.pf_particles.to_string(),
            "pf_noise" => self.pf_noise.to_string(),
            "pf_lambda" => self.pf_lambda.to_string(),
            "seed" => self.seed.to_string(),
            _ => unreachable!("value_of called with unknown key {key}"),
        }
    }

    /// Checks numeric ranges by building every derived option set.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| ConfigError::BadValue {
            key: key.into(),
            value: self.value_of(key),
            reason,
        };
        BinningScheme::new(self.bins).map_err(|e| bad("bins", e.to_string()))?;
        PpkConfig::new(self.rho).map_err(|e| bad("rho", e.to_string()))?;
        if !(self.c > 0.0) {
            return Err(bad("c", "must be > 0".into()));
        }
        if !(self.svm_tolerance > 0.0) {
            return Err(bad("svm_tolerance", "must be > 0".into()));
        }
        self.norma().validate().map_err(|e| bad("eta", e.to_string()))?;
        self.policy().validate().map_err(|e| bad("ring_min", e.to_string()))?;
        if let Some(h0) = self.h0 {
            AnnealSchedule::new(h0, self.ratio, self.stages).map_err(|e| bad("h0", e.to_string()))?;
        } else {
            AnnealSchedule::new([1.0, 1.0], self.ratio, self.stages).map_err(|e| bad("ratio", e.to_string()))?;
        }
        if self.pf_particles == 0 {
            return Err(bad("pf_particles", "must be >= 1".into()));
        }
        if !(self.pf_noise >= 0.0) {
            return Err(bad("pf_noise", "must be >= 0".into()));
        }
        if !(self.pf_lambda > 0.0) {
            return Err(bad("pf_lambda", "must be > 0".into()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> BinningScheme {
        BinningScheme::new(self.bins).expect("validated")
    }

    pub fn ppk(&self) -> PpkConfig {
        PpkConfig::new(self.rho).expect("validated")
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            c: self.c,
            tolerance: self.svm_tolerance,
            ..TrainConfig::default()
        }
    }

    pub fn norma(&self) -> NormaConfig {
        NormaConfig {
            eta: self.eta,
            lambda_reg: self.lambda_reg,
            buffer_cap: self.buffer_cap,
        }
    }

    pub fn policy(&self) -> OnlineUpdatePolicy {
        OnlineUpdatePolicy {
            enabled: self.update,
            negatives_per_frame: self.negatives_per_frame,
            ring_min: self.ring_min,
            ring_max: self.ring_max,
            max_overlap: self.max_overlap,
            min_score_to_update: self.min_score_to_update,
        }
    }

    pub fn generalized(&self) -> GeneralizedOptions {
        GeneralizedOptions {
            kernel: self.kernel,
            norma: self.norma(),
            ..GeneralizedOptions::default()
        }
    }

    pub fn ms(&self) -> MsOptions {
        MsOptions {
            kernel: self.kernel,
            ..MsOptions::default()
        }
    }

    pub fn pf(&self) -> PfOptions {
        PfOptions {
            count: self.pf_particles,
            noise_std: self.pf_noise,
            lambda_lik: self.pf_lambda,
            kernel: self.kernel,
        }
    }

    pub fn schedule(&self, image: &Image) -> AnnealSchedule {
        match self.h0 {
            Some(h0) => AnnealSchedule {
                h0,
                ratio: self.ratio,
                max_stages: self.stages,
            },
            None => AnnealSchedule {
                ratio: self.ratio,
                max_stages: self.stages,
                ..AnnealSchedule::full_image(image)
            },
        }
    }

    pub fn localize(&self) -> LocalizeOptions {
        LocalizeOptions {
            kernel: self.kernel,
            ..LocalizeOptions::default()
        }
    }
}
