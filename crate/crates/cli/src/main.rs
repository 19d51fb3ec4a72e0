//! `ktrack`: tracking, localization, training and evaluation from the shell.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 target lost
//! at the last frame.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{EvalArgs, Motion, SynthArgs, TrackArgs};
use config::{ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<kernel_track::Error> for CliError {
    fn from(e: kernel_track::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

#[derive(Parser, Debug)]
#[command(name = "ktrack", version, about = "Kernel-based tracking over colour histograms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Run configuration. Flags override values read from `--config`.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the effective configuration here before running.
    #[arg(long, value_name = "FILE")]
    write_config: Option<PathBuf>,
    /// generalized, ms, collins or pf.
    #[arg(long)]
    tracker: Option<String>,
    /// epanechnikov or gaussian.
    #[arg(long)]
    kernel: Option<String>,
    /// Histogram bins per colour channel.
    #[arg(long)]
    bins: Option<String>,
    /// Probability product kernel exponent.
    #[arg(long)]
    rho: Option<String>,
    /// SVM soft-margin constant.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    svm_tolerance: Option<String>,
    /// Online learning rate.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    lambda_reg: Option<String>,
    /// Support vectors kept by online updates.
    #[arg(long)]
    buffer_cap: Option<String>,
    /// Initial localization bandwidth `x,y`, or `auto` for the image size.
    #[arg(long)]
    h0: Option<String>,
    /// Bandwidth ratio between localization stages.
    #[arg(long)]
    ratio: Option<String>,
    /// Maximum number of localization stages.
    #[arg(long)]
    stages: Option<String>,
    /// Enable online model updates (true or false).
    #[arg(long)]
    update: Option<String>,
    #[arg(long)]
    negatives_per_frame: Option<String>,
    #[arg(long)]
    ring_min: Option<String>,
    #[arg(long)]
    ring_max: Option<String>,
    #[arg(long)]
    max_overlap: Option<String>,
    #[arg(long)]
    min_score_to_update: Option<String>,
    #[arg(long)]
    bootstrap_negatives: Option<String>,
    #[arg(long)]
    pf_particles: Option<String>,
    #[arg(long)]
    pf_noise: Option<String>,
    #[arg(long)]
    pf_lambda: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> [(&'static str, &Option<String>); 23] {
        [
            ("tracker", &self.tracker),
            ("kernel", &self.kernel),
            ("bins", &self.bins),
            ("rho", &self.rho),
            ("c", &self.c),
            ("svm_tolerance", &self.svm_tolerance),
            ("eta", &self.eta),
            ("lambda_reg", &self.lambda_reg),
            ("buffer_cap", &self.buffer_cap),
            ("h0", &self.h0),
            ("ratio", &self.ratio),
            ("stages", &self.stages),
            ("update", &self.update),
            ("negatives_per_frame", &self.negatives_per_frame),
            ("ring_min", &self.ring_min),
            ("ring_max", &self.ring_max),
            ("max_overlap", &self.max_overlap),
            ("min_score_to_update", &self.min_score_to_update),
            ("bootstrap_negatives", &self.bootstrap_negatives),
            ("pf_particles", &self.pf_particles),
            ("pf_noise", &self.pf_noise),
            ("pf_lambda", &self.pf_lambda),
            ("seed", &self.seed),
        ]
    }

    /// Defaults, then the config file, then flags.
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("reading {}: {e}", p.display())))?;
            cfg.apply_text(&text)?;
        }
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        if let Some(p) = &self.write_config {
            fs::write(p, cfg.to_text()).map_err(|e| CliError::Runtime(anyhow::anyhow!("writing {}: {e}", p.display())))?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic sequence as PPM frames plus gt.txt.
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, value_enum, default_value_t = Motion::Linear)]
        motion: Motion,
        /// Brightness gain change per frame.
        #[arg(long, default_value_t = 0.0)]
        illumination_drift: f64,
        /// Occlude the top half of the target for six mid-sequence frames.
        #[arg(long)]
        occlusion: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train an SVM on positive and negative PPM crops.
    Train {
        #[arg(long)]
        positives: PathBuf,
        #[arg(long)]
        negatives: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Track a target through a dataset directory.
    Track {
        dataset: PathBuf,
        /// Model file (generalized and collins trackers).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Initial box `cx,cy,hx,hy`; defaults to the frame-0 ground truth.
        #[arg(long = "box", value_name = "CX,CY,HX,HY")]
        init: Option<String>,
        /// Frame-0 background box `cx,cy,hx,hy` used as an extra negative
        /// when the model is bootstrapped. Repeatable.
        #[arg(long = "negative-box", value_name = "CX,CY,HX,HY")]
        negatives: Vec<String>,
        /// Track file to write; track lines go to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the model as adapted by online updates.
        #[arg(long)]
        final_model: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Locate the target in one image by annealed bandwidth search.
    Localize {
        image: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Start point `x,y`; defaults to the image centre.
        #[arg(long)]
        start: Option<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score track files against ground truth, or track and score datasets.
    Eval {
        tracks: Vec<PathBuf>,
        /// Ground-truth file for each track file, in order.
        #[arg(long)]
        gt: Vec<PathBuf>,
        /// Dataset directory to track from its frame-0 ground truth and score.
        #[arg(long = "dataset")]
        datasets: Vec<PathBuf>,
        /// Human-readable report instead of `metric value` lines.
        #[arg(long)]
        human: bool,
        #[arg(long, default_value_t = 1, value_name = "N")]
        parallel_sequences: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Show that modified mean shift can stop at a non-stationary point.
    DemoAppendix {
        /// `centers=..;weights=..;h=..;start=..`
        #[arg(long)]
        mixture: Option<String>,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Synth {
            out,
            frames,
            width,
            height,
            motion,
            illumination_drift,
            occlusion,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let args = SynthArgs {
                frames,
                width,
                height,
                motion,
                illumination_drift,
                occlusion,
            };
            commands::synth(&out, &args, &cfg)
        }
        Command::Train {
            positives,
            negatives,
            out,
            cfg,
        } => commands::train(&positives, &negatives, &out, &cfg.resolve()?),
        Command::Track {
            dataset,
            model,
            init,
            negatives,
            out,
            final_model,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let args = TrackArgs {
                dataset: &dataset,
                model: model.as_deref(),
                init: init.as_deref(),
                negatives: &negatives,
                out: out.as_deref(),
                final_model: final_model.as_deref(),
            };
            commands::track(&args, &cfg)
        }
        Command::Localize {
            image,
            model,
            start,
            cfg,
        } => commands::localize(&image, &model, start.as_deref(), &cfg.resolve()?),
        Command::Eval {
            tracks,
            gt,
            datasets,
            human,
            parallel_sequences,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let args = EvalArgs {
                tracks: &tracks,
                gt: &gt,
                datasets: &datasets,
                human,
                parallel: parallel_sequences,
            };
            commands::eval(&args, &cfg)
        }
        Command::DemoAppendix { mixture } => commands::demo_appendix(mixture.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ktrack: {e}");
            ExitCode::from(e.code())
        }
    }
}
