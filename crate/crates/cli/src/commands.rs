//! Subcommand bodies.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context};
use kernel_track::eval::{evaluate, EvalReport, TrackRecord};
use kernel_track::global_seek::anneal_localize;
use kernel_track::histogram::histogram_at;
use kernel_track::imgproc::{
    load_dataset, load_image, parse_ground_truth, save_dataset, synth_sequence, MotionPath, Occluder, SequenceDataset,
    SynthConfig,
};
use kernel_track::ppk_svm::{load_model, save_model, train_batch};
use kernel_track::trackers::{appendix_demo, bootstrap_model, run_sequence, Appearance, MixtureSpec, RunSetup};
use kernel_track::{Histogram, Image, SvmModel, Vec2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_pair, RunConfig};
use crate::CliError;

pub const EXIT_LOST: u8 = 3;
/// demo-appendix found no non-stationary fixed point.
pub const EXIT_NO_DEMO: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Motion {
    Linear,
    Static,
    /// A closed four-corner loop.
    Loop,
}

pub struct SynthArgs {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub motion: Motion,
    pub illumination_drift: f64,
    pub occlusion: bool,
}

pub fn synth(out: &Path, args: &SynthArgs, cfg: &RunConfig) -> Result<u8, CliError> {
    let (w, h) = (args.width as f64, args.height as f64);
    let path = match args.motion {
        Motion::Linear => MotionPath::Linear {
            start: [0.3 * w, 0.35 * h],
            end: [0.7 * w, 0.65 * h],
        },
        Motion::Static => MotionPath::Static([0.5 * w, 0.5 * h]),
        Motion::Loop => MotionPath::Waypoints(vec![
            [0.3 * w, 0.3 * h],
            [0.65 * w, 0.35 * h],
            [0.7 * w, 0.7 * h],
            [0.3 * w, 0.7 * h],
        ]),
    };
    let mut synth = SynthConfig {
        width: args.width,
        height: args.height,
        frames: args.frames,
        path,
        seed: cfg.seed,
        illumination_drift: args.illumination_drift,
        ..SynthConfig::default()
    };
    if args.occlusion {
        // cover the top half of the target for six frames around the middle
        let plain = synth_sequence(&synth).map_err(CliError::usage)?;
        let mid = args.frames / 2;
        let g = plain.ground_truth()[mid].expect("synthetic frames all carry ground truth");
        synth.occluder = Some(Occluder {
            center: [g.center[0], g.center[1] - g.half_extent[1] / 2.0],
            half_extent: [g.half_extent[0] + 2.0, g.half_extent[1] / 2.0 + 0.5],
            color: [120, 120, 120],
            first_frame: mid.saturating_sub(2),
            last_frame: mid + 3,
        });
    }
    let ds = synth_sequence(&synth).map_err(CliError::usage)?;
    save_dataset(&ds, out).with_context(|| format!("writing dataset to {}", out.display()))?;
    println!("wrote {} frames to {}", ds.len(), out.display());
    Ok(0)
}

fn ppm_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ppm"))
        .collect();
    files.sort();
    Ok(files)
}

/// Histogram of a whole crop, centred on the crop with half-size bandwidth.
pub fn crop_histogram(img: &Image, cfg: &RunConfig) -> kernel_track::Result<Histogram> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    histogram_at(img, [(w - 1.0) / 2.0, (h - 1.0) / 2.0], [w / 2.0, h / 2.0], cfg.kernel, cfg.scheme())
}

pub fn train_accuracy(model: &SvmModel, samples: &[Histogram], labels: &[f64]) -> kernel_track::Result<f64> {
    let mut correct = 0;
    for (s, &y) in samples.iter().zip(labels) {
        if (model.decision(s)? >= 0.0) == (y > 0.0) {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

pub fn train(positives: &Path, negatives: &Path, out: &Path, cfg: &RunConfig) -> Result<u8, CliError> {
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (dir, label) in [(positives, 1.0), (negatives, -1.0)] {
        let files = ppm_files(dir)?;
        if files.is_empty() {
            return Err(CliError::Usage(format!("no .ppm crops in {}", dir.display())));
        }
        for f in files {
            let img = load_image(&f).with_context(|| format!("reading {}", f.display()))?;
            samples.push(crop_histogram(&img, cfg).with_context(|| format!("histogram of {}", f.display()))?);
            labels.push(label);
        }
    }
    let (model, report) = train_batch(&samples, &labels, &cfg.train(), cfg.ppk()).context("training")?;
    let acc = train_accuracy(&model, &samples, &labels)?;
    save_model(&model, out).with_context(|| format!("writing model to {}", out.display()))?;
    println!("samples {}", samples.len());
    println!("support_vectors {}", model.len());
    println!("iterations {}", report.iterations);
    println!("train_accuracy {acc}");
    Ok(0)
}

pub fn parse_box(s: &str) -> Result<(Vec2, Vec2), CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("bad box {s:?}: {e}")))?;
    match v.as_slice() {
        &[cx, cy, hx, hy] if hx > 0.0 && hy > 0.0 => Ok(([cx, cy], [hx, hy])),
        _ => Err(CliError::Usage(format!(
            "bad box {s:?}: expected cx,cy,hx,hy with positive half extents"
        ))),
    }
}

/// Builds the tracker setup from an explicit box or the frame-0 ground truth.
pub fn setup_for(
    ds: &SequenceDataset,
    init: Option<(Vec2, Vec2)>,
    model: Option<SvmModel>,
    negatives: &[(Vec2, Vec2)],
    cfg: &RunConfig,
) -> Result<RunSetup, CliError> {
    if !negatives.is_empty() && !(cfg.tracker.uses_model() && model.is_none()) {
        return Err(CliError::Usage(
            "--negative-box only applies when a model is bootstrapped from the initial box".into(),
        ));
    }
    let (center, h) = match init {
        Some(b) => b,
        None => {
            let g = ds.ground_truth()[0]
                .ok_or_else(|| CliError::Usage("no --box given and frame 0 has no ground truth".into()))?;
            (g.center, g.half_extent)
        }
    };
    let frame = &ds.frames()[0];
    let appearance = match (cfg.tracker.uses_model(), model) {
        (true, Some(m)) => Appearance::Model(m),
        (true, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Appearance::Model(
                bootstrap_model(
                    frame,
                    center,
                    h,
                    cfg.kernel,
                    cfg.scheme(),
                    cfg.ppk(),
                    negatives,
                    cfg.bootstrap_negatives,
                    &cfg.train(),
                    &mut rng,
                )
                .context("bootstrapping the model from the initial box")?,
            )
        }
        (false, Some(_)) => {
            return Err(CliError::Usage(format!(
                "tracker {} uses a template box, not a model file",
                cfg.tracker
            )))
        }
        (false, None) => Appearance::Template(
            histogram_at(frame, center, h, cfg.kernel, cfg.scheme()).context("template histogram")?,
        ),
    };
    Ok(RunSetup {
        kind: cfg.tracker,
        init_center: center,
        bandwidth: h,
        appearance,
        policy: cfg.policy(),
        generalized: cfg.generalized(),
        ms: cfg.ms(),
        pf: cfg.pf(),
        seed: cfg.seed,
    })
}

fn has_ground_truth(ds: &SequenceDataset) -> bool {
    ds.ground_truth().iter().any(Option::is_some)
}

fn sequence_id(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

pub struct TrackArgs<'a> {
    pub dataset: &'a Path,
    pub model: Option<&'a Path>,
    pub init: Option<&'a str>,
    pub negatives: &'a [String],
    pub out: Option<&'a Path>,
    pub final_model: Option<&'a Path>,
}

pub fn track(args: &TrackArgs, cfg: &RunConfig) -> Result<u8, CliError> {
    let ds = load_dataset(args.dataset).with_context(|| format!("reading dataset {}", args.dataset.display()))?;
    let init = args.init.map(parse_box).transpose()?;
    let model = match args.model {
        Some(p) => Some(load_model(p).with_context(|| format!("reading model {}", p.display()))?),
        None => None,
    };
    let negatives = args.negatives.iter().map(|b| parse_box(b)).collect::<Result<Vec<_>, _>>()?;
    let setup = setup_for(&ds, init, model, &negatives, cfg)?;
    let out = run_sequence(&sequence_id(args.dataset), ds.frames(), &setup).context("tracking")?;
    match args.out {
        Some(p) => fs::write(p, out.track.to_text()).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", out.track.to_text()),
    }
    if let (Some(p), Some(m)) = (args.final_model, &out.final_model) {
        save_model(m, p).with_context(|| format!("writing {}", p.display()))?;
    }
    if has_ground_truth(&ds) {
        let report = evaluate(&out.track, ds.ground_truth()).context("evaluating")?;
        // keep stdout clean for the track lines when they go there
        if args.out.is_some() {
            println!("{report}");
        } else {
            eprintln!("{report}");
        }
    }
    if out.lost_at_end {
        eprintln!("target lost at the last frame");
        return Ok(EXIT_LOST);
    }
    Ok(0)
}

pub fn localize(image: &Path, model: &Path, start: Option<&str>, cfg: &RunConfig) -> Result<u8, CliError> {
    let img = load_image(image).with_context(|| format!("reading {}", image.display()))?;
    let model = load_model(model).with_context(|| format!("reading model {}", model.display()))?;
    let c0 = match start {
        Some(s) => parse_pair("start", s)?,
        None => [(img.width() as f64 - 1.0) / 2.0, (img.height() as f64 - 1.0) / 2.0],
    };
    let r = anneal_localize(&model, &img, c0, &cfg.schedule(&img), &cfg.localize()).map_err(|e| match e {
        kernel_track::Error::OutOfBounds { .. } => CliError::usage(e),
        e => CliError::Runtime(e.into()),
    })?;
    println!("# stage h_x h_y cx cy f accepted");
    for t in &r.trace {
        println!(
            "{} {} {} {} {} {} {}",
            t.stage,
            t.bandwidth[0],
            t.bandwidth[1],
            t.center[0],
            t.center[1],
            t.score,
            u8::from(t.accepted)
        );
    }
    println!(
        "# result stage {} center {} {} scale {} {} score {} accepted {}",
        r.stage,
        r.center[0],
        r.center[1],
        r.scale[0],
        r.scale[1],
        r.score(),
        u8::from(r.accepted)
    );
    Ok(0)
}

fn render(report: &EvalReport, human: bool) -> String {
    if human {
        format!("{report}\n")
    } else {
        let mut s = String::new();
        if !report.sequence_id.is_empty() {
            let _ = writeln!(s, "# sequence {}", report.sequence_id);
        }
        s.push_str(&report.to_machine());
        s
    }
}

/// Runs `job` on every index with up to `workers` threads, keeping input order.
fn parallel_map<T: Send>(n: usize, workers: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = job(i);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(v);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|v| v.expect("every index processed"))
        .collect()
}

pub struct EvalArgs<'a> {
    pub tracks: &'a [PathBuf],
    pub gt: &'a [PathBuf],
    pub datasets: &'a [PathBuf],
    pub human: bool,
    pub parallel: usize,
}

pub fn eval(args: &EvalArgs, cfg: &RunConfig) -> Result<u8, CliError> {
    if args.tracks.len() != args.gt.len() {
        return Err(CliError::Usage(format!(
            "{} track files but {} --gt files",
            args.tracks.len(),
            args.gt.len()
        )));
    }
    if args.tracks.is_empty() && args.datasets.is_empty() {
        return Err(CliError::Usage("nothing to evaluate: pass track files with --gt, or --dataset".into()));
    }
    let mut jobs: Vec<Box<dyn Fn() -> anyhow::Result<EvalReport> + Sync + '_>> = Vec::new();
    for (t, g) in args.tracks.iter().zip(args.gt) {
        jobs.push(Box::new(move || {
            let track = TrackRecord::parse(sequence_id(t), &fs::read_to_string(t).with_context(|| format!("reading {}", t.display()))?)
                .with_context(|| format!("parsing {}", t.display()))?;
            let gt = parse_ground_truth(&fs::read_to_string(g).with_context(|| format!("reading {}", g.display()))?)
                .with_context(|| format!("parsing {}", g.display()))?;
            Ok(evaluate(&track, &gt)?)
        }));
    }
    for d in args.datasets {
        jobs.push(Box::new(move || {
            let ds = load_dataset(d).with_context(|| format!("reading dataset {}", d.display()))?;
            if !has_ground_truth(&ds) {
                bail!("dataset {} has no ground truth", d.display());
            }
            let setup = setup_for(&ds, None, None, &[], cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
            let out = run_sequence(&sequence_id(d), ds.frames(), &setup)?;
            Ok(evaluate(&out.track, ds.ground_truth())?)
        }));
    }
    let reports = parallel_map(jobs.len(), args.parallel, |i| jobs[i]());
    for r in reports {
        print!("{}", render(&r?, args.human));
    }
    Ok(0)
}

pub fn demo_appendix(mixture: Option<&str>) -> Result<u8, CliError> {
    let spec = match mixture {
        Some(s) => s.parse::<MixtureSpec>().map_err(CliError::usage)?,
        None => MixtureSpec::default(),
    };
    let r = appendix_demo(&spec).map_err(CliError::usage)?;
    println!("mixture {}", r.spec);
    println!(
        "modified mean shift: fixed point {} after {} iterations (converged {})",
        r.collins_fixed_point, r.collins_iterations, r.collins_converged
    );
    println!("  |f'| there = {:.6e}", r.gradient_norm_there);
    for e in &r.extrema {
        println!("true {} at {} (f = {})", e.kind, e.location, e.value);
    }
    if let Some(e) = r.nearest_extremum {
        println!("nearest true extremum: {} at {}", e.kind, e.location);
    }
    println!(
        "L-BFGS: {} with |f'| = {:.3e}, local maximum {}",
        r.lbfgs_point, r.lbfgs_gradient_norm, r.lbfgs_at_local_max
    );
    if r.non_stationary {
        println!("non-stationary fixed point detected");
        Ok(0)
    } else {
        println!("fixed point is stationary; no counterexample on this mixture");
        Ok(EXIT_NO_DEMO)
    }
}
