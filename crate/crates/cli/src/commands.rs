// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ethopipe_core::annotations::{read_annotation_file, write_annotation_file};
use ethopipe_core::augment::{augment_dataset, load_rgb, AugmentConfig, Transform};
use ethopipe_core::classify::{
    classify_video, example_features, train_baseline, CategoriserModel, ProbabilityTimeline, TrainParams,
};
use ethopipe_core::detection::{
    evaluate_frame, sample_review_frames, video_accuracy, write_coverage_csv, ExternalMaskImport, GroundTruthPlayback,
};
use ethopipe_core::evaluate::{
    emit_timeline_plot, match_events, read_ethogram_csv, threshold_events, Hysteresis, EthogramInterval,
};
use ethopipe_core::parallel::{bench_scaling, Pool, Workload, MIN_REPETITIONS};
use ethopipe_core::patterns::{
    generate_examples, read_examples, write_examples, ExampleConfig, FrameSequence, MaskTrack, BACKGROUND,
    DEFAULT_INFER_STRIDE, DEFAULT_WINDOW,
};
use ethopipe_core::{Error, Result};
use tracing::info;

use crate::config::RunConfig;
use crate::{AugmentArgs, BenchArgs, ClassifyArgs, Cli, Command, DetectEvalArgs, EvalArgs, GenExamplesArgs};
use crate::{IngestArgs, TrainArgs};

pub const DEFAULT_MULTIPLIER: u32 = 3;
pub const DEFAULT_IOU_MIN: f64 = 0.3;
pub const DEFAULT_BENCH_WINDOWS: usize = 200;
pub const DEFAULT_BENCH_WORKERS: [usize; 5] = [1, 2, 4, 8, 16];

struct Ctx {
    cfg: RunConfig,
    seed: u64,
}

fn stage(name: &str, start: Instant, items: usize) {
    info!(stage = name, wall_s = format!("{:.3}", start.elapsed().as_secs_f64()), items, "done");
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn create(path: &Path) -> Result<File> {
    ensure_parent(path)?;
    File::create(path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    use std::io::Write;
    create(path)?.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

impl Ctx {
    fn pool(&self, flag: Option<usize>) -> Result<Pool> {
        let workers = match self.cfg.list::<usize>("workers", flag.into_iter().collect())? {
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            Some(v) if v.len() == 1 => v[0],
            Some(v) => {
                return Err(Error::InvalidArgument(format!("expected one worker count, got {}", v.len())));
            }
        };
        info!(workers, "worker pool");
        Pool::new(workers)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cfg.get("seed", cli.seed, 0)?;
    let ctx = Ctx { cfg, seed };
    match cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Augment(a) => augment(&ctx, a),
        Command::GenExamples(a) => gen_examples(&ctx, a),
        Command::DetectEval(a) => detect_eval(&ctx, a),
        Command::TrainBaseline(a) => train(&ctx, a),
        Command::Classify(a) => classify(&ctx, a),
        Command::EvalEthogram(a) => eval_ethogram(&ctx, a),
        Command::BenchScaling(a) => bench(&ctx, a),
    }
}

fn ingest(ctx: &Ctx, a: IngestArgs) -> Result<()> {
    let start = Instant::now();
    let doc: PathBuf = ctx.cfg.require("annotations", a.annotations)?;
    let dataset = read_annotation_file(&doc)?;
    let category = dataset.animal_category()?.to_string();
    info!(
        images = dataset.images().len(),
        annotations = dataset.annotations().len(),
        category = %category,
        "annotation document valid"
    );
    if let Some(out) = ctx.cfg.pick::<PathBuf>("out", a.out)? {
        ensure_parent(&out)?;
        write_annotation_file(&out, &dataset)?;
    }
    stage("ingest", start, dataset.annotations().len());
    Ok(())
}

fn augment(ctx: &Ctx, a: AugmentArgs) -> Result<()> {
    let start = Instant::now();
    let doc: PathBuf = ctx.cfg.require("dataset", a.dataset)?;
    let out: PathBuf = ctx.cfg.require("out", a.out)?;
    let mut cfg = AugmentConfig::new(ctx.cfg.get("multiplier", a.multiplier, DEFAULT_MULTIPLIER)?, ctx.seed);
    cfg.disabled = ctx.cfg.list::<Transform>("disable", a.disable.iter().map(|s| s.parse()).collect::<Result<_>>()?)?
        .unwrap_or_default();
    cfg.min_area_retained = ctx.cfg.get("min_area_retained", a.min_area_retained, cfg.min_area_retained)?;
    let pool = ctx.pool(a.workers)?;

    let dataset = read_annotation_file(&doc)?;
    dataset.animal_category()?;
    let source_dir = doc.parent().unwrap_or(Path::new("")).to_path_buf();
    let result = augment_dataset(&dataset, |r| load_rgb(&source_dir.join(&r.path)), &cfg, &pool)?;
    let doc_name = doc.file_name().and_then(|n| n.to_str()).unwrap_or("annotations.json");
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    result.write(&source_dir, &out, doc_name, &pool)?;
    info!(
        sources = dataset.images().len(),
        copies = result.augmented.len(),
        annotations = result.dataset.annotations().len(),
        "augmented corpus written"
    );
    stage("augment", start, result.augmented.len());
    Ok(())
}

fn read_ethogram(path: &Path) -> Result<Vec<EthogramInterval>> {
    read_ethogram_csv(open(path)?).map_err(|e| relabel(e, path))
}

/// Puts the file name on format errors raised by stream readers.
fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Format { line, message, .. } => Error::Format { path: path.display().to_string(), line, message },
        other => other,
    }
}

fn gen_examples(ctx: &Ctx, a: GenExamplesArgs) -> Result<()> {
    let start = Instant::now();
    let frames: PathBuf = ctx.cfg.require("frames", a.frames)?;
    let masks: PathBuf = ctx.cfg.require("masks", a.masks)?;
    let ethogram: PathBuf = ctx.cfg.require("ethogram", a.ethogram)?;
    let out: PathBuf = ctx.cfg.require("out", a.out)?;
    let defaults = ExampleConfig::default();
    let cfg = ExampleConfig {
        window: ctx.cfg.get("window", a.window, defaults.window)?,
        stride: ctx.cfg.get("stride", a.stride, defaults.stride)?,
        categories: ctx.cfg.list("categories", a.categories)?.unwrap_or(defaults.categories),
        background: ctx.cfg.get("background", a.background, defaults.background)?,
    };
    let pool = ctx.pool(a.workers)?;

    let seq = FrameSequence::load(&frames)?;
    let intervals = read_ethogram(&ethogram)?;
    let adapter = ExternalMaskImport::open(&masks)?;
    let track = MaskTrack::detect(&seq, &adapter, &pool)?;
    stage("track", start, track.len());
    let examples = generate_examples(&seq.video_id, seq.fps, &track, &intervals, &cfg, &pool)?;
    write_examples(&out, &seq, &examples, &pool)?;
    for cat in cfg.output_categories() {
        info!(category = %cat, examples = examples.iter().filter(|e| e.label == cat).count(), "examples per category");
    }
    stage("gen-examples", start, examples.len());
    Ok(())
}

fn detect_eval(ctx: &Ctx, a: DetectEvalArgs) -> Result<()> {
    let start = Instant::now();
    let frames: PathBuf = ctx.cfg.require("frames", a.frames)?;
    let gt: PathBuf = ctx.cfg.require("gt", a.gt)?;
    let pred: PathBuf = ctx.cfg.require("pred", a.pred)?;
    let report: PathBuf = ctx.cfg.require("report", a.report)?;
    let review_n = ctx.cfg.pick::<usize>("review_frames", a.review_frames)?;
    let review_out = ctx.cfg.pick::<PathBuf>("review_out", a.review_out)?;
    if review_n.is_some() != review_out.is_some() {
        return Err(Error::InvalidArgument("--review-frames and --review-out must be given together".into()));
    }
    let pool = ctx.pool(a.workers)?;

    let seq = FrameSequence::load(&frames)?;
    let truth = GroundTruthPlayback::from_dataset(&read_annotation_file(&gt)?);
    let import = ExternalMaskImport::open(&pred)?;
    let per_frame = pool.map(&seq.frames, |i, path| {
        let (w, h) = image::image_dimensions(path).map_err(|e| Error::image(path, e))?;
        let gt_masks = truth.masks(i, w, h)?;
        if gt_masks.is_empty() {
            return Ok(None);
        }
        let pred_masks: Vec<_> = import.load(i, w, h)?.into_iter().map(|d| d.mask).collect();
        Ok(Some((i, evaluate_frame(&pred_masks, &gt_masks)?)))
    })?;
    let rows: Vec<_> = per_frame.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    write_coverage_csv(create(&report)?, &rows)?;
    let reports: Vec<_> = rows.iter().map(|(_, r)| *r).collect();
    let acc = video_accuracy(&seq.video_id, &reports)?;
    info!(
        video = %acc.video_id,
        frames = acc.n_frames_evaluated,
        accurate = acc.n_accurate,
        under = acc.n_under,
        over = acc.n_over,
        accuracy = format!("{:.4}", acc.accuracy),
        "detector accuracy"
    );
    if let (Some(n), Some(path)) = (review_n, review_out) {
        ensure_parent(&path)?;
        sample_review_frames(&seq, n, ctx.seed)?.write_csv(&path)?;
    }
    stage("detect-eval", start, rows.len());
    Ok(())
}

fn train(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let start = Instant::now();
    let dirs: Vec<PathBuf> = ctx.cfg.list("examples", a.examples)?.unwrap_or_default();
    if dirs.is_empty() {
        return Err(Error::InvalidArgument("missing --examples".into()));
    }
    let out: PathBuf = ctx.cfg.require("out", a.out)?;
    let defaults = TrainParams::default();
    let params = TrainParams {
        learning_rate: ctx.cfg.get("learning_rate", a.learning_rate, defaults.learning_rate)?,
        iterations: ctx.cfg.get("iterations", a.iterations, defaults.iterations)?,
        l2: ctx.cfg.get("l2", a.l2, defaults.l2)?,
        seed: ctx.seed,
    };
    let pool = ctx.pool(a.workers)?;

    let mut examples = Vec::new();
    for dir in &dirs {
        examples.extend(read_examples(dir)?);
    }
    let training = pool.map(&examples, |_, ex| Ok(example_features(ex)))?;
    stage("features", start, training.len());
    let categories = match ctx.cfg.list::<String>("categories", a.categories)? {
        Some(c) => c,
        None => training.iter().map(|t| t.label.clone()).collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let model = train_baseline(&training, &categories, &params)?;
    let accuracy = training
        .iter()
        .filter(|t| {
            let s = model.scores(&t.features);
            let best = (0..s.len()).max_by(|&i, &j| s[i].total_cmp(&s[j]).then(j.cmp(&i))).unwrap_or(0);
            model.categories[best] == t.label
        })
        .count() as f64
        / training.len() as f64;
    info!(
        categories = %model.categories.join(","),
        final_loss = format!("{:.6}", model.final_loss),
        learning_rate = model.learning_rate,
        training_accuracy = format!("{accuracy:.4}"),
        "model trained"
    );
    model.write(create(&out)?)?;
    stage("train-baseline", start, training.len());
    Ok(())
}

fn classify(ctx: &Ctx, a: ClassifyArgs) -> Result<()> {
    let start = Instant::now();
    let frames: PathBuf = ctx.cfg.require("frames", a.frames)?;
    let masks: PathBuf = ctx.cfg.require("masks", a.masks)?;
    let model_path: PathBuf = ctx.cfg.require("model", a.model)?;
    let out: PathBuf = ctx.cfg.require("out", a.out)?;
    let window = ctx.cfg.get("window", a.window, DEFAULT_WINDOW)?;
    let stride = ctx.cfg.get("stride", a.stride, DEFAULT_INFER_STRIDE)?;
    info!(window, stride, "window settings");
    let pool = ctx.pool(a.workers)?;

    let model = CategoriserModel::read(open(&model_path)?).map_err(|e| relabel(e, &model_path))?;
    let seq = FrameSequence::load(&frames)?;
    let adapter = ExternalMaskImport::open(&masks)?;
    let timeline = classify_video(&seq, &adapter, &model, window, stride, &pool)?;
    timeline.write_csv(create(&out)?)?;
    stage("classify", start, timeline.rows().len());
    Ok(())
}

fn eval_ethogram(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let start = Instant::now();
    let timeline_path: PathBuf = ctx.cfg.require("timeline", a.timeline)?;
    let gt_path: PathBuf = ctx.cfg.require("gt", a.gt)?;
    let out: PathBuf = ctx.cfg.require("out", a.out)?;
    let plot = ctx.cfg.pick::<PathBuf>("plot", a.plot)?;
    let d = Hysteresis::default();
    let params = Hysteresis {
        theta_on: ctx.cfg.get("theta_on", a.theta_on, d.theta_on)?,
        theta_off: ctx.cfg.get("theta_off", a.theta_off, d.theta_off)?,
        min_duration_s: ctx.cfg.get("min_duration", a.min_duration, d.min_duration_s)?,
    };
    let iou_min = ctx.cfg.get("iou_min", a.iou_min, DEFAULT_IOU_MIN)?;

    let timeline = ProbabilityTimeline::read_csv(open(&timeline_path)?).map_err(|e| relabel(e, &timeline_path))?;
    let gt = read_ethogram(&gt_path)?;
    let mut predicted = Vec::new();
    for cat in timeline.categories().iter().filter(|c| *c != BACKGROUND) {
        predicted.extend(threshold_events(&timeline, cat, params)?);
    }
    let report = match_events(&predicted, &gt, iou_min)?;
    report.write_csv(create(&out)?)?;
    for c in &report.categories {
        info!(category = %c.category, tp = c.tp, fp = c.fp, fn_ = c.fn_, "event matching");
    }
    if let Some(plot) = plot {
        let category = match ctx.cfg.pick::<String>("plot_category", a.plot_category)? {
            Some(c) => c,
            None => gt
                .iter()
                .map(|g| g.label.clone())
                .find(|l| timeline.categories().contains(l))
                .or_else(|| timeline.categories().first().cloned())
                .unwrap_or_default(),
        };
        write_text(&plot, &emit_timeline_plot(&timeline, &gt, &category)?)?;
    }
    stage("eval-ethogram", start, predicted.len());
    Ok(())
}

fn bench(ctx: &Ctx, a: BenchArgs) -> Result<()> {
    let start = Instant::now();
    let workers = ctx.cfg.list::<usize>("workers", a.workers)?.unwrap_or_else(|| DEFAULT_BENCH_WORKERS.to_vec());
    let windows = ctx.cfg.get("windows", a.windows, DEFAULT_BENCH_WINDOWS)?;
    let out: PathBuf = ctx.cfg.require("out", a.out)?;
    let plot = ctx.cfg.pick::<PathBuf>("plot", a.plot)?;
    let repetitions = ctx.cfg.get("repetitions", a.repetitions, MIN_REPETITIONS)?;
    let workload = match ctx.cfg.get("workload", a.workload, "pattern-rendering".to_string())?.as_str() {
        "pattern-rendering" => Workload::PatternRendering { windows, seed: ctx.seed },
        "serial-fraction" => Workload::SerialFraction {
            serial_fraction: ctx.cfg.get("serial_fraction", a.serial_fraction, 0.2)?,
            jobs: 40,
            total: Duration::from_millis(400),
        },
        "single-job" => Workload::SingleJob { duration: Duration::from_millis(100) },
        other => return Err(Error::InvalidArgument(format!("unknown workload `{other}`"))),
    };
    let report = bench_scaling(&workload, &workers, repetitions)?;
    report.write_csv(create(&out)?)?;
    if let Some(plot) = plot {
        write_text(&plot, &report.speedup_svg())?;
    }
    for r in &report.rows {
        info!(
            workers = r.workers,
            wall_s = format!("{:.4}", r.wall_time_s),
            speedup = format!("{:.3}", r.speedup),
            imbalance = format!("{:.3}", r.imbalance_index),
            "scaling row"
        );
    }
    info!(plateau = report.plateau.workers, observed = report.plateau.observed, "plateau");
    stage("bench-scaling", start, report.rows.len());
    Ok(())
}
