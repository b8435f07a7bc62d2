// SPDX-License-Identifier: Apache-2.0

//! `ethopipe` command-line entry point.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ethopipe", version, about = "Behaviour-analysis pipeline for video-recorded animals")]
pub struct Cli {
    /// Run configuration file (`key = value` lines, `#` comments).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Base seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
#[command(version)]
pub enum Command {
    /// Validate an annotation document and write its canonical form.
    Ingest(IngestArgs),
    /// Write augmented copies of an annotated image corpus.
    Augment(AugmentArgs),
    /// Cut labelled behaviour examples out of a video.
    GenExamples(GenExamplesArgs),
    /// Score predicted masks against ground-truth polygons.
    DetectEval(DetectEvalArgs),
    /// Train the baseline categoriser on example directories.
    TrainBaseline(TrainArgs),
    /// Turn a video into a probability timeline.
    Classify(ClassifyArgs),
    /// Extract events from a timeline and match them to an ethogram.
    EvalEthogram(EvalArgs),
    /// Measure wall time against worker count.
    BenchScaling(BenchArgs),
}

#[derive(Args, Debug)]
#[command(version)]
pub struct IngestArgs {
    #[arg(long, value_name = "DOC")]
    pub annotations: Option<PathBuf>,
    /// Canonical output document.
    #[arg(long, value_name = "DOC")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(version)]
pub struct AugmentArgs {
    #[arg(long, value_name = "DOC")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Augmented copies per source image.
    #[arg(long)]
    pub multiplier: Option<u32>,
    /// Transforms to skip: rot90, crop, rotate, grayscale, blur, noise.
    #[arg(long, value_delimiter = ',')]
    pub disable: Vec<String>,
    /// Drop clipped annotations keeping less than this share of their area.
    #[arg(long)]
    pub min_area_retained: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
#[command(version)]
pub struct GenExamplesArgs {
    #[arg(long, value_name = "DIR")]
    pub frames: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub masks: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub ethogram: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Behaviour labels allowed in the ethogram.
    #[arg(long, value_delimiter = ',')]
    pub categories: Vec<String>,
    /// Emit windows outside every interval as `background`.
    #[arg(long)]
    pub background: Option<bool>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
#[command(version)]
pub struct DetectEvalArgs {
    #[arg(long, value_name = "DIR")]
    pub frames: Option<PathBuf>,
    #[arg(long, value_name = "DOC")]
    pub gt: Option<PathBuf>,
    /// Directory of predicted `mask_%06d.png` files.
    #[arg(long, value_name = "DIR")]
    pub pred: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub report: Option<PathBuf>,
    /// Also draw this many frames for manual review.
    #[arg(long)]
    pub review_frames: Option<usize>,
    #[arg(long, value_name = "CSV")]
    pub review_out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
#[command(version)]
pub struct TrainArgs {
    /// Example directory; repeat for several videos.
    #[arg(long, value_name = "DIR")]
    pub examples: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Category order of the model; defaults to the sorted example labels.
    #[arg(long, value_delimiter = ',')]
    pub categories: Vec<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
#[command(version)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "DIR")]
    pub frames: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub masks: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
#[command(version)]
pub struct EvalArgs {
    #[arg(long, value_name = "CSV")]
    pub timeline: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub gt: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "SVG")]
    pub plot: Option<PathBuf>,
    /// Category drawn in the plot; defaults to the first ground-truth label.
    #[arg(long)]
    pub plot_category: Option<String>,
    #[arg(long)]
    pub theta_on: Option<f64>,
    #[arg(long)]
    pub theta_off: Option<f64>,
    /// Shortest event kept, in seconds.
    #[arg(long)]
    pub min_duration: Option<f64>,
    #[arg(long)]
    pub iou_min: Option<f64>,
}

#[derive(Args, Debug)]
#[command(version)]
pub struct BenchArgs {
    /// Worker counts, ascending from 1.
    #[arg(long, value_delimiter = ',')]
    pub workers: Vec<usize>,
    /// Synthetic windows rendered per run.
    #[arg(long)]
    pub windows: Option<usize>,
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    /// Speedup plot.
    #[arg(long, value_name = "SVG")]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// pattern-rendering, serial-fraction or single-job.
    #[arg(long)]
    pub workload: Option<String>,
    #[arg(long)]
    pub serial_fraction: Option<f64>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_ansi(false).with_target(false).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!("{e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
