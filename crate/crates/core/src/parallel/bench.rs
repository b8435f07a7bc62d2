// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::thread;
use std::time::{Duration, Instant};

use super::pool::{Pool, PoolRun};
use crate::classify::extract_features;
use crate::error::{Error, Result};
use crate::patterns::{render_movement_pattern, Animation};
use crate::svg::{LineChart, Series};
use crate::synth::motion_dataset;

pub const DEFAULT_PLATEAU_EPSILON: f64 = 0.05;
pub const MIN_REPETITIONS: usize = 3;

/// What each benchmark run executes.
#[derive(Clone, Debug)]
pub enum Workload {
    /// Render and featurize `windows` synthetic 45-frame animations.
    PatternRendering { windows: usize, seed: u64 },
    /// A serial section of `serial_fraction · total` on the calling thread
    /// followed by `jobs` equal parallel jobs sharing the rest. Work is
    /// simulated by sleeping, so the measured scaling reflects scheduling
    /// rather than the number of physical cores.
    SerialFraction { serial_fraction: f64, jobs: usize, total: Duration },
    /// One job of the given length; nothing to parallelize.
    SingleJob { duration: Duration },
}

impl Workload {
    pub fn name(&self) -> &'static str {
        match self {
            Workload::PatternRendering { .. } => "pattern_rendering",
            Workload::SerialFraction { .. } => "serial_fraction",
            Workload::SingleJob { .. } => "single_job",
        }
    }
}

enum Prepared {
    Patterns(Vec<Animation>),
    Sleep { serial: Duration, jobs: Vec<Duration> },
}

impl Prepared {
    fn new(w: &Workload) -> Result<Self> {
        Ok(match w {
            Workload::PatternRendering { windows, seed } => {
                Prepared::Patterns(motion_dataset(*windows, 45, *seed)?.into_iter().map(|(_, a)| a).collect())
            }
            Workload::SerialFraction { serial_fraction, jobs, total } => {
                if !(0.0..=1.0).contains(serial_fraction) || *jobs == 0 {
                    return Err(Error::InvalidArgument("serial fraction must be in [0, 1] with ≥ 1 job".into()));
                }
                let serial = total.mul_f64(*serial_fraction);
                let each = total.saturating_sub(serial) / *jobs as u32;
                Prepared::Sleep { serial, jobs: vec![each; *jobs] }
            }
            Workload::SingleJob { duration } => Prepared::Sleep { serial: Duration::ZERO, jobs: vec![*duration] },
        })
    }

    fn run(&self, pool: &Pool) -> Result<PoolRun<()>> {
        let start = Instant::now();
        let mut run = match self {
            Prepared::Patterns(anims) => pool.run(anims, |_, a| {
                let p = render_movement_pattern(a)?;
                std::hint::black_box(extract_features(a, &p));
                Ok(())
            })?,
            Prepared::Sleep { serial, jobs } => {
                thread::sleep(*serial);
                pool.run(jobs, |_, d| {
                    thread::sleep(*d);
                    Ok(())
                })?
            }
        };
        run.wall = start.elapsed();
        Ok(run)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub workers: usize,
    /// Median over the repetitions.
    pub wall_time_s: f64,
    pub speedup: f64,
    pub imbalance_index: f64,
    /// Busy fraction per worker in the median run.
    pub utilization: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Plateau {
    pub workers: usize,
    /// False when no tested count qualified and `workers` is just the
    /// largest one.
    pub observed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingBenchReport {
    pub workload: String,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
    pub plateau: Plateau,
}

/// Runs `workload` at each worker count (ascending, starting at 1) and keeps
/// the median of `repetitions` timings.
pub fn bench_scaling(workload: &Workload, worker_counts: &[usize], repetitions: usize) -> Result<ScalingBenchReport> {
    if worker_counts.is_empty() {
        return Err(Error::InvalidArgument("no worker counts given".into()));
    }
    if worker_counts[0] != 1 || worker_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("worker counts must ascend from 1".into()));
    }
    if repetitions < MIN_REPETITIONS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_REPETITIONS} repetitions")));
    }
    let prepared = Prepared::new(workload)?;
    let mut rows: Vec<BenchRow> = Vec::new();
    for &p in worker_counts {
        let pool = Pool::new(p)?;
        let mut runs = (0..repetitions).map(|_| prepared.run(&pool)).collect::<Result<Vec<_>>>()?;
        runs.sort_by_key(|r| r.wall);
        let median = &runs[runs.len() / 2];
        let wall = median.wall.as_secs_f64().max(f64::MIN_POSITIVE);
        let base = rows.first().map_or(wall, |r| r.wall_time_s);
        rows.push(BenchRow {
            workers: p,
            wall_time_s: wall,
            speedup: base / wall,
            imbalance_index: median.imbalance_index(),
            utilization: median.utilization(),
        });
    }
    let series: Vec<(usize, f64)> = rows.iter().map(|r| (r.workers, r.wall_time_s)).collect();
    let plateau = if series.len() >= 2 {
        detect_plateau(&series, DEFAULT_PLATEAU_EPSILON)?
    } else {
        Plateau { workers: series[0].0, observed: false }
    };
    Ok(ScalingBenchReport { workload: workload.name().into(), repetitions, rows, plateau })
}

/// Smallest worker count from which every further step gains less than
/// `eps` of wall time, i.e. `(T(p) - T(next)) / T(p) < eps` for all later
/// consecutive pairs. At least one later pair is required.
pub fn detect_plateau(rows: &[(usize, f64)], eps: f64) -> Result<Plateau> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument("plateau detection needs at least 2 rows".into()));
    }
    let small_gain: Vec<bool> = rows.windows(2).map(|w| (w[0].1 - w[1].1) / w[0].1 < eps).collect();
    // small_gain[i] covers the pair (i, i + 1)
    let mut first = None;
    for i in (0..small_gain.len()).rev() {
        if !small_gain[i] {
            break;
        }
        first = Some(i);
    }
    Ok(match first {
        Some(i) => Plateau { workers: rows[i].0, observed: true },
        None => Plateau { workers: rows[rows.len() - 1].0, observed: false },
    })
}

/// Amdahl speedup `1 / (s + (1 - s) / p)`.
pub fn amdahl_speedup(serial_fraction: f64, workers: usize) -> f64 {
    1.0 / (serial_fraction + (1.0 - serial_fraction) / workers as f64)
}

impl ScalingBenchReport {
    /// `workers,wall_time_s,speedup,imbalance_index`
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["workers", "wall_time_s", "speedup", "imbalance_index"])?;
        for r in &self.rows {
            w.write_record([
                r.workers.to_string(),
                format!("{:.6}", r.wall_time_s),
                format!("{:.4}", r.speedup),
                format!("{:.4}", r.imbalance_index),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<bench csv>", e))
    }

    /// Measured speedup against the ideal line.
    pub fn speedup_svg(&self) -> String {
        let max_p = self.rows.last().map_or(1, |r| r.workers) as f64;
        let max_s = self.rows.iter().map(|r| r.speedup).fold(max_p, f64::max);
        LineChart {
            title: format!("{} speedup", self.workload),
            x_label: "workers".into(),
            y_label: "speedup".into(),
            x_range: (0.0, max_p),
            y_range: (0.0, max_s),
            series: vec![
                Series { colour: "#999999", points: vec![(1.0, 1.0), (max_p, max_p)] },
                Series { colour: "#0000ff", points: self.rows.iter().map(|r| (r.workers as f64, r.speedup)).collect() },
            ],
            bands: Vec::new(),
        }
        .render()
    }
}
