// SPDX-License-Identifier: Apache-2.0

//! Worker-pool execution and scaling measurements.

mod bench;
mod pool;

pub use bench::{
    amdahl_speedup, bench_scaling, detect_plateau, BenchRow, Plateau, ScalingBenchReport, Workload,
    DEFAULT_PLATEAU_EPSILON, MIN_REPETITIONS,
};
pub use pool::{imbalance_index, run_pool, Pool, PoolRun};
