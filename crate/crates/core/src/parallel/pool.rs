// SPDX-License-Identifier: Apache-2.0

use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Worker pool for independent work items.
///
/// Items are handed out one at a time from a shared queue (rayon work
/// stealing with unit-length splits), so a slow item never pins a static
/// stripe of work to one thread. Results always come back in item order.
///
/// Built without the `parallel` feature the pool runs everything serially on
/// the calling thread and reports a single worker.
pub struct Pool {
    requested: usize,
    #[cfg(feature = "parallel")]
    inner: Option<rayon::ThreadPool>,
}

/// Results of one pool run plus the per-worker accounting.
#[derive(Debug)]
pub struct PoolRun<R> {
    pub results: Vec<R>,
    /// Time each worker spent inside jobs.
    pub busy: Vec<Duration>,
    pub wall: Duration,
}

impl<R> PoolRun<R> {
    pub fn imbalance_index(&self) -> f64 {
        imbalance_index(&self.busy.iter().map(Duration::as_secs_f64).collect::<Vec<_>>())
    }

    /// Busy fraction of the wall time, per worker.
    pub fn utilization(&self) -> Vec<f64> {
        let wall = self.wall.as_secs_f64();
        self.busy
            .iter()
            .map(|b| if wall > 0.0 { b.as_secs_f64() / wall } else { 0.0 })
            .collect()
    }
}

/// `max busy / mean busy`; 1.0 when nobody did any work.
pub fn imbalance_index(busy: &[f64]) -> f64 {
    if busy.is_empty() {
        return 1.0;
    }
    let mean = busy.iter().sum::<f64>() / busy.len() as f64;
    if mean <= 0.0 {
        return 1.0;
    }
    busy.iter().copied().fold(f64::MIN, f64::max) / mean
}

impl Pool {
    pub fn new(workers: usize) -> Result<Pool> {
        if workers == 0 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        #[cfg(feature = "parallel")]
        {
            let inner = if workers > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .thread_name(|i| format!("ethopipe-worker-{i}"))
                        .build()
                        .map_err(|e| Error::InvalidArgument(format!("cannot start pool: {e}")))?,
                )
            } else {
                None
            };
            Ok(Pool { requested: workers, inner })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Pool { requested: workers })
    }

    pub fn serial() -> Pool {
        Pool::new(1).expect("one worker is always valid")
    }

    pub fn requested_workers(&self) -> usize {
        self.requested
    }

    /// Number of threads that actually execute jobs.
    pub fn workers(&self) -> usize {
        #[cfg(feature = "parallel")]
        {
            self.requested
        }
        #[cfg(not(feature = "parallel"))]
        {
            1
        }
    }

    /// Runs `f` on every job. The first failure cancels outstanding work and
    /// is reported as [`Error::Job`] carrying the job index.
    pub fn run<T, R, F>(&self, jobs: &[T], f: F) -> Result<PoolRun<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> Result<R> + Sync,
    {
        let start = Instant::now();
        let wrap = |i: usize, e: Error| Error::Job { index: i, source: Box::new(e) };

        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            use rayon::prelude::*;
            use std::sync::atomic::{AtomicU64, Ordering};

            let busy: Vec<AtomicU64> = (0..self.requested).map(|_| AtomicU64::new(0)).collect();
            let results: Result<Vec<R>> = pool.install(|| {
                jobs.par_iter()
                    .enumerate()
                    .with_max_len(1)
                    .map(|(i, job)| {
                        let t = Instant::now();
                        let r = f(i, job);
                        let slot = rayon::current_thread_index().unwrap_or(0);
                        busy[slot].fetch_add(t.elapsed().as_nanos() as u64, Ordering::Relaxed);
                        r.map_err(|e| wrap(i, e))
                    })
                    .collect()
            });
            return Ok(PoolRun {
                results: results?,
                busy: busy.into_iter().map(|b| Duration::from_nanos(b.into_inner())).collect(),
                wall: start.elapsed(),
            });
        }

        let mut busy = Duration::ZERO;
        let mut results = Vec::with_capacity(jobs.len());
        for (i, job) in jobs.iter().enumerate() {
            let t = Instant::now();
            let r = f(i, job);
            busy += t.elapsed();
            results.push(r.map_err(|e| wrap(i, e))?);
        }
        Ok(PoolRun { results, busy: vec![busy], wall: start.elapsed() })
    }

    /// [`Pool::run`] without the accounting.
    pub fn map<T, R, F>(&self, jobs: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> Result<R> + Sync,
    {
        self.run(jobs, f).map(|r| r.results)
    }
}

/// Convenience wrapper matching the one-shot form: builds a pool of
/// `workers` threads and runs `jobs` on it.
pub fn run_pool<T, R, F>(jobs: &[T], workers: usize, f: F) -> Result<PoolRun<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Result<R> + Sync,
{
    Pool::new(workers)?.run(jobs, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_workers_rejected() {
        assert!(Pool::new(0).is_err());
        assert!(run_pool(&[1, 2], 0, |_, &x: &i32| Ok(x)).is_err());
    }

    #[test]
    fn results_match_serial_order() {
        let jobs: Vec<u64> = (0..100).collect();
        let f = |i: usize, &x: &u64| Ok(format!("{i}:{}", x * x + 7));
        let one = run_pool(&jobs, 1, f).unwrap().results;
        let eight = run_pool(&jobs, 8, f).unwrap().results;
        assert_eq!(one, eight);
        assert_eq!(one[3], "3:16");
    }

    #[test]
    fn failure_names_the_job() {
        let jobs: Vec<u32> = (0..20).collect();
        let err = run_pool(&jobs, 4, |_, &x| {
            if x == 13 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(x)
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Job { index: 13, .. }), "{err}");
    }

    #[test]
    fn imbalance_arithmetic() {
        let v = imbalance_index(&[10.0, 10.0, 1.0, 1.0]);
        assert!((v - 10.0 / 5.5).abs() < 1e-12);
        assert_eq!(imbalance_index(&[0.0, 0.0]), 1.0);
        assert_eq!(imbalance_index(&[3.0, 3.0]), 1.0);
    }

    #[test]
    fn busy_time_covers_the_work() {
        let jobs: Vec<u64> = (0..16).collect();
        let job = |_: usize, _: &u64| {
            std::thread::sleep(Duration::from_millis(5));
            Ok(())
        };
        let run = run_pool(&jobs, 4, job).unwrap();
        let busy: Duration = run.busy.iter().sum();
        assert!(busy.as_secs_f64() >= 16.0 * 0.005 * 0.95, "{busy:?}");
        assert_eq!(run.busy.len(), Pool::new(4).unwrap().workers());
    }
}
