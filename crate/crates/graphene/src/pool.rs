//! Thread-pool executor for the engine's partition tasks.

use graphene_core::Executor;
use rayon::prelude::*;

/// Runs each batch of partition tasks on a fixed set of worker threads and
/// returns once all of them have finished.
#[derive(Debug)]
pub struct ThreadPool {
    pool: rayon::ThreadPool,
}

impl ThreadPool {
    /// A pool with `workers` threads; zero means one per logical core.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let workers = if workers == 0 {
            logical_cores()
        } else {
            workers
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("graphene-worker-{i}"))
            .build()?;
        Ok(ThreadPool { pool })
    }
}

/// Number of logical cores, or 1 when it cannot be determined.
pub fn logical_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl Executor for ThreadPool {
    fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn run(&self, tasks: usize, task: &(dyn Fn(usize) + Sync)) {
        if tasks <= 1 || self.workers() == 1 {
            (0..tasks).for_each(task);
            return;
        }
        self.pool
            .install(|| (0..tasks).into_par_iter().with_max_len(1).for_each(task));
    }
}
