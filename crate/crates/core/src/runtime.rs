//! Execution context shared by every collection and graph.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use spin::Once;

use crate::error::{Error, Result};
use crate::exec::ScanStrategy;
use crate::meter::CommMeter;
use crate::partition::EdgePartitioner;
use crate::wire::{BlockCodec, Identity};

/// Runs batches of independent partition tasks. `run` returns only after
/// every task has finished, which is the barrier between a local phase and
/// the exchange that follows it.
pub trait Executor: Send + Sync {
    fn workers(&self) -> usize;
    fn run(&self, tasks: usize, task: &(dyn Fn(usize) + Sync));
}

/// Runs tasks one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn workers(&self) -> usize {
        1
    }

    fn run(&self, tasks: usize, task: &(dyn Fn(usize) + Sync)) {
        for i in 0..tasks {
            task(i);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Partition count for vertex stores and freshly created collections.
    pub partitions: usize,
    pub edge_partitioner: EdgePartitioner,
    /// Ship only changed vertices when refreshing a cached vertex view.
    pub incremental: bool,
    /// Ship only the vertex sides a triplet function declares it reads.
    pub join_elimination: bool,
    /// Ship both sides and fail on reads of undeclared sides.
    pub verify_access: bool,
    pub scan: ScanStrategy,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            partitions: 4,
            edge_partitioner: EdgePartitioner::input(),
            incremental: true,
            join_elimination: true,
            verify_access: false,
            scan: ScanStrategy::default(),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.partitions == 0 {
            return Err(Error::Config("partition count must be positive".into()));
        }
        self.edge_partitioner.validate()?;
        if !(0.0..=1.0).contains(&self.scan.threshold) {
            return Err(Error::Config(format!(
                "scan threshold {} outside [0, 1]",
                self.scan.threshold
            )));
        }
        Ok(())
    }
}

pub struct Runtime {
    config: Config,
    executor: Box<dyn Executor>,
    codec: Box<dyn BlockCodec>,
    meter: CommMeter,
}

impl core::fmt::Debug for Runtime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Runtime")
            .field("config", &self.config)
            .field("workers", &self.executor.workers())
            .finish()
    }
}

impl Runtime {
    pub fn new(config: Config, executor: impl Executor + 'static) -> Result<Arc<Self>> {
        Self::with_codec(config, executor, Identity)
    }

    pub fn with_codec(
        config: Config,
        executor: impl Executor + 'static,
        codec: impl BlockCodec + 'static,
    ) -> Result<Arc<Self>> {
        config.validate()?;
        Ok(Arc::new(Runtime {
            config,
            executor: Box::new(executor),
            codec: Box::new(codec),
            meter: CommMeter::new(),
        }))
    }

    /// Sequential runtime with default configuration.
    pub fn local() -> Arc<Self> {
        Self::new(Config::default(), Sequential).expect("default config is valid")
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn meter(&self) -> &CommMeter {
        &self.meter
    }

    pub fn workers(&self) -> usize {
        self.executor.workers()
    }

    /// Runs `f` for every index in `0..n` on the executor and returns the
    /// results in index order.
    pub fn par_map<R: Send + Sync>(&self, n: usize, f: impl Fn(usize) -> R + Sync) -> Vec<R> {
        let slots: Vec<Once<R>> = (0..n).map(|_| Once::new()).collect();
        self.executor.run(n, &|i| {
            slots[i].call_once(|| f(i));
        });
        slots
            .into_iter()
            .map(|s| s.try_into_inner().expect("executor skipped a task"))
            .collect()
    }

    /// Like [`par_map`](Self::par_map); reports the error of the lowest
    /// failing index so the outcome does not depend on scheduling.
    pub fn try_par_map<R: Send + Sync>(
        &self,
        n: usize,
        f: impl Fn(usize) -> Result<R> + Sync,
    ) -> Result<Vec<R>> {
        self.par_map(n, f).into_iter().collect()
    }

    /// Seals a block for the named exchange: applies the codec, charges the
    /// meter and hands back the bytes a receiver would see.
    pub(crate) fn ship(&self, exchange: &str, block: Vec<u8>, tuples: u64) -> Vec<u8> {
        let sealed = self.codec.compress(block);
        self.meter.record(exchange, sealed.len() as u64, tuples);
        sealed
    }

    pub(crate) fn receive(&self, block: Vec<u8>) -> Result<Vec<u8>> {
        Ok(self.codec.decompress(block)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_index_order() {
        let rt = Runtime::local();
        assert_eq!(rt.par_map(5, |i| i * i), [0, 1, 4, 9, 16]);
    }

    #[test]
    fn try_par_map_reports_lowest_failure() {
        let rt = Runtime::local();
        let r: Result<Vec<usize>> = rt.try_par_map(6, |i| {
            if i % 2 == 1 {
                Err(Error::Config(format!("{i}")))
            } else {
                Ok(i)
            }
        });
        assert_eq!(r, Err(Error::Config("1".into())));
    }

    #[test]
    fn zero_partitions_is_rejected() {
        let cfg = Config {
            partitions: 0,
            ..Config::default()
        };
        assert!(matches!(
            Runtime::new(cfg, Sequential),
            Err(Error::Config(_))
        ));
    }
}
