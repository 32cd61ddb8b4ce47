//! Communication accounting.
//!
//! Every simulated exchange charges the meter with the exact length of the
//! blocks it produced. Charges are sums, so the order in which concurrent
//! workers report them does not matter.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use spin::Mutex;

pub const VERTEX_VIEW: &str = "vertex-view";
pub const MESSAGES: &str = "messages";
pub const JOIN_INPUT: &str = "join-input";
pub const REDUCE_BY_KEY: &str = "reduce-by-key";
pub const LEFT_JOIN: &str = "left-join";
pub const EDGE_REPARTITION: &str = "edge-repartition";
pub const VERTEX_BUILD: &str = "vertex-build";
pub const ROUTING_BUILD: &str = "routing-build";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeRecord {
    pub exchange: String,
    pub iteration: u32,
    pub bytes: u64,
    pub tuples: u64,
}

#[derive(Debug, Default)]
pub struct CommMeter {
    iteration: AtomicU32,
    total_bytes: AtomicU64,
    series: Mutex<BTreeMap<(u32, String), (u64, u64)>>,
}

impl CommMeter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Iteration that subsequent charges are attributed to. Zero is used for
    /// setup work outside any superstep.
    pub fn set_iteration(&self, iteration: u32) {
        self.iteration.store(iteration, Ordering::SeqCst);
    }

    pub fn iteration(&self) -> u32 {
        self.iteration.load(Ordering::SeqCst)
    }

    pub fn record(&self, exchange: &str, bytes: u64, tuples: u64) {
        self.total_bytes.fetch_add(bytes, Ordering::Relaxed);
        let key = (self.iteration(), exchange.to_owned());
        let mut series = self.series.lock();
        let slot = series.entry(key).or_insert((0, 0));
        slot.0 += bytes;
        slot.1 += tuples;
    }

    pub fn total_bytes(&self) -> u64 {
        self.total_bytes.load(Ordering::Relaxed)
    }

    pub fn bytes_for(&self, exchange: &str) -> u64 {
        self.series
            .lock()
            .iter()
            .filter(|((_, name), _)| name == exchange)
            .map(|(_, (b, _))| *b)
            .sum()
    }

    pub fn tuples_for(&self, exchange: &str) -> u64 {
        self.series
            .lock()
            .iter()
            .filter(|((_, name), _)| name == exchange)
            .map(|(_, (_, t))| *t)
            .sum()
    }

    /// Rows ordered by iteration, then exchange name.
    pub fn records(&self) -> Vec<ExchangeRecord> {
        self.series
            .lock()
            .iter()
            .map(|((iteration, exchange), (bytes, tuples))| ExchangeRecord {
                exchange: exchange.clone(),
                iteration: *iteration,
                bytes: *bytes,
                tuples: *tuples,
            })
            .collect()
    }

    pub fn series(&self, exchange: &str) -> Vec<ExchangeRecord> {
        self.records()
            .into_iter()
            .filter(|r| r.exchange == exchange)
            .collect()
    }

    pub fn reset(&self) {
        self.series.lock().clear();
        self.total_bytes.store(0, Ordering::SeqCst);
        self.iteration.store(0, Ordering::SeqCst);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charges_accumulate_per_iteration() {
        let m = CommMeter::new();
        m.record(MESSAGES, 10, 2);
        m.set_iteration(1);
        m.record(MESSAGES, 5, 1);
        m.record(MESSAGES, 5, 1);
        m.record(VERTEX_VIEW, 7, 3);
        let rows = m.records();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].exchange, MESSAGES);
        assert_eq!((rows[1].bytes, rows[1].tuples), (10, 2));
        assert_eq!(m.bytes_for(MESSAGES), 20);
        assert_eq!(m.total_bytes(), 27);
        m.reset();
        assert!(m.records().is_empty());
    }
}
