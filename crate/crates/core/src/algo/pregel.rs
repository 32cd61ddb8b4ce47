//! Bulk-synchronous message passing on top of triplet aggregation.

use alloc::vec::Vec;

use crate::error::Result;
use crate::exec::{AccessSpec, ScanMode, SkipStale};
use crate::graph::{PropertyGraph, Triplet, VertexId};
use crate::wire::Data;

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

/// A vertex program. The halt flag lives inside the vertex state; `halted`
/// reads it.
pub trait PregelProgram<E>: Sync {
    type State: Data;
    type Msg: Data;

    /// Endpoint attributes read by [`send`](Self::send).
    fn access(&self) -> AccessSpec {
        AccessSpec::BOTH
    }

    fn skip_stale(&self) -> SkipStale {
        SkipStale::Out
    }

    fn max_iterations(&self) -> usize {
        DEFAULT_MAX_ITERATIONS
    }

    /// New state of a vertex that received `msg` (already gathered).
    fn vprog(&self, id: VertexId, state: &Self::State, msg: &Self::Msg) -> Self::State;

    fn send(&self, t: &Triplet<'_, Self::State, E>) -> (Option<Self::Msg>, Option<Self::Msg>);

    fn gather(&self, a: &Self::Msg, b: &Self::Msg) -> Self::Msg;

    fn halted(&self, state: &Self::State) -> bool;
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    pub iteration: u32,
    /// Message tuples shipped after local combining.
    pub messages: u64,
    /// Vertices that received a message and ran the vertex program.
    pub changed: u64,
    /// Vertices not halted after the iteration.
    pub live: u64,
    pub view_bytes: u64,
    pub active_fraction: f64,
    /// Edge partitions scanned through the vertex index.
    pub index_scans: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PregelStats {
    pub iterations: Vec<IterationStats>,
}

impl PregelStats {
    pub fn rounds(&self) -> usize {
        self.iterations.len()
    }
}

/// Runs `prog` until no vertex is live, an iteration delivers no message, or
/// the iteration limit is hit. The vertex program runs only on vertices that
/// received a message; the others keep their state. Iterations are numbered
/// from 1 in the runtime's meter.
pub fn pregel<V: Data, E: Data, P: PregelProgram<E, State = V>>(
    g: &PropertyGraph<V, E>,
    prog: &P,
) -> Result<(PropertyGraph<V, E>, PregelStats)> {
    let meter = g.runtime().meter();
    let previous = meter.iteration();
    let mut g = g.clone();
    let mut stats = PregelStats::default();
    let mut live = count_live(&g, prog);
    let mut iteration = 0u32;
    let outcome = loop {
        if live == 0 || iteration as usize >= prog.max_iterations() {
            break Ok(());
        }
        iteration += 1;
        meter.set_iteration(iteration);
        let step = g.try_mr_triplets(
            prog.access(),
            |t| Ok(prog.send(t)),
            |a, b| prog.gather(a, b),
            prog.skip_stale(),
        );
        let (msgs, mr) = match step {
            Ok(r) => r,
            Err(e) => break Err(e),
        };
        let changed = msgs.count() as u64;
        if changed > 0 {
            g = match g.join_vertices(&msgs, |id, v, m| prog.vprog(id, v, m)) {
                Ok(next) => next,
                Err(e) => break Err(e),
            };
            live = count_live(&g, prog);
        }
        stats.iterations.push(IterationStats {
            iteration,
            messages: mr.messages,
            changed,
            live: live as u64,
            view_bytes: mr.view_bytes,
            active_fraction: mr.active_fraction,
            index_scans: mr
                .scan
                .iter()
                .filter(|m| **m == ScanMode::VertexIndexScan)
                .count(),
        });
        if changed == 0 {
            break Ok(());
        }
    };
    meter.set_iteration(previous);
    outcome.map(|()| (g, stats))
}

fn count_live<V: Data, E: Data, P: PregelProgram<E, State = V>>(
    g: &PropertyGraph<V, E>,
    prog: &P,
) -> usize {
    g.vertex_partitions()
        .iter()
        .map(|p| p.iter().filter(|(_, v)| !prog.halted(v)).count())
        .sum()
}
