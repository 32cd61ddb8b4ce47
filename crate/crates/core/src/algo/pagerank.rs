//! PageRank: a fixed number of synchronous rounds, or a delta-propagating
//! Pregel program that lets converged vertices halt.

use alloc::format;
use alloc::vec::Vec;

use super::pregel::{pregel, PregelProgram, PregelStats, DEFAULT_MAX_ITERATIONS};
use crate::collection::Collection;
use crate::error::{Error, Result};
use crate::exec::{AccessSpec, SkipStale};
use crate::graph::{PropertyGraph, Triplet, VertexId};
use crate::wire::{Data, Wire, WireError};

pub const DEFAULT_RESET: f64 = 0.15;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageRankState {
    pub rank: f64,
    /// Rank change not yet sent to the out-neighbors.
    pub delta: f64,
    pub num_links: u64,
    pub halt: bool,
}

impl Wire for PageRankState {
    fn encode(&self, out: &mut Vec<u8>) {
        self.rank.encode(out);
        self.delta.encode(out);
        self.num_links.encode(out);
        self.halt.encode(out);
    }

    fn decode(input: &mut &[u8]) -> core::result::Result<Self, WireError> {
        Ok(PageRankState {
            rank: f64::decode(input)?,
            delta: f64::decode(input)?,
            num_links: u64::decode(input)?,
            halt: bool::decode(input)?,
        })
    }
}

fn check_reset(reset: f64) -> Result<()> {
    if reset > 0.0 && reset < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "reset probability {reset} outside (0, 1)"
        )))
    }
}

fn with_out_degrees<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    init: impl Fn(u64) -> PageRankState + Sync,
) -> Result<PropertyGraph<PageRankState, E>> {
    let degrees = g.out_degrees()?;
    Ok(g.left_join_v(&degrees)?
        .map_v(|_, (_, d)| init(d.unwrap_or(0))))
}

/// Ranks after `iterations` rounds of
/// `PR(v) = reset + (1 - reset) * sum(PR(u) / outdeg(u))` over in-edges,
/// starting from 1.0. Vertices without out-edges keep their mass.
pub fn page_rank<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    iterations: usize,
    reset: f64,
) -> Result<Collection<VertexId, f64>> {
    Ok(page_rank_graph(g, iterations, reset)?
        .vertices()
        .map_values(|_, s| s.rank))
}

/// [`page_rank`] returning the graph with per-vertex state.
pub fn page_rank_graph<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    iterations: usize,
    reset: f64,
) -> Result<PropertyGraph<PageRankState, E>> {
    check_reset(reset)?;
    let meter = g.runtime().meter();
    let previous = meter.iteration();
    let mut pg = with_out_degrees(g, |num_links| PageRankState {
        rank: 1.0,
        delta: 0.0,
        num_links,
        halt: false,
    })?;
    for round in 0..iterations {
        meter.set_iteration(round as u32 + 1);
        let step = pg
            .mr_triplets(
                AccessSpec::SRC,
                |t| {
                    let s = t.src_attr();
                    (None, Some(s.rank / s.num_links as f64))
                },
                |a, b| a + b,
                SkipStale::None,
            )
            .and_then(|sums| pg.left_join_v(&sums));
        match step {
            Ok(joined) => {
                pg = joined.map_v(|_, (s, sum)| {
                    let rank = reset + (1.0 - reset) * sum.unwrap_or(0.0);
                    PageRankState {
                        rank,
                        delta: rank - s.rank,
                        ..*s
                    }
                })
            }
            Err(e) => {
                meter.set_iteration(previous);
                return Err(e);
            }
        }
    }
    meter.set_iteration(previous);
    Ok(pg)
}

/// PageRank as a Pregel program: each vertex forwards only its rank change
/// and halts once the change drops below `tolerance`.
///
/// A live vertex also sends itself an empty message along each out-edge, so
/// it runs every round until it halts. That keeps "unchanged since the last
/// shipment" equivalent to "halted" for sources, which makes skipping edges
/// with unchanged sources exact.
#[derive(Clone, Copy, Debug)]
pub struct DeltaPageRank {
    pub reset: f64,
    pub tolerance: f64,
    pub skip: SkipStale,
    pub max_iterations: usize,
}

impl Default for DeltaPageRank {
    fn default() -> Self {
        DeltaPageRank {
            reset: DEFAULT_RESET,
            tolerance: DEFAULT_TOLERANCE,
            skip: SkipStale::Out,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl<E: Data> PregelProgram<E> for DeltaPageRank {
    type State = PageRankState;
    type Msg = f64;

    fn access(&self) -> AccessSpec {
        AccessSpec::SRC
    }

    fn skip_stale(&self) -> SkipStale {
        self.skip
    }

    fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    fn vprog(&self, _id: VertexId, s: &PageRankState, msg: &f64) -> PageRankState {
        let delta = (1.0 - self.reset) * msg;
        PageRankState {
            rank: s.rank + delta,
            delta,
            num_links: s.num_links,
            halt: magnitude(delta) < self.tolerance,
        }
    }

    fn send(&self, t: &Triplet<'_, PageRankState, E>) -> (Option<f64>, Option<f64>) {
        let s = t.src_attr();
        if s.halt {
            (None, None)
        } else {
            (Some(0.0), Some(s.delta / s.num_links as f64))
        }
    }

    fn gather(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }

    fn halted(&self, s: &PageRankState) -> bool {
        s.halt
    }
}

fn magnitude(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

/// Runs [`DeltaPageRank`] from rank = delta = reset.
pub fn page_rank_tolerance<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    prog: &DeltaPageRank,
) -> Result<(PropertyGraph<PageRankState, E>, PregelStats)> {
    check_reset(prog.reset)?;
    if !(prog.tolerance > 0.0) {
        return Err(Error::Config(format!(
            "tolerance {} must be positive",
            prog.tolerance
        )));
    }
    let start = with_out_degrees(g, |num_links| PageRankState {
        rank: prog.reset,
        delta: prog.reset,
        num_links,
        halt: prog.reset < prog.tolerance,
    })?;
    pregel(&start, prog)
}
