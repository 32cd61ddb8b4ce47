//! Synthetic workloads for comparing engine settings.

use std::time::{Duration, Instant};

use graphene_core::algo::{connected_components, page_rank};
use graphene_core::{meter, Collection, ExchangeRecord, PropertyGraph, VertexId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::EngineSettings;
use crate::load::{edge_collection, Edge};

/// `m` uniformly random edges of weight 1.0 over vertices `0..n`.
pub fn random_edges(n: u64, m: usize, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), 1.0))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Workload {
    Pagerank,
    Cc,
}

impl Workload {
    pub fn name(self) -> &'static str {
        match self {
            Workload::Pagerank => "pagerank",
            Workload::Cc => "cc",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub workload: Workload,
    pub elapsed: Duration,
    pub iterations: usize,
    pub total_bytes: u64,
    pub view_bytes: u64,
    pub message_bytes: u64,
    /// Checksum of the output so runs under different settings can be
    /// compared: sum of ranks, or number of components.
    pub checksum: f64,
    pub metrics: Vec<ExchangeRecord>,
}

pub fn run_bench(
    settings: &EngineSettings,
    workload: Workload,
    vertices: u64,
    edges: usize,
    iterations: usize,
) -> graphene_core::Result<BenchReport> {
    let rt = settings.runtime()?;
    let list = random_edges(vertices.max(1), edges, settings.seed);
    let ids: Vec<(VertexId, ())> = (0..vertices).map(|v| (v, ())).collect();
    let g = PropertyGraph::from_collections(
        &Collection::from_vec(&rt, ids),
        &edge_collection(&rt, &list),
        |_, _| (),
        (),
    )?;
    rt.meter().reset();
    let start = Instant::now();
    let (rounds, checksum) = match workload {
        Workload::Pagerank => {
            let ranks = page_rank(&g, iterations, graphene_core::algo::DEFAULT_RESET)?;
            (iterations, ranks.iter().map(|(_, r)| r).sum())
        }
        Workload::Cc => {
            let (out, stats) = connected_components(&g)?;
            let mut labels: Vec<VertexId> = out.vertices().iter().map(|(_, c)| c.0).collect();
            labels.sort_unstable();
            labels.dedup();
            (stats.rounds(), labels.len() as f64)
        }
    };
    let elapsed = start.elapsed();
    let m = rt.meter();
    Ok(BenchReport {
        workload,
        elapsed,
        iterations: rounds,
        total_bytes: m.total_bytes(),
        view_bytes: m.bytes_for(meter::VERTEX_VIEW),
        message_bytes: m.bytes_for(meter::MESSAGES),
        checksum,
        metrics: m.records(),
    })
}
