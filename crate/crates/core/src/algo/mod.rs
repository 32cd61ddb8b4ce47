//! Algorithms composed from the graph operators.

mod cc;
mod coarsen;
mod pagerank;
mod pregel;
mod seniority;

pub use cc::{connected_components, connected_components_with, ComponentId, ComponentsProgram};
pub use coarsen::coarsen;
pub use pagerank::{
    page_rank, page_rank_graph, page_rank_tolerance, DeltaPageRank, PageRankState, DEFAULT_RESET,
    DEFAULT_TOLERANCE,
};
pub use pregel::{pregel, IterationStats, PregelProgram, PregelStats, DEFAULT_MAX_ITERATIONS};
pub use seniority::senior_neighbor_count;
