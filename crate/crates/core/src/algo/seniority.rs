//! Number of strictly older neighbors of every vertex.

use crate::collection::Collection;
use crate::error::Result;
use crate::exec::{AccessSpec, SkipStale};
use crate::graph::{PropertyGraph, VertexId};
use crate::wire::Data;

/// Every edge sends 1 to its strictly younger endpoint; vertices with no
/// older neighbor are absent from the result.
pub fn senior_neighbor_count<A: Data + Ord, E: Data>(
    g: &PropertyGraph<A, E>,
) -> Result<Collection<VertexId, u64>> {
    g.mr_triplets(
        AccessSpec::BOTH,
        |t| match t.src_attr().cmp(t.dst_attr()) {
            core::cmp::Ordering::Greater => (None, Some(1)),
            core::cmp::Ordering::Less => (Some(1), None),
            core::cmp::Ordering::Equal => (None, None),
        },
        |a, b| a + b,
        SkipStale::None,
    )
}
