//! Contraction of the vertices joined by edges satisfying a predicate.

use super::cc::{connected_components, ComponentId};
use crate::error::Result;
use crate::graph::{PropertyGraph, Triplet};
use crate::wire::Data;

/// Merges every component of the edges satisfying `pred` into one vertex
/// whose id is the component's smallest id and whose attribute folds the
/// members' attributes with `reduce`. The other edges are relinked between
/// the merged vertices; parallel edges and self-loops are kept.
pub fn coarsen<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    pred: impl Fn(&Triplet<'_, V, E>) -> bool + Sync,
    reduce: impl Fn(&V, &V) -> V + Sync,
) -> Result<PropertyGraph<V, E>> {
    let sub = g.subgraph(|_, _| true, &pred)?;
    let cc = connected_components(&sub)?.0.vertices();
    let super_vertices = g
        .vertices()
        .left_join(&cc)
        .map(|id, (v, c)| (c.map_or(*id, |c| c.0), v.clone()))
        .reduce_by_key(&reduce);
    let rest = g.subgraph(|_, _| true, |t| !pred(t))?;
    let relinked = rest
        .left_join_v(&cc)?
        .triplets()?
        .map(|&(s, d), ((_, sc), attr, (_, dc))| {
            let label = |own: u64, c: &Option<ComponentId>| c.map_or(own, |c| c.0);
            ((label(s, sc), label(d, dc)), attr.clone())
        });
    PropertyGraph::build(&super_vertices, &relinked, &reduce, None)
}
