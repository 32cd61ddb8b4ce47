//! Replicated vertex view: per edge partition, a mirror of the vertex
//! attributes its edges need, shipped through the routing tables.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use super::AccessSpec;
use crate::error::{Error, Result};
use crate::graph::{IndexEpoch, PropertyGraph, ViewCache};
use crate::meter;
use crate::wire::{decode_vertex_block, encode_vertex_block, Data};

/// Vertex attributes replicated into one edge partition, indexed by the
/// partition's local vertex ids.
#[derive(Clone, Debug)]
pub struct Mirror<V> {
    pub(crate) values: Vec<Option<V>>,
    pub(crate) changed: FixedBitSet,
}

impl<V> Mirror<V> {
    /// Mirrored attribute of local vertex `local`, if shipped.
    pub fn get(&self, local: usize) -> Option<&V> {
        self.values[local].as_ref()
    }

    /// Local ids whose values arrived in the most recent shipment.
    pub fn changed(&self) -> &FixedBitSet {
        &self.changed
    }

    pub fn len(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }
}

#[derive(Debug)]
pub struct ReplicatedVertexView<V> {
    epoch: IndexEpoch,
    sides: AccessSpec,
    mirrors: Vec<Arc<Mirror<V>>>,
    shipped_tuples: u64,
    shipped_bytes: u64,
}

impl<V> ReplicatedVertexView<V> {
    pub fn epoch(&self) -> IndexEpoch {
        self.epoch
    }

    /// Vertex sides replicated into the mirrors.
    pub fn sides(&self) -> AccessSpec {
        self.sides
    }

    pub fn mirrors(&self) -> &[Arc<Mirror<V>>] {
        &self.mirrors
    }

    /// Tuples shipped by the shipment that produced this view.
    pub fn shipped_tuples(&self) -> u64 {
        self.shipped_tuples
    }

    /// Bytes shipped by the shipment that produced this view.
    pub fn shipped_bytes(&self) -> u64 {
        self.shipped_bytes
    }
}

/// Ships every visible vertex to the edge partitions that use it on the
/// requested sides.
pub fn materialize_view<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    sides: AccessSpec,
) -> Result<ReplicatedVertexView<V>> {
    ship(g, sides, None, None)
}

/// Ships only the vertices set in `changed` (one bitmask per vertex
/// partition, over its slots) and keeps the other mirror entries. A view from
/// another index epoch is rebuilt from scratch.
pub fn incremental_update<V: Data, E: Data>(
    view: &ReplicatedVertexView<V>,
    g: &PropertyGraph<V, E>,
    changed: &[FixedBitSet],
) -> Result<ReplicatedVertexView<V>> {
    if view.epoch != g.epoch || view.mirrors.len() != g.eparts.len() {
        return materialize_view(g, view.sides);
    }
    ship(g, view.sides, Some(changed), Some(view))
}

fn ship<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    sides: AccessSpec,
    changed: Option<&[FixedBitSet]>,
    base: Option<&ReplicatedVertexView<V>>,
) -> Result<ReplicatedVertexView<V>> {
    let rt = &g.rt;
    let ne = g.eparts.len();
    let blocks: Vec<Vec<Option<(Vec<u8>, u64)>>> = rt.par_map(g.vparts.len(), |vp| {
        let part = &g.vparts[vp];
        if sides.is_none() {
            return vec![None; ne];
        }
        let mut candidates = part.mask().clone();
        if let Some(c) = changed {
            candidates.intersect_with(&c[vp]);
        }
        let routing = part.routing();
        (0..ne)
            .map(|e| {
                let slots: Vec<usize> = candidates
                    .ones()
                    .filter(|&s| {
                        (sides.reads_src && routing.is_src(e, s))
                            || (sides.reads_dst && routing.is_dst(e, s))
                    })
                    .collect();
                if slots.is_empty() {
                    return None;
                }
                let block =
                    encode_vertex_block(slots.iter().map(|&s| (part.index().id(s), part.value(s))));
                let n = slots.len() as u64;
                Some((rt.ship(meter::VERTEX_VIEW, block, n), n))
            })
            .collect()
    });
    let mut shipped_tuples = 0;
    let mut shipped_bytes = 0;
    for (block, n) in blocks.iter().flatten().flatten() {
        shipped_tuples += n;
        shipped_bytes += block.len() as u64;
    }
    let mirrors = rt.try_par_map(ne, |e| {
        let s = g.eparts[e].structure();
        let locals = s.local_ids().len();
        let mut values = match base {
            Some(b) => b.mirrors[e].values.clone(),
            None => vec![None; locals],
        };
        let mut bits = FixedBitSet::with_capacity(locals);
        for row in &blocks {
            if let Some((block, _)) = &row[e] {
                for (id, v) in decode_vertex_block::<V>(&rt.receive(block.clone())?)? {
                    let local = s.local(id).ok_or_else(|| {
                        Error::Construction(alloc::format!(
                            "routing table sends vertex {id} to edge partition {e} without its edges"
                        ))
                    })?;
                    values[local] = Some(v);
                    bits.insert(local);
                }
            }
        }
        Ok(Arc::new(Mirror {
            values,
            changed: bits,
        }))
    })?;
    Ok(ReplicatedVertexView {
        epoch: g.epoch,
        sides,
        mirrors,
        shipped_tuples,
        shipped_bytes,
    })
}

/// Returns a view covering `needed` and the number of vertices shipped into
/// it, reusing the graph's cached view when incremental maintenance allows.
/// The refreshed view is cached with an empty change set.
pub(crate) fn refresh_view<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    needed: AccessSpec,
) -> Result<(Arc<ReplicatedVertexView<V>>, usize)> {
    let cache = g.cached_view();
    let reusable = cache
        .view
        .filter(|v| g.rt.config().incremental && v.epoch == g.epoch && v.sides.covers(needed));
    let (view, changed) = match (reusable, cache.dirty) {
        (Some(view), Some(dirty)) => {
            let count = dirty
                .iter()
                .zip(&g.vparts)
                .map(|(d, p)| {
                    let mut live = d.clone();
                    live.intersect_with(p.mask());
                    live.count_ones(..)
                })
                .sum();
            (incremental_update(&view, g, &dirty)?, count)
        }
        (Some(view), None) => (materialize_view(g, view.sides)?, g.num_vertices()),
        (None, _) => (materialize_view(g, needed)?, g.num_vertices()),
    };
    let view = Arc::new(view);
    g.store_view(ViewCache {
        view: Some(view.clone()),
        dirty: Some(
            g.vparts
                .iter()
                .map(|p| FixedBitSet::with_capacity(p.slots()))
                .collect(),
        ),
    });
    Ok((view, changed))
}
