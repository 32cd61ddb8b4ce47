//! Partitioned property graph.
//!
//! Vertices are hash partitioned by id; each [`VertexPartition`] holds a hash
//! index, the attribute array, a visibility mask and a routing table that says
//! which edge partitions need each vertex. Edges live in [`EdgePartition`]s
//! clustered by source id. Operators that keep the structure produce graphs
//! sharing those indexes and report the same [`IndexEpoch`].

mod build;
mod edge;
mod ops;
mod vertex;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::Cell;
use core::sync::atomic::{AtomicU64, Ordering};

use fixedbitset::FixedBitSet;
use spin::{Mutex, Once};

pub use edge::{EdgePartition, EdgeStructure};
pub(crate) use vertex::endpoint_roles;
pub use vertex::{RoutingTable, VertexIndex, VertexPartition};

use crate::collection::HashPartitioner;
use crate::exec::{AccessSpec, ReplicatedVertexView};
use crate::runtime::Runtime;

pub type VertexId = u64;

/// Generation tag of a vertex index. Graphs that share structural indexes
/// report the same epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexEpoch(u64);

impl IndexEpoch {
    pub fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        IndexEpoch(NEXT.fetch_add(1, Ordering::Relaxed))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

/// Records reads of vertex attributes that the access spec did not declare.
#[derive(Debug)]
pub(crate) struct AccessProbe {
    declared: AccessSpec,
    pub src_violation: Cell<bool>,
    pub dst_violation: Cell<bool>,
}

impl AccessProbe {
    pub fn new(declared: AccessSpec) -> Self {
        AccessProbe {
            declared,
            src_violation: Cell::new(false),
            dst_violation: Cell::new(false),
        }
    }
}

/// An edge together with both endpoint attributes.
pub struct Triplet<'a, V, E> {
    src_id: VertexId,
    dst_id: VertexId,
    src: Option<&'a V>,
    dst: Option<&'a V>,
    attr: &'a E,
    probe: Option<&'a AccessProbe>,
}

impl<'a, V, E> Triplet<'a, V, E> {
    pub fn new(src_id: VertexId, src: &'a V, attr: &'a E, dst_id: VertexId, dst: &'a V) -> Self {
        Triplet {
            src_id,
            dst_id,
            src: Some(src),
            dst: Some(dst),
            attr,
            probe: None,
        }
    }

    pub(crate) fn partial(
        src_id: VertexId,
        src: Option<&'a V>,
        attr: &'a E,
        dst_id: VertexId,
        dst: Option<&'a V>,
        probe: Option<&'a AccessProbe>,
    ) -> Self {
        Triplet {
            src_id,
            dst_id,
            src,
            dst,
            attr,
            probe,
        }
    }

    pub fn src_id(&self) -> VertexId {
        self.src_id
    }

    pub fn dst_id(&self) -> VertexId {
        self.dst_id
    }

    pub fn attr(&self) -> &'a E {
        self.attr
    }

    /// Source attribute.
    ///
    /// Panics when the attribute was not shipped because the operator's
    /// [`AccessSpec`] did not declare a source read.
    pub fn src_attr(&self) -> &'a V {
        if let Some(p) = self.probe {
            if !p.declared.reads_src {
                p.src_violation.set(true);
            }
        }
        self.src
            .expect("source attribute read but not declared in the AccessSpec")
    }

    /// Target attribute; see [`src_attr`](Self::src_attr).
    pub fn dst_attr(&self) -> &'a V {
        if let Some(p) = self.probe {
            if !p.declared.reads_dst {
                p.dst_violation.set(true);
            }
        }
        self.dst
            .expect("target attribute read but not declared in the AccessSpec")
    }
}

/// Replicated view cached on a graph plus the vertices whose values changed
/// since that view was shipped (`None`: unknown, treat all as changed).
pub(crate) struct ViewCache<V> {
    pub view: Option<Arc<ReplicatedVertexView<V>>>,
    pub dirty: Option<Vec<FixedBitSet>>,
}

impl<V> ViewCache<V> {
    pub fn none() -> Self {
        ViewCache {
            view: None,
            dirty: None,
        }
    }
}

impl<V> Clone for ViewCache<V> {
    fn clone(&self) -> Self {
        ViewCache {
            view: self.view.clone(),
            dirty: self.dirty.clone(),
        }
    }
}

pub struct PropertyGraph<V, E> {
    pub(crate) rt: Arc<Runtime>,
    pub(crate) vertex_part: HashPartitioner,
    pub(crate) vparts: Vec<VertexPartition<V>>,
    pub(crate) eparts: Vec<EdgePartition<E>>,
    pub(crate) epoch: IndexEpoch,
    /// Set by `inner_join_v`: edges whose endpoints were hidden are still in
    /// the edge masks until `resolved_edge_masks` drops them.
    pub(crate) pending_edge_filter: bool,
    pub(crate) resolved: Arc<Once<Vec<FixedBitSet>>>,
    pub(crate) cache: Mutex<ViewCache<V>>,
}

impl<V, E> Clone for PropertyGraph<V, E> {
    fn clone(&self) -> Self {
        PropertyGraph {
            rt: self.rt.clone(),
            vertex_part: self.vertex_part,
            vparts: self.vparts.clone(),
            eparts: self.eparts.clone(),
            epoch: self.epoch,
            pending_edge_filter: self.pending_edge_filter,
            resolved: self.resolved.clone(),
            cache: Mutex::new(self.cache.lock().clone()),
        }
    }
}

impl<V: core::fmt::Debug, E: core::fmt::Debug> core::fmt::Debug for PropertyGraph<V, E> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PropertyGraph")
            .field("epoch", &self.epoch)
            .field("vertices", &self.vparts)
            .field("edges", &self.eparts)
            .finish()
    }
}

impl<V, E> PropertyGraph<V, E> {
    pub fn runtime(&self) -> &Arc<Runtime> {
        &self.rt
    }

    pub fn index_epoch(&self) -> IndexEpoch {
        self.epoch
    }

    pub fn vertex_partitioner(&self) -> HashPartitioner {
        self.vertex_part
    }

    pub fn vertex_partitions(&self) -> &[VertexPartition<V>] {
        &self.vparts
    }

    pub fn edge_partitions(&self) -> &[EdgePartition<E>] {
        &self.eparts
    }

    pub fn num_vertices(&self) -> usize {
        self.vparts.iter().map(|p| p.visible_count()).sum()
    }

    /// Allocated vertex slots including hidden ones.
    pub fn num_vertex_slots(&self) -> usize {
        self.vparts.iter().map(|p| p.slots()).sum()
    }

    /// Attribute of a visible vertex.
    pub fn vertex(&self, id: VertexId) -> Option<&V> {
        self.vparts[self.vertex_part.assign(&id)].get(id)
    }

    pub(crate) fn locate(&self, id: VertexId) -> Option<(usize, usize)> {
        let p = self.vertex_part.assign(&id);
        let slot = self.vparts[p].index.slot(id)?;
        Some((p, slot))
    }

    pub(crate) fn is_visible(&self, id: VertexId) -> bool {
        self.locate(id)
            .is_some_and(|(p, s)| self.vparts[p].is_visible(s))
    }

    /// Edge masks with every edge whose endpoint is hidden removed. Only
    /// differs from the stored masks after `inner_join_v`; computed once.
    pub(crate) fn resolved_edge_masks(&self) -> Vec<FixedBitSet>
    where
        V: Send + Sync,
        E: Send + Sync,
    {
        if !self.pending_edge_filter {
            return self.eparts.iter().map(|e| e.mask().clone()).collect();
        }
        self.resolved
            .call_once(|| {
                self.rt.par_map(self.eparts.len(), |e| {
                    let part = &self.eparts[e];
                    let s = part.structure();
                    let mut mask = part.mask().clone();
                    for pos in part.mask().ones() {
                        if !(self.is_visible(s.src(pos)) && self.is_visible(s.dst(pos))) {
                            mask.set(pos, false);
                        }
                    }
                    mask
                })
            })
            .clone()
    }

    pub(crate) fn cached_view(&self) -> ViewCache<V> {
        self.cache.lock().clone()
    }

    pub(crate) fn store_view(&self, cache: ViewCache<V>) {
        *self.cache.lock() = cache;
    }

    /// Whether a replicated vertex view is cached on this graph.
    pub fn has_cached_view(&self) -> bool {
        self.cache.lock().view.is_some()
    }

    /// Graph over the same edges with new vertex partitions; no cached view.
    pub(crate) fn with_vertices<V2>(
        &self,
        vparts: Vec<VertexPartition<V2>>,
        cache: ViewCache<V2>,
    ) -> PropertyGraph<V2, E> {
        PropertyGraph {
            rt: self.rt.clone(),
            vertex_part: self.vertex_part,
            vparts,
            eparts: self.eparts.clone(),
            epoch: self.epoch,
            pending_edge_filter: self.pending_edge_filter,
            resolved: self.resolved.clone(),
            cache: Mutex::new(cache),
        }
    }
}
