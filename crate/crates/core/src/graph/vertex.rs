//! Vertex storage: a hash index from id to slot, an attribute array, a
//! visibility bitmask and the routing table.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use super::{EdgePartition, IndexEpoch, VertexId};
use crate::collection::HashPartitioner;
use crate::error::{Error, Result};
use crate::hash::{map_with_capacity, HashMap};

/// Id to slot map. Slots follow first-appearance order of the ids.
#[derive(Debug)]
pub struct VertexIndex {
    epoch: IndexEpoch,
    ids: Vec<VertexId>,
    slots: HashMap<VertexId, u32>,
}

impl VertexIndex {
    pub fn build(ids: Vec<VertexId>, epoch: IndexEpoch) -> Result<Self> {
        let mut slots = map_with_capacity(ids.len());
        for (slot, &id) in ids.iter().enumerate() {
            if slots.insert(id, slot as u32).is_some() {
                return Err(Error::Construction(format!("duplicate vertex id {id}")));
            }
        }
        Ok(VertexIndex { epoch, ids, slots })
    }

    /// Same ids and slots under another epoch.
    pub(crate) fn with_epoch(&self, epoch: IndexEpoch) -> Self {
        VertexIndex {
            epoch,
            ids: self.ids.clone(),
            slots: self.slots.clone(),
        }
    }

    pub fn epoch(&self) -> IndexEpoch {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, slot: usize) -> VertexId {
        self.ids[slot]
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn slot(&self, id: VertexId) -> Option<usize> {
        self.slots.get(&id).map(|&s| s as usize)
    }
}

/// Endpoint role bits carried while building routing tables.
pub(crate) const ROLE_SRC: u8 = 1;
pub(crate) const ROLE_DST: u8 = 2;

/// For every edge partition, which local vertices have an adjacent edge there,
/// split by whether they appear as a source or as a target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingTable {
    as_src: Vec<FixedBitSet>,
    as_dst: Vec<FixedBitSet>,
}

impl RoutingTable {
    pub fn empty(edge_partitions: usize, slots: usize) -> Self {
        RoutingTable {
            as_src: (0..edge_partitions)
                .map(|_| FixedBitSet::with_capacity(slots))
                .collect(),
            as_dst: (0..edge_partitions)
                .map(|_| FixedBitSet::with_capacity(slots))
                .collect(),
        }
    }

    /// `roles[e]` lists `(id, role bits)` observed in edge partition `e`.
    /// Ids missing from the index are ignored.
    pub(crate) fn from_roles(index: &VertexIndex, roles: &[&[(VertexId, u8)]]) -> Self {
        let mut table = RoutingTable::empty(roles.len(), index.len());
        for (e, list) in roles.iter().enumerate() {
            for &(id, role) in list.iter() {
                if let Some(slot) = index.slot(id) {
                    if role & ROLE_SRC != 0 {
                        table.as_src[e].insert(slot);
                    }
                    if role & ROLE_DST != 0 {
                        table.as_dst[e].insert(slot);
                    }
                }
            }
        }
        table
    }

    pub fn edge_partitions(&self) -> usize {
        self.as_src.len()
    }

    /// Whether the vertex in `slot` has an adjacent edge in partition `e`.
    pub fn contains(&self, e: usize, slot: usize) -> bool {
        self.as_src[e].contains(slot) || self.as_dst[e].contains(slot)
    }

    pub fn is_src(&self, e: usize, slot: usize) -> bool {
        self.as_src[e].contains(slot)
    }

    pub fn is_dst(&self, e: usize, slot: usize) -> bool {
        self.as_dst[e].contains(slot)
    }

    /// Edge partitions holding at least one edge of `slot`.
    pub fn partitions_of(&self, slot: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.edge_partitions()).filter(move |&e| self.contains(e, slot))
    }

    /// Bitmap of partition `e` over this vertex partition's slots.
    pub fn bitmap(&self, e: usize) -> FixedBitSet {
        let mut bits = self.as_src[e].clone();
        bits.union_with(&self.as_dst[e]);
        bits
    }
}

/// Endpoint roles of every visible edge, bucketed by the vertex partition the
/// endpoint hashes to: `result[vp]` holds `(id, role)` pairs, one per distinct id.
pub(crate) fn endpoint_roles<E>(
    part: &EdgePartition<E>,
    vertex_part: HashPartitioner,
) -> Vec<Vec<(VertexId, u8)>> {
    let s = part.structure();
    let mut roles = alloc::vec![0u8; s.local_ids().len()];
    for pos in part.mask().ones() {
        roles[s.local_src(pos)] |= ROLE_SRC;
        roles[s.local_dst(pos)] |= ROLE_DST;
    }
    let mut out: Vec<Vec<(VertexId, u8)>> =
        (0..vertex_part.partitions()).map(|_| Vec::new()).collect();
    for (local, &role) in roles.iter().enumerate() {
        if role != 0 {
            let id = s.local_ids()[local];
            out[vertex_part.assign(&id)].push((id, role));
        }
    }
    out
}

pub struct VertexPartition<V> {
    pub(crate) index: Arc<VertexIndex>,
    pub(crate) values: Arc<Vec<Option<V>>>,
    pub(crate) mask: Arc<FixedBitSet>,
    pub(crate) routing: Arc<RoutingTable>,
}

impl<V> Clone for VertexPartition<V> {
    fn clone(&self) -> Self {
        VertexPartition {
            index: self.index.clone(),
            values: self.values.clone(),
            mask: self.mask.clone(),
            routing: self.routing.clone(),
        }
    }
}

impl<V: core::fmt::Debug> core::fmt::Debug for VertexPartition<V> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl<V: Clone> VertexPartition<V> {
    /// Builds partition `pid` of a vertex store from tuples already routed to
    /// it; routing comes from scanning `edges` for endpoints hashing to `pid`.
    pub fn build<E>(
        tuples: Vec<(VertexId, V)>,
        edges: &[EdgePartition<E>],
        vertex_part: HashPartitioner,
        pid: usize,
        epoch: IndexEpoch,
    ) -> Result<Self> {
        let (ids, values): (Vec<_>, Vec<_>) = tuples.into_iter().map(|(i, v)| (i, Some(v))).unzip();
        let index = VertexIndex::build(ids, epoch)?;
        let roles: Vec<Vec<(VertexId, u8)>> = edges
            .iter()
            .map(|e| endpoint_roles(e, vertex_part).swap_remove(pid))
            .collect();
        let refs: Vec<&[(VertexId, u8)]> = roles.iter().map(|r| r.as_slice()).collect();
        let routing = RoutingTable::from_roles(&index, &refs);
        Ok(Self::from_parts(index, values, routing))
    }

    pub(crate) fn from_parts(
        index: VertexIndex,
        values: Vec<Option<V>>,
        routing: RoutingTable,
    ) -> Self {
        let mut mask = FixedBitSet::with_capacity(index.len());
        for (slot, v) in values.iter().enumerate() {
            mask.set(slot, v.is_some());
        }
        VertexPartition {
            index: Arc::new(index),
            values: Arc::new(values),
            mask: Arc::new(mask),
            routing: Arc::new(routing),
        }
    }

    /// New partition whose mask also requires membership in `keep`. Index,
    /// values and routing are shared with `self`.
    pub fn mask_and(&self, keep: impl IntoIterator<Item = VertexId>) -> Self {
        let mut bits = FixedBitSet::with_capacity(self.index.len());
        for id in keep {
            if let Some(slot) = self.index.slot(id) {
                bits.insert(slot);
            }
        }
        bits.intersect_with(&self.mask);
        VertexPartition {
            index: self.index.clone(),
            values: self.values.clone(),
            mask: Arc::new(bits),
            routing: self.routing.clone(),
        }
    }

    pub(crate) fn with_mask(&self, mask: FixedBitSet) -> Self {
        VertexPartition {
            index: self.index.clone(),
            values: self.values.clone(),
            mask: Arc::new(mask),
            routing: self.routing.clone(),
        }
    }
}

impl<V> VertexPartition<V> {
    pub fn index(&self) -> &Arc<VertexIndex> {
        &self.index
    }

    pub fn epoch(&self) -> IndexEpoch {
        self.index.epoch
    }

    pub fn routing(&self) -> &RoutingTable {
        &self.routing
    }

    pub fn mask(&self) -> &FixedBitSet {
        &self.mask
    }

    /// Allocated slots, visible or not.
    pub fn slots(&self) -> usize {
        self.index.len()
    }

    pub fn visible_count(&self) -> usize {
        self.mask.count_ones(..)
    }

    pub fn is_visible(&self, slot: usize) -> bool {
        self.mask.contains(slot)
    }

    /// Attribute of a visible vertex.
    pub fn get(&self, id: VertexId) -> Option<&V> {
        let slot = self.index.slot(id)?;
        if self.mask.contains(slot) {
            self.values[slot].as_ref()
        } else {
            None
        }
    }

    pub(crate) fn value(&self, slot: usize) -> &V {
        self.values[slot]
            .as_ref()
            .expect("visible slot carries a value")
    }

    /// Visible `(id, attr)` pairs in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &V)> + '_ {
        self.mask
            .ones()
            .map(move |slot| (self.index.id(slot), self.value(slot)))
    }
}
