//! Edge storage: edges clustered by source id with a CSR block per source, an
//! unclustered index on target id, and a visibility mask.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

use fixedbitset::FixedBitSet;

use super::VertexId;
use crate::hash::{map_with_capacity, HashMap};

/// Attribute-free part of an edge partition, shared by every graph derived
/// from it.
#[derive(Debug)]
pub struct EdgeStructure {
    src: Vec<VertexId>,
    dst: Vec<VertexId>,
    local_src: Vec<u32>,
    local_dst: Vec<u32>,
    /// Distinct endpoints. The first `blocks.len()` entries are the distinct
    /// sources in ascending order; local id `i` of a source owns `blocks[i]`.
    local_ids: Vec<VertexId>,
    local_index: HashMap<VertexId, u32>,
    blocks: Vec<(u32, u32)>,
    dst_positions: Vec<Vec<u32>>,
}

impl EdgeStructure {
    /// Clusters `(src, dst)` pairs by source; returns the structure and the
    /// permutation applied (`order[pos]` is the input position now at `pos`).
    fn build(pairs: &[(VertexId, VertexId)]) -> (Self, Vec<usize>) {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&i| pairs[i].0);
        let src: Vec<VertexId> = order.iter().map(|&i| pairs[i].0).collect();
        let dst: Vec<VertexId> = order.iter().map(|&i| pairs[i].1).collect();

        let mut local_ids = Vec::new();
        let mut local_index: HashMap<VertexId, u32> = map_with_capacity(src.len());
        let mut blocks = Vec::new();
        let mut local_src = Vec::with_capacity(src.len());
        let mut start = 0usize;
        while start < src.len() {
            let id = src[start];
            let mut end = start + 1;
            while end < src.len() && src[end] == id {
                end += 1;
            }
            let local = local_ids.len() as u32;
            local_ids.push(id);
            local_index.insert(id, local);
            blocks.push((start as u32, (end - start) as u32));
            local_src.extend(core::iter::repeat(local).take(end - start));
            start = end;
        }
        let mut local_dst = Vec::with_capacity(dst.len());
        for &id in &dst {
            let local = *local_index.entry(id).or_insert_with(|| {
                local_ids.push(id);
                (local_ids.len() - 1) as u32
            });
            local_dst.push(local);
        }
        let mut dst_positions: Vec<Vec<u32>> = (0..local_ids.len()).map(|_| Vec::new()).collect();
        for (pos, &l) in local_dst.iter().enumerate() {
            dst_positions[l as usize].push(pos as u32);
        }
        (
            EdgeStructure {
                src,
                dst,
                local_src,
                local_dst,
                local_ids,
                local_index,
                blocks,
                dst_positions,
            },
            order,
        )
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn src(&self, pos: usize) -> VertexId {
        self.src[pos]
    }

    pub fn dst(&self, pos: usize) -> VertexId {
        self.dst[pos]
    }

    pub fn src_ids(&self) -> &[VertexId] {
        &self.src
    }

    pub fn dst_ids(&self) -> &[VertexId] {
        &self.dst
    }

    pub fn local_src(&self, pos: usize) -> usize {
        self.local_src[pos] as usize
    }

    pub fn local_dst(&self, pos: usize) -> usize {
        self.local_dst[pos] as usize
    }

    pub fn local_ids(&self) -> &[VertexId] {
        &self.local_ids
    }

    pub fn local(&self, id: VertexId) -> Option<usize> {
        self.local_index.get(&id).map(|&l| l as usize)
    }

    /// Number of distinct sources, which are local ids `0..num_sources()`.
    pub fn num_sources(&self) -> usize {
        self.blocks.len()
    }

    /// Contiguous out-edge block of the source with local id `local`.
    pub fn block_of_local(&self, local: usize) -> Range<usize> {
        let (start, len) = self.blocks[local];
        start as usize..(start + len) as usize
    }

    /// Out-edge block of `src`, if it has any edge here.
    pub fn csr_block(&self, src: VertexId) -> Option<Range<usize>> {
        let local = self.local(src)?;
        (local < self.blocks.len()).then(|| self.block_of_local(local))
    }

    /// Positions of edges pointing at the vertex with local id `local`.
    pub fn dst_positions_of_local(&self, local: usize) -> &[u32] {
        &self.dst_positions[local]
    }

    pub fn dst_positions(&self, dst: VertexId) -> &[u32] {
        self.local(dst)
            .map(|l| self.dst_positions[l].as_slice())
            .unwrap_or(&[])
    }
}

/// Edges of one partition. Attributes of hidden edges may be absent after
/// operators that transform only visible edges.
pub struct EdgePartition<E> {
    pub(crate) structure: Arc<EdgeStructure>,
    pub(crate) attrs: Arc<Vec<Option<E>>>,
    pub(crate) mask: Arc<FixedBitSet>,
}

impl<E> Clone for EdgePartition<E> {
    fn clone(&self) -> Self {
        EdgePartition {
            structure: self.structure.clone(),
            attrs: self.attrs.clone(),
            mask: self.mask.clone(),
        }
    }
}

impl<E: core::fmt::Debug> core::fmt::Debug for EdgePartition<E> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

impl<E> EdgePartition<E> {
    /// Clusters `edges` by source. Parallel edges and self-loops are kept.
    pub fn build(edges: Vec<(VertexId, VertexId, E)>) -> Self {
        let pairs: Vec<(VertexId, VertexId)> = edges.iter().map(|(s, d, _)| (*s, *d)).collect();
        let (structure, order) = EdgeStructure::build(&pairs);
        let mut slots: Vec<Option<E>> = edges.into_iter().map(|(_, _, a)| Some(a)).collect();
        let attrs: Vec<Option<E>> = order.iter().map(|&i| slots[i].take()).collect();
        let mut mask = FixedBitSet::with_capacity(attrs.len());
        mask.insert_range(..);
        EdgePartition {
            structure: Arc::new(structure),
            attrs: Arc::new(attrs),
            mask: Arc::new(mask),
        }
    }

    pub fn structure(&self) -> &EdgeStructure {
        &self.structure
    }

    /// Attribute of the visible edge at `pos`.
    pub fn attr(&self, pos: usize) -> &E {
        self.attrs[pos]
            .as_ref()
            .expect("visible edge carries an attribute")
    }

    pub fn mask(&self) -> &FixedBitSet {
        &self.mask
    }

    /// Stored edges, visible or not.
    pub fn len(&self) -> usize {
        self.structure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structure.is_empty()
    }

    pub fn visible_len(&self) -> usize {
        self.mask.count_ones(..)
    }

    pub fn is_visible(&self, pos: usize) -> bool {
        self.mask.contains(pos)
    }

    /// Visible edges in clustered order.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId, &E)> + '_ {
        self.mask.ones().map(move |pos| {
            (
                self.structure.src(pos),
                self.structure.dst(pos),
                self.attr(pos),
            )
        })
    }

    pub(crate) fn with_mask(&self, mask: FixedBitSet) -> Self {
        EdgePartition {
            structure: self.structure.clone(),
            attrs: self.attrs.clone(),
            mask: Arc::new(mask),
        }
    }

    pub(crate) fn with_attrs<E2>(
        &self,
        attrs: Vec<Option<E2>>,
        mask: FixedBitSet,
    ) -> EdgePartition<E2> {
        debug_assert_eq!(attrs.len(), self.len());
        EdgePartition {
            structure: self.structure.clone(),
            attrs: Arc::new(attrs),
            mask: Arc::new(mask),
        }
    }
}

impl<E: Clone> EdgePartition<E> {
    /// Rebuilds the partition from its visible edges only.
    pub fn compact(&self) -> Self {
        EdgePartition::build(self.iter().map(|(s, d, a)| (s, d, a.clone())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn clusters_by_source() {
        let p = EdgePartition::build(vec![(2, 3, 'x'), (1, 4, 'y'), (2, 5, 'z')]);
        let s = p.structure();
        assert_eq!(s.src_ids(), &[1, 2, 2]);
        assert_eq!(s.dst_ids(), &[4, 3, 5]);
        assert_eq!(
            p.iter().map(|(_, _, a)| *a).collect::<Vec<_>>(),
            vec!['y', 'x', 'z']
        );
        assert_eq!(s.csr_block(1), Some(0..1));
        assert_eq!(s.csr_block(2), Some(1..3));
        assert_eq!(s.csr_block(4), None);
        assert_eq!(s.dst_positions(5), &[2]);
        assert_eq!(s.num_sources(), 2);
        assert_eq!(&s.local_ids()[..2], &[1, 2]);
    }

    #[test]
    fn empty_partition() {
        let p: EdgePartition<()> = EdgePartition::build(vec![]);
        assert!(p.is_empty());
        assert_eq!(p.structure().num_sources(), 0);
        assert_eq!(p.iter().count(), 0);
    }

    #[test]
    fn keeps_parallel_edges_and_self_loops() {
        let p = EdgePartition::build(vec![(1, 1, 0u8), (1, 2, 1), (1, 2, 2)]);
        assert_eq!(p.len(), 3);
        assert_eq!(p.structure().dst_positions(2), &[1, 2]);
        assert_eq!(p.structure().dst_positions(1), &[0]);
    }

    #[test]
    fn compact_drops_hidden_edges() {
        let p = EdgePartition::build(vec![(1, 2, 'a'), (3, 4, 'b')]);
        let mut mask = p.mask().clone();
        mask.set(0, false);
        let q = p.with_mask(mask).compact();
        assert_eq!(q.iter().collect::<Vec<_>>(), vec![(3, 4, &'b')]);
    }
}
