//! Edge placement strategies.

use alloc::format;

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::hash::mix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartitionerKind {
    /// Keep edges in the partitions of the input collection.
    Input,
    /// Hash of the whole edge and the seed.
    Random1D,
    /// Hash of the source id: all out-edges of a vertex share a partition.
    SrcHash1D,
    /// Grid placement bounding every vertex to one row and one column.
    Hash2D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgePartitioner {
    pub kind: PartitionerKind,
    pub partitions: usize,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 42;

impl EdgePartitioner {
    pub fn input() -> Self {
        EdgePartitioner {
            kind: PartitionerKind::Input,
            partitions: 0,
            seed: DEFAULT_SEED,
        }
    }

    pub fn new(kind: PartitionerKind, partitions: usize) -> Self {
        EdgePartitioner {
            kind,
            partitions,
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != PartitionerKind::Input && self.partitions == 0 {
            return Err(Error::Config(format!(
                "{:?} partitioner needs at least one partition",
                self.kind
            )));
        }
        Ok(())
    }

    /// Partition of edge `src -> dst`, or `None` for [`PartitionerKind::Input`].
    pub fn assign(&self, src: VertexId, dst: VertexId) -> Option<usize> {
        let p = self.partitions as u64;
        match self.kind {
            PartitionerKind::Input => None,
            PartitionerKind::Random1D => {
                Some((mix64(mix64(src ^ self.seed) ^ dst.rotate_left(32)) % p) as usize)
            }
            PartitionerKind::SrcHash1D => Some((mix64(src) % p) as usize),
            PartitionerKind::Hash2D => Some(assign_2d(src, dst, self.partitions)),
        }
    }
}

/// Smallest `r` with `r * r >= p`.
pub fn grid_side(p: usize) -> usize {
    let mut r = 0usize;
    while r * r < p {
        r += 1;
    }
    r
}

/// Cell of the `r x r` grid (`r = ceil(sqrt(p))`) selected by the row hash of
/// the source and the column hash of the target, folded into `[0, p)`.
pub fn grid_cell(src_hash: u64, dst_hash: u64, p: usize) -> usize {
    assert!(p > 0, "grid partitioning needs at least one partition");
    let r = grid_side(p) as u64;
    let cell = (src_hash % r) * r + (dst_hash % r);
    (cell % p as u64) as usize
}

/// 2D hash placement. When `p` is a perfect square each vertex's edges land in
/// at most `2 * sqrt(p) - 1` partitions.
pub fn assign_2d(src: VertexId, dst: VertexId, p: usize) -> usize {
    grid_cell(mix64(src), mix64(dst), p)
}
