//! Partitioned, immutable key-value collections and the data-parallel
//! operators over them.
//!
//! `filter` and `map` run partition-locally. `reduce_by_key` and `left_join`
//! move records between partitions through encoded blocks that are charged to
//! the runtime's [`CommMeter`](crate::CommMeter).

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::hash::Hash;

use crate::error::{Error, Result, UdfError};
use crate::graph::IndexEpoch;
use crate::hash::{map_with_capacity, stable_hash, HashMap};
use crate::meter;
use crate::runtime::Runtime;
use crate::wire::{decode_keyed_block, encode_keyed_block, Data};

/// Collection keys. `is_null` marks keys that group together in
/// `reduce_by_key` but never match in joins.
pub trait Key: Data + Hash + Eq + Ord + Debug {
    fn is_null(&self) -> bool {
        false
    }
}

macro_rules! plain_key {
    ($($t:ty),*) => {$( impl Key for $t {} )*};
}
plain_key!(
    u8,
    u16,
    u32,
    u64,
    usize,
    i8,
    i16,
    i32,
    i64,
    isize,
    bool,
    String,
    ()
);

impl<A: Key, B: Key> Key for (A, B) {}
impl<A: Key, B: Key, C: Key> Key for (A, B, C) {}

impl<T: Key> Key for Option<T> {
    fn is_null(&self) -> bool {
        self.is_none()
    }
}

/// Assigns keys to `partitions` buckets by stable hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashPartitioner {
    partitions: usize,
}

impl HashPartitioner {
    pub fn new(partitions: usize) -> Self {
        assert!(partitions > 0, "a partitioner needs at least one partition");
        HashPartitioner { partitions }
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    pub fn assign<K: Hash + ?Sized>(&self, key: &K) -> usize {
        (stable_hash(key) % self.partitions as u64) as usize
    }
}

/// Per-tuple slots into a shared vertex index; lets joins against the vertex
/// store skip the hash lookup.
#[derive(Clone, Debug)]
pub(crate) struct IndexHint {
    pub epoch: IndexEpoch,
    pub slots: Vec<Arc<Vec<u32>>>,
}

pub struct Collection<K, V> {
    rt: Arc<Runtime>,
    parts: Vec<Arc<Vec<(K, V)>>>,
    partitioner: Option<HashPartitioner>,
    pub(crate) hint: Option<IndexHint>,
}

impl<K, V> Clone for Collection<K, V> {
    fn clone(&self) -> Self {
        Collection {
            rt: self.rt.clone(),
            parts: self.parts.clone(),
            partitioner: self.partitioner,
            hint: self.hint.clone(),
        }
    }
}

impl<K: Debug, V: Debug> Debug for Collection<K, V> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Collection")
            .field("partitioner", &self.partitioner)
            .field("partitions", &self.parts)
            .finish()
    }
}

impl<K: Key, V: Data> Collection<K, V> {
    /// Splits `tuples` into the configured number of contiguous partitions.
    pub fn from_vec(rt: &Arc<Runtime>, tuples: Vec<(K, V)>) -> Self {
        let p = rt.config().partitions;
        let chunk = tuples.len().div_ceil(p).max(1);
        let mut parts: Vec<Vec<(K, V)>> = Vec::with_capacity(p);
        let mut iter = tuples.into_iter();
        for _ in 0..p {
            parts.push(iter.by_ref().take(chunk).collect());
        }
        Self::from_partitions(rt, parts)
    }

    /// Uses the given partition layout as is; no partitioner is recorded.
    pub fn from_partitions(rt: &Arc<Runtime>, parts: Vec<Vec<(K, V)>>) -> Self {
        Collection {
            rt: rt.clone(),
            parts: parts.into_iter().map(Arc::new).collect(),
            partitioner: None,
            hint: None,
        }
    }

    /// Places each tuple by key hash without charging an exchange (initial
    /// data placement).
    pub fn hash_partitioned(rt: &Arc<Runtime>, tuples: Vec<(K, V)>, partitions: usize) -> Self {
        let part = HashPartitioner::new(partitions);
        let mut parts: Vec<Vec<(K, V)>> = (0..partitions).map(|_| Vec::new()).collect();
        for (k, v) in tuples {
            parts[part.assign(&k)].push((k, v));
        }
        let mut c = Self::from_partitions(rt, parts);
        c.partitioner = Some(part);
        c
    }

    pub fn empty(rt: &Arc<Runtime>) -> Self {
        Self::from_partitions(
            rt,
            (0..rt.config().partitions).map(|_| Vec::new()).collect(),
        )
    }

    pub(crate) fn from_parts(
        rt: Arc<Runtime>,
        parts: Vec<Arc<Vec<(K, V)>>>,
        partitioner: Option<HashPartitioner>,
        hint: Option<IndexHint>,
    ) -> Self {
        Collection {
            rt,
            parts,
            partitioner,
            hint,
        }
    }

    pub fn runtime(&self) -> &Arc<Runtime> {
        &self.rt
    }

    pub fn num_partitions(&self) -> usize {
        self.parts.len()
    }

    pub fn partitioner(&self) -> Option<HashPartitioner> {
        self.partitioner
    }

    pub fn partitions(&self) -> &[Arc<Vec<(K, V)>>] {
        &self.parts
    }

    /// Epoch of the vertex index this collection is aligned with, if any.
    pub fn index_epoch(&self) -> Option<IndexEpoch> {
        self.hint.as_ref().map(|h| h.epoch)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(K, V)> {
        self.parts.iter().flat_map(|p| p.iter())
    }

    pub fn to_vec(&self) -> Vec<(K, V)> {
        self.iter().cloned().collect()
    }

    pub fn count(&self) -> usize {
        self.parts.iter().map(|p| p.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn filter(&self, pred: impl Fn(&K, &V) -> bool + Sync) -> Self {
        self.try_filter(|k, v| Ok(pred(k, v)))
            .expect("infallible predicate")
    }

    pub fn try_filter(
        &self,
        pred: impl Fn(&K, &V) -> core::result::Result<bool, UdfError> + Sync,
    ) -> Result<Self> {
        let hint = self.hint.as_ref();
        let out = self.rt.try_par_map(self.parts.len(), |p| {
            let mut kept = Vec::new();
            let mut slots = Vec::new();
            for (i, (k, v)) in self.parts[p].iter().enumerate() {
                if pred(k, v).map_err(|e| Error::udf(k, e))? {
                    kept.push((k.clone(), v.clone()));
                    if let Some(h) = hint {
                        slots.push(h.slots[p][i]);
                    }
                }
            }
            Ok((Arc::new(kept), Arc::new(slots)))
        })?;
        let (parts, slots): (Vec<_>, Vec<_>) = out.into_iter().unzip();
        let hint = self.hint.as_ref().map(|h| IndexHint {
            epoch: h.epoch,
            slots,
        });
        Ok(Collection::from_parts(
            self.rt.clone(),
            parts,
            self.partitioner,
            hint,
        ))
    }

    pub fn map<K2: Key, V2: Data>(
        &self,
        f: impl Fn(&K, &V) -> (K2, V2) + Sync,
    ) -> Collection<K2, V2> {
        self.try_map(|k, v| Ok(f(k, v))).expect("infallible map")
    }

    pub fn try_map<K2: Key, V2: Data>(
        &self,
        f: impl Fn(&K, &V) -> core::result::Result<(K2, V2), UdfError> + Sync,
    ) -> Result<Collection<K2, V2>> {
        let parts = self.rt.try_par_map(self.parts.len(), |p| {
            self.parts[p]
                .iter()
                .map(|(k, v)| f(k, v).map_err(|e| Error::udf(k, e)))
                .collect::<Result<Vec<_>>>()
                .map(Arc::new)
        })?;
        Ok(Collection::from_parts(self.rt.clone(), parts, None, None))
    }

    /// Replaces every tuple with the tuples `f` returns, in order.
    pub fn flat_map<K2: Key, V2: Data, I: IntoIterator<Item = (K2, V2)>>(
        &self,
        f: impl Fn(&K, &V) -> I + Sync,
    ) -> Collection<K2, V2> {
        let parts = self.rt.par_map(self.parts.len(), |p| {
            Arc::new(
                self.parts[p]
                    .iter()
                    .flat_map(|(k, v)| f(k, v))
                    .collect::<Vec<_>>(),
            )
        });
        Collection::from_parts(self.rt.clone(), parts, None, None)
    }

    /// Transforms values only; keys and partitioning are kept.
    pub fn map_values<V2: Data>(&self, f: impl Fn(&K, &V) -> V2 + Sync) -> Collection<K, V2> {
        let parts = self.rt.par_map(self.parts.len(), |p| {
            Arc::new(
                self.parts[p]
                    .iter()
                    .map(|(k, v)| (k.clone(), f(k, v)))
                    .collect::<Vec<_>>(),
            )
        });
        Collection::from_parts(self.rt.clone(), parts, self.partitioner, self.hint.clone())
    }

    pub fn reduce_by_key(&self, reduce: impl Fn(&V, &V) -> V + Sync) -> Self {
        self.try_reduce_by_key(|a, b| Ok(reduce(a, b)))
            .expect("infallible reduce")
    }

    /// One tuple per distinct key. Values are combined inside each partition
    /// first, then the partial results are exchanged by key hash.
    pub fn try_reduce_by_key(
        &self,
        reduce: impl Fn(&V, &V) -> core::result::Result<V, UdfError> + Sync,
    ) -> Result<Self> {
        let combine = |tuples: &mut dyn Iterator<Item = (K, V)>| -> Result<Vec<(K, V)>> {
            let mut order: Vec<(K, V)> = Vec::new();
            let mut pos: HashMap<K, usize> = map_with_capacity(16);
            for (k, v) in tuples {
                match pos.get(&k) {
                    Some(&i) => {
                        let merged = reduce(&order[i].1, &v).map_err(|e| Error::udf(&k, e))?;
                        order[i].1 = merged;
                    }
                    None => {
                        pos.insert(k.clone(), order.len());
                        order.push((k, v));
                    }
                }
            }
            Ok(order)
        };
        let local = self.rt.try_par_map(self.parts.len(), |p| {
            combine(&mut self.parts[p].iter().cloned())
        })?;
        let target = HashPartitioner::new(self.parts.len());
        let moved = if self.partitioner == Some(target) {
            local
        } else {
            exchange(&self.rt, meter::REDUCE_BY_KEY, &local, target)?
        };
        let reduced = self.rt.try_par_map(moved.len(), |p| {
            combine(&mut moved[p].iter().cloned()).map(Arc::new)
        })?;
        Ok(Collection::from_parts(
            self.rt.clone(),
            reduced,
            Some(target),
            None,
        ))
    }

    /// Left outer equi-join. The right side is moved to the left side's hash
    /// layout unless both already share it; an unpartitioned left side is
    /// hash-partitioned first.
    pub fn left_join<U: Data>(&self, other: &Collection<K, U>) -> Collection<K, (V, Option<U>)> {
        let (left, target) = match self.partitioner {
            Some(p) => (self.clone(), p),
            None => {
                let target = HashPartitioner::new(self.parts.len());
                let parts: Vec<Vec<(K, V)>> =
                    self.parts.iter().map(|p| p.as_ref().clone()).collect();
                let moved = exchange(&self.rt, meter::LEFT_JOIN, &parts, target)
                    .expect("blocks produced in-process decode");
                let parts = moved.into_iter().map(Arc::new).collect();
                (
                    Collection::from_parts(self.rt.clone(), parts, Some(target), None),
                    target,
                )
            }
        };
        let right: Vec<Arc<Vec<(K, U)>>> = if other.partitioner == Some(target) {
            other.parts.clone()
        } else {
            let parts: Vec<Vec<(K, U)>> = other.parts.iter().map(|p| p.as_ref().clone()).collect();
            exchange(&self.rt, meter::LEFT_JOIN, &parts, target)
                .expect("blocks produced in-process decode")
                .into_iter()
                .map(Arc::new)
                .collect()
        };
        let parts = self.rt.par_map(left.parts.len(), |p| {
            let mut matches: HashMap<&K, Vec<&U>> = map_with_capacity(right[p].len());
            for (k, u) in right[p].iter() {
                if !k.is_null() {
                    matches.entry(k).or_default().push(u);
                }
            }
            let mut out = Vec::with_capacity(left.parts[p].len());
            for (k, v) in left.parts[p].iter() {
                match matches.get(k) {
                    Some(us) if !k.is_null() => {
                        for u in us {
                            out.push((k.clone(), (v.clone(), Some((*u).clone()))));
                        }
                    }
                    _ => out.push((k.clone(), (v.clone(), None))),
                }
            }
            Arc::new(out)
        });
        Collection::from_parts(self.rt.clone(), parts, Some(target), None)
    }

    /// Moves every tuple to `target.assign(key)`, charging `exchange_name`.
    pub fn partition_by(&self, target: HashPartitioner, exchange_name: &str) -> Result<Self> {
        if self.partitioner == Some(target) {
            return Ok(self.clone());
        }
        let parts: Vec<Vec<(K, V)>> = self.parts.iter().map(|p| p.as_ref().clone()).collect();
        let moved = exchange(&self.rt, exchange_name, &parts, target)?;
        Ok(Collection::from_parts(
            self.rt.clone(),
            moved.into_iter().map(Arc::new).collect(),
            Some(target),
            None,
        ))
    }
}

/// Hash exchange of `sources` into `target.partitions()` buckets.
pub(crate) fn exchange<K: Key, V: Data>(
    rt: &Runtime,
    name: &str,
    sources: &[Vec<(K, V)>],
    target: HashPartitioner,
) -> Result<Vec<Vec<(K, V)>>> {
    exchange_with(rt, name, sources, target.partitions(), |k| target.assign(k))
}

/// Moves every record to partition `assign(key)` of `n`. Each non-empty
/// (source, target) bucket travels as one keyed block; receivers concatenate
/// in source order.
pub(crate) fn exchange_with<K: Data, V: Data>(
    rt: &Runtime,
    name: &str,
    sources: &[Vec<(K, V)>],
    n: usize,
    assign: impl Fn(&K) -> usize + Sync,
) -> Result<Vec<Vec<(K, V)>>> {
    let blocks: Vec<Vec<Option<Vec<u8>>>> = rt.par_map(sources.len(), |s| {
        let mut buckets: Vec<Vec<usize>> = (0..n).map(|_| Vec::new()).collect();
        for (i, (k, _)) in sources[s].iter().enumerate() {
            buckets[assign(k)].push(i);
        }
        buckets
            .into_iter()
            .map(|idx| {
                if idx.is_empty() {
                    return None;
                }
                let block = encode_keyed_block(idx.iter().map(|&i| {
                    let (k, v) = &sources[s][i];
                    (k, v)
                }));
                Some(rt.ship(name, block, idx.len() as u64))
            })
            .collect()
    });
    rt.try_par_map(n, |t| {
        let mut out = Vec::new();
        for row in &blocks {
            if let Some(block) = &row[t] {
                let bytes = rt.receive(block.clone())?;
                out.extend(decode_keyed_block::<K, V>(&bytes)?);
            }
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{Config, Sequential};
    use alloc::vec;

    fn rt(p: usize) -> Arc<Runtime> {
        Runtime::new(
            Config {
                partitions: p,
                ..Config::default()
            },
            Sequential,
        )
        .unwrap()
    }

    fn sorted<K: Ord + Clone, V: Ord + Clone>(c: &Collection<K, V>) -> Vec<(K, V)>
    where
        K: Key,
        V: Data,
    {
        let mut v = c.to_vec();
        v.sort();
        v
    }

    #[test]
    fn filter_keeps_matching_tuples() {
        let rt = rt(2);
        let c = Collection::from_vec(&rt, vec![(1u64, String::from("a")), (2, String::from("b"))]);
        let even = c.filter(|k, _| k % 2 == 0);
        assert_eq!(even.to_vec(), vec![(2, String::from("b"))]);
        assert_eq!(c.filter(|_, _| true).to_vec(), c.to_vec());
        assert_eq!(rt.meter().total_bytes(), 0);
    }

    #[test]
    fn filter_and_map_preserve_partition_count() {
        let rt = rt(3);
        let c = Collection::hash_partitioned(&rt, (0..20u64).map(|i| (i, i)).collect(), 3);
        let f = c.filter(|_, v| *v > 4);
        assert_eq!(f.num_partitions(), 3);
        assert_eq!(f.partitioner(), c.partitioner());
        let m = c.map(|k, v| (*k, v * 2));
        assert_eq!(m.partitioner(), None);
        assert_eq!(m.num_partitions(), 3);
    }

    #[test]
    fn map_doubles_values() {
        let rt = rt(1);
        let c = Collection::from_vec(&rt, vec![(1u64, 2i64)]);
        assert_eq!(c.map(|k, v| (*k, v * 2)).to_vec(), vec![(1, 4)]);
    }

    #[test]
    fn udf_failure_names_the_key() {
        let rt = rt(2);
        let c = Collection::from_vec(&rt, vec![(1u64, 1i64), (7, 2), (9, 3)]);
        let err = c
            .try_filter(|k, _| {
                if *k == 7 {
                    Err(UdfError::new("boom"))
                } else {
                    Ok(true)
                }
            })
            .unwrap_err();
        match err {
            Error::Udf { key, source } => {
                assert_eq!(key, "7");
                assert_eq!(source, UdfError::new("boom"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(c
            .try_map(|_, _| Err::<(u64, u64), _>(UdfError::new("x")))
            .is_err());
        assert!(c.try_reduce_by_key(|_, _| Err(UdfError::new("x"))).is_ok());
    }

    #[test]
    fn reduce_by_key_sums() {
        let rt = rt(2);
        let c = Collection::from_vec(&rt, vec![(1u64, 2i64), (1, 3), (2, 5)]);
        let r = c.reduce_by_key(|a, b| a + b);
        assert_eq!(sorted(&r), vec![(1, 5), (2, 5)]);
        assert!(r.partitioner().is_some());
        assert!(rt.meter().bytes_for(meter::REDUCE_BY_KEY) > 0);
    }

    #[test]
    fn null_keys_group_together() {
        let rt = rt(3);
        let c = Collection::from_vec(
            &rt,
            vec![(None, 1i64), (Some(4u64), 1), (None, 2), (None, 3)],
        );
        let r = c.reduce_by_key(|a, b| a + b);
        assert_eq!(sorted(&r), vec![(None, 6), (Some(4), 1)]);
    }

    #[test]
    fn left_join_single_match_and_miss() {
        let rt = rt(2);
        let left = Collection::from_vec(&rt, vec![(1u64, String::from("a"))]);
        let right = Collection::from_vec(&rt, vec![(1u64, 10i64)]);
        assert_eq!(
            left.left_join(&right).to_vec(),
            vec![(1, (String::from("a"), Some(10)))]
        );
        let none: Collection<u64, i64> = Collection::empty(&rt);
        assert_eq!(
            left.left_join(&none).to_vec(),
            vec![(1, (String::from("a"), None))]
        );
    }

    #[test]
    fn left_join_null_keys_never_match() {
        let rt = rt(2);
        let left = Collection::from_vec(&rt, vec![(None::<u64>, 1i64), (Some(2), 2)]);
        let right = Collection::from_vec(&rt, vec![(None::<u64>, 9i64), (Some(2), 8)]);
        let mut out = left.left_join(&right).to_vec();
        out.sort();
        assert_eq!(out, vec![(None, (1, None)), (Some(2), (2, Some(8)))]);
    }

    #[test]
    fn left_join_duplicate_right_keys_multiply() {
        let rt = rt(2);
        let left = Collection::from_vec(&rt, vec![(1u64, 0i64)]);
        let right = Collection::from_vec(&rt, vec![(1u64, 1i64), (1, 2)]);
        let mut out = left.left_join(&right).to_vec();
        out.sort();
        assert_eq!(out, vec![(1, (0, Some(1))), (1, (0, Some(2)))]);
    }

    #[test]
    fn co_partitioned_join_is_free() {
        let rt = rt(4);
        let left = Collection::hash_partitioned(&rt, (0..50u64).map(|i| (i, i)).collect(), 4);
        let right = Collection::hash_partitioned(&rt, (0..50u64).map(|i| (i, i * 2)).collect(), 4);
        let joined = left.left_join(&right);
        assert_eq!(joined.count(), 50);
        assert_eq!(rt.meter().total_bytes(), 0);
    }

    #[test]
    fn count_includes_duplicates_and_empty_partitions() {
        let rt = rt(3);
        let c = Collection::from_partitions(
            &rt,
            vec![
                (0..4u64).map(|i| (i, ())).collect(),
                vec![],
                (0..7u64).map(|i| (i, ())).collect(),
            ],
        );
        assert_eq!(c.count(), 11);
        let dup = Collection::from_vec(&rt, vec![(1u64, 'a' as u32), (1, 'b' as u32)]);
        assert_eq!(dup.count(), 2);
        assert_eq!(Collection::<u64, u64>::empty(&rt).count(), 0);
    }
}
