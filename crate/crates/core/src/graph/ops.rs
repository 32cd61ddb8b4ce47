//! Graph operators. Every operator returns a new graph; structural indexes
//! are shared whenever the operator leaves them valid.

use alloc::sync::Arc;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;
use spin::{Mutex, Once};

use super::build::{routing_for, ship_roles};
use super::{
    EdgePartition, IndexEpoch, PropertyGraph, Triplet, VertexId, VertexIndex, VertexPartition,
    ViewCache,
};
use crate::collection::{exchange_with, Collection, IndexHint};
use crate::error::{Error, Result, UdfError};
use crate::exec::{
    choose_scan, for_each_triplet, refresh_view, AccessSpec, EdgeSite, MrStats, ScanMode, SkipStale,
};
use crate::meter;
use crate::partition::EdgePartitioner;
use crate::wire::Data;

type Merge<'a, U> = &'a (dyn Fn(&U, &U) -> U + Sync);

/// Combines two values for the same key: `merge` when given, otherwise the
/// value with the smaller encoding wins so the outcome ignores arrival order.
fn pick<U: Data>(a: U, b: U, merge: Option<Merge<'_, U>>) -> U {
    match merge {
        Some(m) => m(&a, &b),
        None if b.to_bytes() < a.to_bytes() => b,
        None => a,
    }
}

impl<V: Data, E: Data> PropertyGraph<V, E> {
    /// Visible vertices, partitioned like the vertex store. No exchange.
    pub fn vertices(&self) -> Collection<VertexId, V> {
        let mut parts = Vec::with_capacity(self.vparts.len());
        let mut slots = Vec::with_capacity(self.vparts.len());
        for p in &self.vparts {
            parts.push(Arc::new(
                p.iter().map(|(id, v)| (id, v.clone())).collect::<Vec<_>>(),
            ));
            slots.push(Arc::new(
                p.mask().ones().map(|s| s as u32).collect::<Vec<_>>(),
            ));
        }
        Collection::from_parts(
            self.rt.clone(),
            parts,
            Some(self.vertex_part),
            Some(IndexHint {
                epoch: self.epoch,
                slots,
            }),
        )
    }

    /// Visible edges, one partition per edge partition. No exchange.
    pub fn edges(&self) -> Collection<(VertexId, VertexId), E> {
        let masks = self.resolved_edge_masks();
        let parts = self
            .eparts
            .iter()
            .zip(&masks)
            .map(|(p, mask)| {
                let s = p.structure();
                Arc::new(
                    mask.ones()
                        .map(|pos| ((s.src(pos), s.dst(pos)), p.attr(pos).clone()))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        Collection::from_parts(self.rt.clone(), parts, None, None)
    }

    /// Number of visible edges.
    pub fn num_edges(&self) -> usize {
        self.resolved_edge_masks()
            .iter()
            .map(|m| m.count_ones(..))
            .sum()
    }

    /// Every visible edge with both endpoint attributes. Vertex attributes
    /// travel to the edges; edges stay put.
    pub fn triplets(&self) -> Result<Collection<(VertexId, VertexId), (V, E, V)>> {
        let (view, _) = refresh_view(self, AccessSpec::BOTH)?;
        let masks = self.resolved_edge_masks();
        let parts = self.rt.par_map(self.eparts.len(), |e| {
            let site = EdgeSite {
                part: &self.eparts[e],
                mask: &masks[e],
                mirror: Some(view.mirrors()[e].as_ref()),
                sides: AccessSpec::BOTH,
            };
            let mut out = Vec::new();
            let _ = for_each_triplet(
                &site,
                SkipStale::None,
                ScanMode::SequentialEdgeScan,
                None,
                |_, t| -> core::result::Result<(), ()> {
                    out.push((
                        (t.src_id(), t.dst_id()),
                        (t.src_attr().clone(), t.attr().clone(), t.dst_attr().clone()),
                    ));
                    Ok(())
                },
            );
            Arc::new(out)
        });
        Ok(Collection::from_parts(self.rt.clone(), parts, None, None))
    }

    /// Transforms visible vertex attributes. Structure is shared.
    pub fn map_v<V2: Data>(&self, f: impl Fn(VertexId, &V) -> V2 + Sync) -> PropertyGraph<V2, E> {
        self.try_map_v(|id, v| Ok(f(id, v)))
            .expect("infallible vertex map")
    }

    pub fn try_map_v<V2: Data>(
        &self,
        f: impl Fn(VertexId, &V) -> core::result::Result<V2, UdfError> + Sync,
    ) -> Result<PropertyGraph<V2, E>> {
        let vparts = self.rt.try_par_map(self.vparts.len(), |vp| {
            let p = &self.vparts[vp];
            let mut values: Vec<Option<V2>> = (0..p.slots()).map(|_| None).collect();
            for slot in p.mask().ones() {
                let id = p.index().id(slot);
                values[slot] = Some(f(id, p.value(slot)).map_err(|e| Error::udf(&id, e))?);
            }
            Ok(p.with_values(values))
        })?;
        Ok(self.with_vertices(vparts, ViewCache::none()))
    }

    /// Transforms visible edge attributes. `access` declares which endpoint
    /// attributes `f` reads; only those are shipped.
    pub fn map_e<E2: Data>(
        &self,
        access: AccessSpec,
        f: impl Fn(&Triplet<'_, V, E>) -> E2 + Sync,
    ) -> Result<PropertyGraph<V, E2>> {
        self.try_map_e(access, |t| Ok(f(t)))
    }

    pub fn try_map_e<E2: Data>(
        &self,
        access: AccessSpec,
        f: impl Fn(&Triplet<'_, V, E>) -> core::result::Result<E2, UdfError> + Sync,
    ) -> Result<PropertyGraph<V, E2>> {
        let cfg = self.rt.config();
        let sides = if cfg.verify_access {
            AccessSpec::BOTH
        } else if cfg.join_elimination {
            access
        } else {
            AccessSpec::BOTH
        };
        let view = if sides.is_none() {
            None
        } else {
            Some(refresh_view(self, sides)?.0)
        };
        let masks = self.resolved_edge_masks();
        let eparts = self.rt.try_par_map(self.eparts.len(), |e| {
            let part = &self.eparts[e];
            let site = EdgeSite {
                part,
                mask: &masks[e],
                mirror: view.as_ref().map(|v| v.mirrors()[e].as_ref()),
                sides,
            };
            let probe = cfg.verify_access.then(|| super::AccessProbe::new(access));
            let mut attrs: Vec<Option<E2>> = (0..part.len()).map(|_| None).collect();
            for_each_triplet(
                &site,
                SkipStale::None,
                ScanMode::SequentialEdgeScan,
                probe.as_ref(),
                |pos, t| {
                    attrs[pos] =
                        Some(f(t).map_err(|err| Error::udf(&(t.src_id(), t.dst_id()), err))?);
                    check_probe(probe.as_ref())
                },
            )?;
            Ok(part.with_attrs(attrs, masks[e].clone()))
        })?;
        Ok(PropertyGraph {
            rt: self.rt.clone(),
            vertex_part: self.vertex_part,
            vparts: self.vparts.clone(),
            eparts,
            epoch: self.epoch,
            pending_edge_filter: false,
            resolved: Arc::new(Once::new()),
            cache: Mutex::new(self.cached_view()),
        })
    }

    /// Places `t` next to the vertex store: `out[vp][slot]` holds the value for
    /// that slot. Co-indexed inputs are matched by slot without an exchange;
    /// other inputs are exchanged to the vertex partitioning first.
    fn align<U: Data>(
        &self,
        t: &Collection<VertexId, U>,
        merge: Option<Merge<'_, U>>,
    ) -> Result<Vec<Vec<Option<U>>>> {
        let nv = self.vparts.len();
        let co_indexed = t.partitioner() == Some(self.vertex_part)
            && t.num_partitions() == nv
            && t.hint.as_ref().is_some_and(|h| h.epoch == self.epoch);
        let placed = if co_indexed || t.partitioner() == Some(self.vertex_part) {
            t.clone()
        } else {
            t.partition_by(self.vertex_part, meter::JOIN_INPUT)?
        };
        let hint = if co_indexed {
            placed.hint.clone()
        } else {
            None
        };
        Ok(self.rt.par_map(nv, |vp| {
            let p = &self.vparts[vp];
            let mut out: Vec<Option<U>> = (0..p.slots()).map(|_| None).collect();
            for (i, (id, u)) in placed.partitions()[vp].iter().enumerate() {
                let slot = match &hint {
                    Some(h) => Some(h.slots[vp][i] as usize),
                    None => p.index().slot(*id),
                };
                if let Some(slot) = slot {
                    out[slot] = Some(match out[slot].take() {
                        Some(prev) => pick(prev, u.clone(), merge),
                        None => u.clone(),
                    });
                }
            }
            out
        }))
    }

    /// Pairs each visible vertex with its value in `t`, if any. Duplicate ids
    /// in `t` keep the value with the smallest encoding.
    pub fn left_join_v<U: Data>(
        &self,
        t: &Collection<VertexId, U>,
    ) -> Result<PropertyGraph<(V, Option<U>), E>> {
        self.left_join_v_inner(t, None)
    }

    /// Like [`left_join_v`](Self::left_join_v), combining duplicate ids in
    /// `t` with `merge`.
    pub fn left_join_v_with<U: Data>(
        &self,
        t: &Collection<VertexId, U>,
        merge: impl Fn(&U, &U) -> U + Sync,
    ) -> Result<PropertyGraph<(V, Option<U>), E>> {
        self.left_join_v_inner(t, Some(&merge))
    }

    fn left_join_v_inner<U: Data>(
        &self,
        t: &Collection<VertexId, U>,
        merge: Option<Merge<'_, U>>,
    ) -> Result<PropertyGraph<(V, Option<U>), E>> {
        let aligned = self.align(t, merge)?;
        let vparts = self.rt.par_map(self.vparts.len(), |vp| {
            let p = &self.vparts[vp];
            let mut values: Vec<Option<(V, Option<U>)>> = (0..p.slots()).map(|_| None).collect();
            for slot in p.mask().ones() {
                values[slot] = Some((p.value(slot).clone(), aligned[vp][slot].clone()));
            }
            p.with_values(values)
        });
        Ok(self.with_vertices(vparts, ViewCache::none()))
    }

    /// Keeps the vertices present in `t`, transformed by `f`; all others are
    /// hidden. Edges losing an endpoint disappear from every edge view.
    pub fn inner_join_v<U: Data, V2: Data>(
        &self,
        t: &Collection<VertexId, U>,
        f: impl Fn(VertexId, &V, &U) -> V2 + Sync,
    ) -> Result<PropertyGraph<V2, E>> {
        self.try_inner_join_v(t, |id, v, u| Ok(f(id, v, u)))
    }

    pub fn try_inner_join_v<U: Data, V2: Data>(
        &self,
        t: &Collection<VertexId, U>,
        f: impl Fn(VertexId, &V, &U) -> core::result::Result<V2, UdfError> + Sync,
    ) -> Result<PropertyGraph<V2, E>> {
        let aligned = self.align(t, None)?;
        let vparts = self.rt.try_par_map(self.vparts.len(), |vp| {
            let p = &self.vparts[vp];
            let mut values: Vec<Option<V2>> = (0..p.slots()).map(|_| None).collect();
            let mut mask = FixedBitSet::with_capacity(p.slots());
            for slot in p.mask().ones() {
                if let Some(u) = &aligned[vp][slot] {
                    let id = p.index().id(slot);
                    values[slot] = Some(f(id, p.value(slot), u).map_err(|e| Error::udf(&id, e))?);
                    mask.insert(slot);
                }
            }
            Ok(p.with_values(values).with_mask(mask))
        })?;
        let mut g = self.with_vertices(vparts, ViewCache::none());
        g.pending_edge_filter = true;
        g.resolved = Arc::new(Once::new());
        Ok(g)
    }

    /// Replaces the attribute of every visible vertex that has a value in `t`
    /// with `f(id, old, value)`; other vertices keep theirs. The cached vertex
    /// view survives and only the updated vertices count as changed.
    pub fn join_vertices<U: Data>(
        &self,
        t: &Collection<VertexId, U>,
        f: impl Fn(VertexId, &V, &U) -> V + Sync,
    ) -> Result<Self> {
        self.try_join_vertices(t, |id, v, u| Ok(f(id, v, u)))
    }

    pub fn try_join_vertices<U: Data>(
        &self,
        t: &Collection<VertexId, U>,
        f: impl Fn(VertexId, &V, &U) -> core::result::Result<V, UdfError> + Sync,
    ) -> Result<Self> {
        let aligned = self.align(t, None)?;
        let updated = self.rt.try_par_map(self.vparts.len(), |vp| {
            let p = &self.vparts[vp];
            let mut values: Vec<Option<V>> = p.values.as_ref().clone();
            let mut touched = FixedBitSet::with_capacity(p.slots());
            for slot in p.mask().ones() {
                if let Some(u) = &aligned[vp][slot] {
                    let id = p.index().id(slot);
                    values[slot] = Some(f(id, p.value(slot), u).map_err(|e| Error::udf(&id, e))?);
                    touched.insert(slot);
                }
            }
            Ok((p.with_values(values), touched))
        })?;
        let mut cache = self.cached_view();
        let (vparts, touched): (Vec<_>, Vec<_>) = updated.into_iter().unzip();
        if let Some(dirty) = cache.dirty.as_mut() {
            for (d, t) in dirty.iter_mut().zip(&touched) {
                d.union_with(t);
            }
        }
        Ok(self.with_vertices(vparts, cache))
    }

    /// Restricts the graph to vertices satisfying `vpred` and edges whose
    /// triplet satisfies `epred` and whose endpoints both survive. Hidden
    /// slots stay allocated; the index epoch is kept.
    pub fn subgraph(
        &self,
        vpred: impl Fn(VertexId, &V) -> bool + Sync,
        epred: impl Fn(&Triplet<'_, V, E>) -> bool + Sync,
    ) -> Result<Self> {
        self.try_subgraph(|id, v| Ok(vpred(id, v)), |t| Ok(epred(t)))
    }

    pub fn try_subgraph(
        &self,
        vpred: impl Fn(VertexId, &V) -> core::result::Result<bool, UdfError> + Sync,
        epred: impl Fn(&Triplet<'_, V, E>) -> core::result::Result<bool, UdfError> + Sync,
    ) -> Result<Self> {
        let vmasks = self.rt.try_par_map(self.vparts.len(), |vp| {
            let p = &self.vparts[vp];
            let mut mask = FixedBitSet::with_capacity(p.slots());
            for slot in p.mask().ones() {
                let id = p.index().id(slot);
                if vpred(id, p.value(slot)).map_err(|e| Error::udf(&id, e))? {
                    mask.insert(slot);
                }
            }
            Ok(mask)
        })?;
        let survives = |id: VertexId| {
            let p = self.vertex_part.assign(&id);
            self.vparts[p]
                .index()
                .slot(id)
                .is_some_and(|s| vmasks[p].contains(s))
        };
        let (view, _) = refresh_view(self, AccessSpec::BOTH)?;
        let masks = self.resolved_edge_masks();
        let eparts = self.rt.try_par_map(self.eparts.len(), |e| {
            let part = &self.eparts[e];
            let s = part.structure();
            let mut candidates = masks[e].clone();
            for pos in masks[e].ones() {
                if !(survives(s.src(pos)) && survives(s.dst(pos))) {
                    candidates.set(pos, false);
                }
            }
            let site = EdgeSite {
                part,
                mask: &candidates,
                mirror: Some(view.mirrors()[e].as_ref()),
                sides: AccessSpec::BOTH,
            };
            let mut keep = FixedBitSet::with_capacity(part.len());
            for_each_triplet(
                &site,
                SkipStale::None,
                ScanMode::SequentialEdgeScan,
                None,
                |pos, t| {
                    if epred(t).map_err(|err| Error::udf(&(t.src_id(), t.dst_id()), err))? {
                        keep.insert(pos);
                    }
                    Ok::<(), Error>(())
                },
            )?;
            Ok(part.with_mask(keep))
        })?;
        let roles = ship_roles(&self.rt, &eparts, self.vertex_part)?;
        let vparts = self
            .vparts
            .iter()
            .zip(vmasks)
            .enumerate()
            .map(|(vp, (p, mask))| {
                p.with_mask(mask)
                    .with_routing(routing_for(p.index(), &roles[vp]))
            })
            .collect();
        Ok(PropertyGraph {
            rt: self.rt.clone(),
            vertex_part: self.vertex_part,
            vparts,
            eparts,
            epoch: self.epoch,
            pending_edge_filter: false,
            resolved: Arc::new(Once::new()),
            cache: Mutex::new(ViewCache::none()),
        })
    }

    /// Aggregates messages along visible edges. `send` may address either
    /// endpoint; messages to the same vertex are combined with `reduce`.
    /// Vertices receiving nothing are absent from the result, which shares
    /// the vertex store's partitioning and index.
    pub fn mr_triplets<M: Data>(
        &self,
        access: AccessSpec,
        send: impl Fn(&Triplet<'_, V, E>) -> (Option<M>, Option<M>) + Sync,
        reduce: impl Fn(&M, &M) -> M + Sync,
        skip: SkipStale,
    ) -> Result<Collection<VertexId, M>> {
        Ok(self
            .try_mr_triplets(access, |t| Ok(send(t)), reduce, skip)?
            .0)
    }

    /// Fallible form of [`mr_triplets`](Self::mr_triplets) that also reports
    /// how the aggregation was executed.
    pub fn try_mr_triplets<M: Data>(
        &self,
        access: AccessSpec,
        send: impl Fn(&Triplet<'_, V, E>) -> core::result::Result<(Option<M>, Option<M>), UdfError>
            + Sync,
        reduce: impl Fn(&M, &M) -> M + Sync,
        skip: SkipStale,
    ) -> Result<(Collection<VertexId, M>, MrStats)> {
        crate::exec::run_mr(self, access, &send, &reduce, skip)
    }

    /// Number of visible out-edges of every vertex with at least one.
    pub fn out_degrees(&self) -> Result<Collection<VertexId, u64>> {
        self.mr_triplets(
            AccessSpec::NONE,
            |_| (Some(1), None),
            |a, b| a + b,
            SkipStale::None,
        )
    }

    /// Number of visible in-edges of every vertex with at least one.
    pub fn in_degrees(&self) -> Result<Collection<VertexId, u64>> {
        self.mr_triplets(
            AccessSpec::NONE,
            |_| (None, Some(1)),
            |a, b| a + b,
            SkipStale::None,
        )
    }

    /// Scan mode an unforced aggregation would pick right now for `skip`.
    pub fn planned_scan(&self, skip: SkipStale) -> ScanMode {
        let fraction = match (skip, self.cached_view().dirty) {
            (SkipStale::None, _) | (_, None) => 1.0,
            (_, Some(dirty)) => {
                let visible = self.num_vertices();
                if visible == 0 || !self.has_cached_view() {
                    1.0
                } else {
                    let changed: usize = dirty
                        .iter()
                        .zip(&self.vparts)
                        .map(|(d, p)| d.intersection(p.mask()).count())
                        .sum();
                    changed as f64 / visible as f64
                }
            }
        };
        choose_scan(fraction, &self.rt.config().scan)
    }

    /// Rebuilds vertex partitions over the visible vertices only, under a new
    /// index epoch. Observable contents are unchanged.
    pub fn reindex(&self) -> Result<Self> {
        let masks = self.resolved_edge_masks();
        let eparts: Vec<EdgePartition<E>> = self
            .eparts
            .iter()
            .zip(masks)
            .map(|(p, m)| p.with_mask(m))
            .collect();
        let roles = ship_roles(&self.rt, &eparts, self.vertex_part)?;
        let epoch = IndexEpoch::fresh();
        let vparts = self.rt.try_par_map(self.vparts.len(), |vp| {
            let p = &self.vparts[vp];
            let (ids, values): (Vec<VertexId>, Vec<Option<V>>) =
                p.iter().map(|(id, v)| (id, Some(v.clone()))).unzip();
            let index = VertexIndex::build(ids, epoch)?;
            let routing = routing_for(&index, &roles[vp]);
            Ok(VertexPartition::from_parts(index, values, routing))
        })?;
        Ok(PropertyGraph {
            rt: self.rt.clone(),
            vertex_part: self.vertex_part,
            vparts,
            eparts,
            epoch,
            pending_edge_filter: false,
            resolved: Arc::new(Once::new()),
            cache: Mutex::new(ViewCache::none()),
        })
    }

    /// Moves visible edges to the partitions chosen by `part`, re-clusters
    /// them and rebuilds routing. The vertex index gets a new epoch.
    pub fn repartition_edges(&self, part: EdgePartitioner) -> Result<Self> {
        part.validate()?;
        let masks = self.resolved_edge_masks();
        let sources: Vec<Vec<((VertexId, VertexId), E)>> = self
            .eparts
            .iter()
            .zip(&masks)
            .map(|(p, m)| {
                let s = p.structure();
                m.ones()
                    .map(|pos| ((s.src(pos), s.dst(pos)), p.attr(pos).clone()))
                    .collect()
            })
            .collect();
        let placed = match part.assign(0, 0) {
            None => sources,
            Some(_) => exchange_with(
                &self.rt,
                meter::EDGE_REPARTITION,
                &sources,
                part.partitions,
                |&(s, d)| part.assign(s, d).expect("non-input partitioner"),
            )?,
        };
        let eparts: Vec<EdgePartition<E>> = self.rt.par_map(placed.len(), |e| {
            EdgePartition::build(
                placed[e]
                    .iter()
                    .map(|((s, d), a)| (*s, *d, a.clone()))
                    .collect(),
            )
        });
        let roles = ship_roles(&self.rt, &eparts, self.vertex_part)?;
        let epoch = IndexEpoch::fresh();
        let vparts = self
            .vparts
            .iter()
            .enumerate()
            .map(|(vp, p)| {
                let index = p.index().with_epoch(epoch);
                let routing = routing_for(&index, &roles[vp]);
                VertexPartition {
                    index: Arc::new(index),
                    values: p.values.clone(),
                    mask: p.mask.clone(),
                    routing: Arc::new(routing),
                }
            })
            .collect();
        Ok(PropertyGraph {
            rt: self.rt.clone(),
            vertex_part: self.vertex_part,
            vparts,
            eparts,
            epoch,
            pending_edge_filter: false,
            resolved: Arc::new(Once::new()),
            cache: Mutex::new(ViewCache::none()),
        })
    }
}

fn check_probe(probe: Option<&super::AccessProbe>) -> Result<()> {
    if let Some(p) = probe {
        if p.src_violation.get() {
            return Err(Error::UndeclaredAccess { side: "src" });
        }
        if p.dst_violation.get() {
            return Err(Error::UndeclaredAccess { side: "dst" });
        }
    }
    Ok(())
}

impl<V> VertexPartition<V> {
    /// Same index, mask and routing with a new attribute array.
    pub(crate) fn with_values<V2>(&self, values: Vec<Option<V2>>) -> VertexPartition<V2> {
        debug_assert_eq!(values.len(), self.slots());
        VertexPartition {
            index: self.index.clone(),
            values: Arc::new(values),
            mask: self.mask.clone(),
            routing: self.routing.clone(),
        }
    }

    pub(crate) fn with_routing(&self, routing: super::RoutingTable) -> Self {
        VertexPartition {
            index: self.index.clone(),
            values: self.values.clone(),
            mask: self.mask.clone(),
            routing: Arc::new(routing),
        }
    }
}
