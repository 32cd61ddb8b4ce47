//! Triplet scans over edge partitions and the map-reduce-triplets engine.

use alloc::sync::Arc;
use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use super::view::{refresh_view, Mirror};
use super::{choose_scan, plan_join, AccessSpec, JoinPlan, ScanMode, SkipStale};
use crate::collection::{Collection, IndexHint};
use crate::error::{Error, Result, UdfError};
use crate::graph::{AccessProbe, EdgePartition, PropertyGraph, Triplet, VertexId};
use crate::hash::{new_map, HashMap};
use crate::meter;
use crate::wire::{decode_vertex_block, encode_vertex_block, Data};

/// What one edge partition sees during a triplet scan.
pub(crate) struct EdgeSite<'a, V, E> {
    pub part: &'a EdgePartition<E>,
    /// Edges to visit: stored mask minus edges with a hidden endpoint.
    pub mask: &'a FixedBitSet,
    pub mirror: Option<&'a Mirror<V>>,
    /// Sides whose attributes the scan exposes.
    pub sides: AccessSpec,
}

impl<V, E> EdgeSite<'_, V, E> {
    fn changed(&self, local: usize) -> bool {
        self.mirror.is_some_and(|m| m.changed.contains(local))
    }

    fn keeps(&self, pos: usize, skip: SkipStale) -> bool {
        if !self.mask.contains(pos) {
            return false;
        }
        if skip == SkipStale::None {
            return true;
        }
        let s = self.part.structure();
        skip.keeps(
            self.changed(s.local_src(pos)),
            self.changed(s.local_dst(pos)),
        )
    }

    /// Fraction of mirrored vertices that changed in the last shipment.
    pub fn active_fraction(&self) -> f64 {
        match self.mirror {
            Some(m) => {
                let present = m.len();
                if present == 0 {
                    1.0
                } else {
                    m.changed.count_ones(..) as f64 / present as f64
                }
            }
            None => 1.0,
        }
    }

    /// Candidate positions of an index scan, ascending.
    fn index_positions(&self, skip: SkipStale) -> Vec<usize> {
        let s = self.part.structure();
        let mut out: Vec<usize> = Vec::new();
        let by_src = |out: &mut Vec<usize>| {
            for local in 0..s.num_sources() {
                if skip == SkipStale::None || self.changed(local) {
                    out.extend(s.block_of_local(local));
                }
            }
        };
        let by_dst = |out: &mut Vec<usize>| {
            if let Some(m) = self.mirror {
                for local in m.changed.ones() {
                    out.extend(s.dst_positions_of_local(local).iter().map(|&p| p as usize));
                }
            }
        };
        match skip {
            SkipStale::None | SkipStale::Out | SkipStale::Both => by_src(&mut out),
            SkipStale::In => {
                by_dst(&mut out);
                out.sort_unstable();
            }
            SkipStale::Either => {
                by_src(&mut out);
                by_dst(&mut out);
                out.sort_unstable();
                out.dedup();
            }
        }
        out
    }
}

/// Calls `f` on every visible triplet of the site that `skip` keeps, in
/// ascending edge position for both scan modes.
pub(crate) fn for_each_triplet<V, E, X>(
    site: &EdgeSite<'_, V, E>,
    skip: SkipStale,
    mode: ScanMode,
    probe: Option<&AccessProbe>,
    mut f: impl FnMut(usize, &Triplet<'_, V, E>) -> core::result::Result<(), X>,
) -> core::result::Result<u64, X> {
    let s = site.part.structure();
    let mut visited = 0;
    let mut visit = |pos: usize| {
        if !site.keeps(pos, skip) {
            return Ok(());
        }
        visited += 1;
        let lookup = |read: bool, local: usize| {
            if read {
                site.mirror.and_then(|m| m.get(local))
            } else {
                None
            }
        };
        let t = Triplet::partial(
            s.src(pos),
            lookup(site.sides.reads_src, s.local_src(pos)),
            site.part.attr(pos),
            s.dst(pos),
            lookup(site.sides.reads_dst, s.local_dst(pos)),
            probe,
        );
        f(pos, &t)
    };
    match mode {
        ScanMode::SequentialEdgeScan => {
            for pos in site.mask.ones() {
                visit(pos)?;
            }
        }
        ScanMode::VertexIndexScan => {
            for pos in site.index_positions(skip) {
                visit(pos)?;
            }
        }
    }
    Ok(visited)
}

/// Execution report of one triplet aggregation.
#[derive(Clone, Debug, PartialEq)]
pub struct MrStats {
    pub plan: JoinPlan,
    /// Vertex sides actually shipped.
    pub shipped_sides: AccessSpec,
    /// Scan mode used per edge partition.
    pub scan: Vec<ScanMode>,
    /// Changed visible vertices over visible vertices (1 without skipping).
    pub active_fraction: f64,
    pub view_tuples: u64,
    pub view_bytes: u64,
    /// Triplets handed to the message function.
    pub triplets: u64,
    /// Message tuples shipped after local combining.
    pub messages: u64,
}

type SendFn<'a, V, E, M> = dyn Fn(&Triplet<'_, V, E>) -> core::result::Result<(Option<M>, Option<M>), UdfError>
    + Sync
    + 'a;

pub(crate) fn run_mr<V: Data, E: Data, M: Data>(
    g: &PropertyGraph<V, E>,
    access: AccessSpec,
    send: &SendFn<'_, V, E, M>,
    reduce: &(dyn Fn(&M, &M) -> M + Sync),
    skip: SkipStale,
) -> Result<(Collection<VertexId, M>, MrStats)> {
    let rt = &g.rt;
    let cfg = rt.config();
    let plan = if cfg.join_elimination {
        plan_join(access)
    } else {
        JoinPlan::ThreeWay
    };
    let exposed = if cfg.verify_access {
        AccessSpec::BOTH
    } else {
        plan.sides()
    };
    let shipped = exposed.union(skip.sides());

    let (view, changed) = if shipped.is_none() {
        (None, g.num_vertices())
    } else {
        let (v, c) = refresh_view(g, shipped)?;
        (Some(v), c)
    };
    let visible = g.num_vertices();
    let active_fraction = if skip == SkipStale::None || visible == 0 {
        1.0
    } else {
        changed as f64 / visible as f64
    };
    let masks = g.resolved_edge_masks();
    let vertex_part = g.vertex_part;
    let nv = vertex_part.partitions();

    type Shipped = (Vec<Option<Vec<u8>>>, ScanMode, u64, u64);
    let per_edge: Vec<Shipped> = rt.try_par_map(g.eparts.len(), |e| {
        let site = EdgeSite {
            part: &g.eparts[e],
            mask: &masks[e],
            mirror: view.as_ref().map(|v| v.mirrors()[e].as_ref()),
            sides: exposed,
        };
        let fraction = if cfg.scan.per_partition && skip != SkipStale::None {
            site.active_fraction()
        } else {
            active_fraction
        };
        let mode = choose_scan(fraction, &cfg.scan);
        let probe = cfg.verify_access.then(|| AccessProbe::new(access));
        let mut order: Vec<(VertexId, M)> = Vec::new();
        let mut slot_of: HashMap<VertexId, usize> = new_map();
        let mut deliver = |id: VertexId, m: M| match slot_of.get(&id) {
            Some(&i) => order[i].1 = reduce(&order[i].1, &m),
            None => {
                slot_of.insert(id, order.len());
                order.push((id, m));
            }
        };
        let visited = for_each_triplet(&site, skip, mode, probe.as_ref(), |_, t| {
            let out = send(t).map_err(|err| Error::udf(&(t.src_id(), t.dst_id()), err))?;
            if let Some(p) = &probe {
                if p.src_violation.get() {
                    return Err(Error::UndeclaredAccess { side: "src" });
                }
                if p.dst_violation.get() {
                    return Err(Error::UndeclaredAccess { side: "dst" });
                }
            }
            if let Some(m) = out.0 {
                deliver(t.src_id(), m);
            }
            if let Some(m) = out.1 {
                deliver(t.dst_id(), m);
            }
            Ok(())
        })?;
        let mut buckets: Vec<Vec<usize>> = (0..nv).map(|_| Vec::new()).collect();
        for (i, (id, _)) in order.iter().enumerate() {
            buckets[vertex_part.assign(id)].push(i);
        }
        let mut sent = 0;
        let blocks = buckets
            .into_iter()
            .map(|idx| {
                if idx.is_empty() {
                    return None;
                }
                sent += idx.len() as u64;
                let block = encode_vertex_block(idx.iter().map(|&i| (order[i].0, &order[i].1)));
                Some(rt.ship(meter::MESSAGES, block, idx.len() as u64))
            })
            .collect();
        Ok((blocks, mode, visited, sent))
    })?;

    let received: Vec<(Vec<(VertexId, M)>, Vec<u32>)> = rt.try_par_map(nv, |vp| {
        let part = &g.vparts[vp];
        let mut acc: Vec<Option<M>> = alloc::vec![None; part.slots()];
        for (blocks, ..) in &per_edge {
            if let Some(block) = &blocks[vp] {
                for (id, m) in decode_vertex_block::<M>(&rt.receive(block.clone())?)? {
                    let slot = part.index().slot(id).ok_or_else(|| {
                        Error::Construction(alloc::format!("message for unknown vertex {id}"))
                    })?;
                    acc[slot] = Some(match acc[slot].take() {
                        Some(prev) => reduce(&prev, &m),
                        None => m,
                    });
                }
            }
        }
        let mut tuples = Vec::new();
        let mut slots = Vec::new();
        for (slot, m) in acc.into_iter().enumerate() {
            if let Some(m) = m {
                tuples.push((part.index().id(slot), m));
                slots.push(slot as u32);
            }
        }
        Ok((tuples, slots))
    })?;
    let mut parts = Vec::with_capacity(nv);
    let mut hint = Vec::with_capacity(nv);
    for (tuples, slots) in received {
        parts.push(Arc::new(tuples));
        hint.push(Arc::new(slots));
    }
    let out = Collection::from_parts(
        rt.clone(),
        parts,
        Some(vertex_part),
        Some(IndexHint {
            epoch: g.epoch,
            slots: hint,
        }),
    );
    let stats = MrStats {
        plan,
        shipped_sides: shipped,
        scan: per_edge.iter().map(|p| p.1).collect(),
        active_fraction,
        view_tuples: view.as_ref().map_or(0, |v| v.shipped_tuples()),
        view_bytes: view.as_ref().map_or(0, |v| v.shipped_bytes()),
        triplets: per_edge.iter().map(|p| p.2).sum(),
        messages: per_edge.iter().map(|p| p.3).sum(),
    };
    Ok((out, stats))
}
