//! Graph construction and routing-table derivation.

use alloc::sync::Arc;
use alloc::vec::Vec;

use spin::{Mutex, Once};

use super::{
    endpoint_roles, EdgePartition, IndexEpoch, PropertyGraph, RoutingTable, VertexId, VertexIndex,
    VertexPartition, ViewCache,
};
use crate::collection::{exchange_with, Collection, HashPartitioner};
use crate::error::{Error, Result};
use crate::hash::{map_with_capacity, new_set, HashMap};
use crate::meter;
use crate::runtime::Runtime;
use crate::wire::{decode_vertex_block, encode_vertex_block, Data};

/// Ships each edge partition's endpoint ids (with their src/dst roles) to the
/// vertex partitions owning them. Returns `roles[vp][e]`.
pub(crate) fn ship_roles<E: Sync + Send>(
    rt: &Runtime,
    eparts: &[EdgePartition<E>],
    vertex_part: HashPartitioner,
) -> Result<Vec<Vec<Vec<(VertexId, u8)>>>> {
    let blocks: Vec<Vec<Option<Vec<u8>>>> = rt.par_map(eparts.len(), |e| {
        endpoint_roles(&eparts[e], vertex_part)
            .into_iter()
            .map(|list| {
                if list.is_empty() {
                    return None;
                }
                let block = encode_vertex_block(list.iter().map(|(id, role)| (*id, role)));
                Some(rt.ship(meter::ROUTING_BUILD, block, list.len() as u64))
            })
            .collect()
    });
    rt.try_par_map(vertex_part.partitions(), |vp| {
        blocks
            .iter()
            .map(|row| match &row[vp] {
                Some(b) => Ok(decode_vertex_block::<u8>(&rt.receive(b.clone())?)?),
                None => Ok(Vec::new()),
            })
            .collect()
    })
}

pub(crate) fn routing_for(index: &VertexIndex, roles: &[Vec<(VertexId, u8)>]) -> RoutingTable {
    let refs: Vec<&[(VertexId, u8)]> = roles.iter().map(|r| r.as_slice()).collect();
    RoutingTable::from_roles(index, &refs)
}

impl<V: Data, E: Data> PropertyGraph<V, E> {
    /// Builds a consistent graph: duplicate vertex ids are combined with
    /// `merge`, ids that only occur in `edges` get `default`.
    pub fn from_collections(
        vertices: &Collection<VertexId, V>,
        edges: &Collection<(VertexId, VertexId), E>,
        merge: impl Fn(&V, &V) -> V + Sync,
        default: V,
    ) -> Result<Self> {
        Self::build(vertices, edges, merge, Some(default))
    }

    /// Graph whose vertices all come from the edge endpoints.
    pub fn from_edges(edges: &Collection<(VertexId, VertexId), E>, default: V) -> Result<Self> {
        let none = Collection::empty(edges.runtime());
        Self::from_collections(&none, edges, |a, _| a.clone(), default)
    }

    /// With `default == None`, an edge endpoint missing from `vertices` is a
    /// construction error.
    pub(crate) fn build(
        vertices: &Collection<VertexId, V>,
        edges: &Collection<(VertexId, VertexId), E>,
        merge: impl Fn(&V, &V) -> V + Sync,
        default: Option<V>,
    ) -> Result<Self> {
        let rt = vertices.runtime().clone();
        let vertex_part = HashPartitioner::new(rt.config().partitions);
        let placed = vertices.partition_by(vertex_part, meter::VERTEX_BUILD)?;
        let merged: Vec<Vec<(VertexId, V)>> = rt.par_map(placed.num_partitions(), |p| {
            let mut order: Vec<(VertexId, V)> = Vec::new();
            let mut pos: HashMap<VertexId, usize> = map_with_capacity(placed.partitions()[p].len());
            for (id, v) in placed.partitions()[p].iter() {
                match pos.get(id) {
                    Some(&i) => order[i].1 = merge(&order[i].1, v),
                    None => {
                        pos.insert(*id, order.len());
                        order.push((*id, v.clone()));
                    }
                }
            }
            order
        });
        let eparts = place_edges(&rt, edges)?;
        Self::assemble(rt, vertex_part, merged, eparts, default)
    }

    pub(crate) fn assemble(
        rt: Arc<Runtime>,
        vertex_part: HashPartitioner,
        vertices: Vec<Vec<(VertexId, V)>>,
        eparts: Vec<EdgePartition<E>>,
        default: Option<V>,
    ) -> Result<Self> {
        let roles = ship_roles(&rt, &eparts, vertex_part)?;
        let epoch = IndexEpoch::fresh();
        let vparts = rt.try_par_map(vertex_part.partitions(), |vp| {
            let mut ids: Vec<VertexId> = Vec::with_capacity(vertices[vp].len());
            let mut values: Vec<Option<V>> = Vec::with_capacity(vertices[vp].len());
            let mut seen = new_set();
            for (id, v) in &vertices[vp] {
                seen.insert(*id);
                ids.push(*id);
                values.push(Some(v.clone()));
            }
            for list in &roles[vp] {
                for &(id, _) in list {
                    if seen.insert(id) {
                        let v = default.clone().ok_or_else(|| {
                            Error::Construction(alloc::format!(
                                "edge endpoint {id} has no vertex attribute"
                            ))
                        })?;
                        ids.push(id);
                        values.push(Some(v));
                    }
                }
            }
            let index = VertexIndex::build(ids, epoch)?;
            let routing = routing_for(&index, &roles[vp]);
            Ok(VertexPartition::from_parts(index, values, routing))
        })?;
        Ok(PropertyGraph {
            rt,
            vertex_part,
            vparts,
            eparts,
            epoch,
            pending_edge_filter: false,
            resolved: Arc::new(Once::new()),
            cache: Mutex::new(ViewCache::none()),
        })
    }
}

/// Turns an edge collection into edge partitions using the runtime's edge
/// partitioner.
pub(crate) fn place_edges<E: Data>(
    rt: &Arc<Runtime>,
    edges: &Collection<(VertexId, VertexId), E>,
) -> Result<Vec<EdgePartition<E>>> {
    let part = rt.config().edge_partitioner;
    let sources: Vec<Vec<((VertexId, VertexId), E)>> = edges
        .partitions()
        .iter()
        .map(|p| p.as_ref().clone())
        .collect();
    let placed = match part.assign(0, 0) {
        None => sources,
        Some(_) => exchange_with(
            rt,
            meter::EDGE_REPARTITION,
            &sources,
            part.partitions,
            |&(s, d)| part.assign(s, d).expect("non-input partitioner"),
        )?,
    };
    Ok(rt.par_map(placed.len(), |e| {
        EdgePartition::build(
            placed[e]
                .iter()
                .map(|((s, d), a)| (*s, *d, a.clone()))
                .collect(),
        )
    }))
}
