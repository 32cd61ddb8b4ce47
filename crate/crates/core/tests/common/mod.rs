//! Independent reference implementations used as test oracles. They work on
//! plain vectors and never touch the engine's partitioned structures.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use graphene_core::partition::PartitionerKind;
use graphene_core::{
    Collection, Config, EdgePartitioner, PropertyGraph, Runtime, Sequential, VertexId,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn runtime(config: Config) -> Arc<Runtime> {
    Runtime::new(config, Sequential).expect("valid config")
}

pub fn config(partitions: usize, kind: PartitionerKind, edge_parts: usize) -> Config {
    Config {
        partitions,
        edge_partitioner: EdgePartitioner::new(kind, edge_parts),
        ..Config::default()
    }
}

/// Random vertex ids drawn sparsely from a wider range.
pub fn ids(rng: &mut Rng8, n: usize) -> Vec<VertexId> {
    let mut pool: Vec<VertexId> = (0..(n as u64 * 3 + 1)).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

/// `n` vertices with small integer attributes and `m` random edges
/// (self-loops and parallel edges allowed) between them.
pub fn random_graph(
    rng: &mut Rng8,
    n: usize,
    m: usize,
) -> (Vec<(VertexId, i64)>, Vec<(VertexId, VertexId, i64)>) {
    let ids = ids(rng, n.max(1));
    let vertices = ids.iter().map(|&id| (id, rng.gen_range(0..50))).collect();
    let edges = (0..m)
        .map(|_| {
            let s = ids[rng.gen_range(0..ids.len())];
            let d = ids[rng.gen_range(0..ids.len())];
            (s, d, rng.gen_range(-5..5))
        })
        .collect();
    (vertices, edges)
}

pub fn build<V: graphene_core::Data, E: graphene_core::Data>(
    rt: &Arc<Runtime>,
    vertices: &[(VertexId, V)],
    edges: &[(VertexId, VertexId, E)],
    default: V,
) -> PropertyGraph<V, E> {
    let v = Collection::from_vec(rt, vertices.to_vec());
    let e = Collection::from_vec(
        rt,
        edges
            .iter()
            .map(|(s, d, a)| ((*s, *d), a.clone()))
            .collect(),
    );
    PropertyGraph::from_collections(&v, &e, |a, _| a.clone(), default).expect("graph builds")
}

pub fn sorted<K: Ord + Clone, V: Ord + Clone>(c: &Collection<K, V>) -> Vec<(K, V)>
where
    K: graphene_core::Key,
    V: graphene_core::Data,
{
    let mut v = c.to_vec();
    v.sort();
    v
}

/// Three-way nested-loop join of vertices, edges and vertices.
pub fn nested_loop_triplets<V: Clone, E: Clone>(
    vertices: &[(VertexId, V)],
    edges: &[(VertexId, VertexId, E)],
) -> Vec<(VertexId, V, E, VertexId, V)> {
    let mut out = Vec::new();
    for (s, d, e) in edges {
        for (vs, a) in vertices {
            if vs != s {
                continue;
            }
            for (vd, b) in vertices {
                if vd == d {
                    out.push((*s, a.clone(), e.clone(), *d, b.clone()));
                }
            }
        }
    }
    out
}

/// Group-by fold over the messages produced by `send` on every triplet.
pub fn mr_oracle<V: Clone, E: Clone, M: Clone>(
    vertices: &[(VertexId, V)],
    edges: &[(VertexId, VertexId, E)],
    send: impl Fn(VertexId, &V, &E, VertexId, &V) -> (Option<M>, Option<M>),
    reduce: impl Fn(&M, &M) -> M,
) -> BTreeMap<VertexId, M> {
    let mut out: BTreeMap<VertexId, M> = BTreeMap::new();
    for (s, a, e, d, b) in nested_loop_triplets(vertices, edges) {
        let (to_src, to_dst) = send(s, &a, &e, d, &b);
        for (id, m) in [(s, to_src), (d, to_dst)] {
            if let Some(m) = m {
                let merged = match out.get(&id) {
                    Some(prev) => reduce(prev, &m),
                    None => m,
                };
                out.insert(id, merged);
            }
        }
    }
    out
}

/// Dense power iteration of `PR = reset + (1 - reset) * A^T (PR / outdeg)`
/// starting from 1.0; parallel edges count separately.
pub fn dense_page_rank(
    ids: &[VertexId],
    edges: &[(VertexId, VertexId)],
    iterations: usize,
    reset: f64,
) -> BTreeMap<VertexId, f64> {
    let n = ids.len();
    let pos: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut weight = vec![vec![0.0f64; n]; n];
    let mut outdeg = vec![0usize; n];
    for (s, _) in edges {
        outdeg[pos[s]] += 1;
    }
    for (s, d) in edges {
        weight[pos[d]][pos[s]] += 1.0 / outdeg[pos[s]] as f64;
    }
    let mut rank = vec![1.0f64; n];
    for _ in 0..iterations {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let sum: f64 = (0..n).map(|j| weight[i][j] * rank[j]).sum();
                reset + (1.0 - reset) * sum
            })
            .collect();
        rank = next;
    }
    ids.iter().map(|&v| (v, rank[pos[&v]])).collect()
}

pub struct UnionFind {
    parent: HashMap<VertexId, VertexId>,
}

impl UnionFind {
    pub fn new(ids: impl IntoIterator<Item = VertexId>) -> Self {
        UnionFind {
            parent: ids.into_iter().map(|v| (v, v)).collect(),
        }
    }

    pub fn find(&mut self, v: VertexId) -> VertexId {
        let p = self.parent[&v];
        if p == v {
            return v;
        }
        let root = self.find(p);
        self.parent.insert(v, root);
        root
    }

    /// Keeps the smaller id as root so roots are component minima.
    pub fn union(&mut self, a: VertexId, b: VertexId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra < rb {
            self.parent.insert(rb, ra);
        } else if rb < ra {
            self.parent.insert(ra, rb);
        }
    }
}

/// Minimum id of every vertex's weakly connected component.
pub fn component_minima(
    ids: &[VertexId],
    edges: &[(VertexId, VertexId)],
) -> BTreeMap<VertexId, VertexId> {
    let mut uf = UnionFind::new(ids.iter().copied());
    for (s, d) in edges {
        uf.union(*s, *d);
    }
    ids.iter().map(|&v| (v, uf.find(v))).collect()
}

/// Contracts the edges satisfying `pred`, folds attributes per component
/// with `reduce` (in ascending member id order) and relinks the rest.
pub fn contraction_oracle<V: Clone, E: Clone>(
    vertices: &[(VertexId, V)],
    edges: &[(VertexId, VertexId, E)],
    pred: impl Fn(&E) -> bool,
    reduce: impl Fn(&V, &V) -> V,
) -> (BTreeMap<VertexId, V>, Vec<(VertexId, VertexId, E)>) {
    let mut uf = UnionFind::new(vertices.iter().map(|(v, _)| *v));
    for (s, d, e) in edges {
        if pred(e) {
            uf.union(*s, *d);
        }
    }
    let mut members: BTreeMap<VertexId, Vec<(VertexId, V)>> = BTreeMap::new();
    for (v, a) in vertices {
        members
            .entry(uf.find(*v))
            .or_default()
            .push((*v, a.clone()));
    }
    let supers = members
        .into_iter()
        .map(|(root, mut list)| {
            list.sort_by_key(|(v, _)| *v);
            let mut acc = list[0].1.clone();
            for (_, a) in &list[1..] {
                acc = reduce(&acc, a);
            }
            (root, acc)
        })
        .collect();
    let rest = edges
        .iter()
        .filter(|(_, _, e)| !pred(e))
        .map(|(s, d, e)| (uf.find(*s), uf.find(*d), e.clone()))
        .collect();
    (supers, rest)
}

/// `(vertex, edge partition)` pairs with an incident edge, by enumeration.
pub fn routing_pairs(parts: &[Vec<(VertexId, VertexId)>]) -> BTreeSet<(VertexId, usize)> {
    let mut out = BTreeSet::new();
    for (e, list) in parts.iter().enumerate() {
        for (s, d) in list {
            out.insert((*s, e));
            out.insert((*d, e));
        }
    }
    out
}
