mod common;

use std::collections::BTreeMap;

use common::*;
use graphene_core::algo::{
    coarsen, connected_components, connected_components_with, page_rank, page_rank_graph,
    page_rank_tolerance, pregel, senior_neighbor_count, ComponentId, ComponentsProgram,
    DeltaPageRank, PregelProgram,
};
use graphene_core::partition::PartitionerKind;
use graphene_core::{AccessSpec, Config, Error, SkipStale, Triplet, VertexId};
use rand::Rng;

fn cfg() -> Config {
    config(4, PartitionerKind::Random1D, 4)
}

fn ranks(c: &graphene_core::Collection<VertexId, f64>) -> BTreeMap<VertexId, f64> {
    c.to_vec().into_iter().collect()
}

fn labels<E: graphene_core::Data>(
    g: &graphene_core::PropertyGraph<graphene_core::algo::ComponentId, E>,
) -> BTreeMap<VertexId, VertexId> {
    g.vertices()
        .to_vec()
        .into_iter()
        .map(|(v, c)| (v, c.0))
        .collect()
}

#[test]
fn lone_vertex_rank_is_reset() {
    let rt = runtime(cfg());
    let g = build::<(), ()>(&rt, &[(1, ())], &[], ());
    let r = ranks(&page_rank(&g, 1, 0.15).unwrap());
    assert!((r[&1] - 0.15).abs() < 1e-15);
}

#[test]
fn two_cycle_ranks_stay_equal() {
    let rt = runtime(cfg());
    let g = build(&rt, &[(1, ()), (2, ())], &[(1, 2, ()), (2, 1, ())], ());
    for it in 0..5 {
        let r = ranks(&page_rank(&g, it, 0.15).unwrap());
        assert_eq!(r[&1], r[&2]);
    }
}

#[test]
fn page_rank_matches_dense_power_iteration() {
    for seed in 0..10 {
        let mut r = rng(700 + seed);
        let (vs, es) = random_graph(&mut r, 100, 500);
        let rt = runtime(cfg());
        let g = build(&rt, &vs, &es, 0);
        let got = ranks(&page_rank(&g, 20, 0.15).unwrap());
        let ids: Vec<VertexId> = vs.iter().map(|v| v.0).collect();
        let pairs: Vec<_> = es.iter().map(|(s, d, _)| (*s, *d)).collect();
        let expected = dense_page_rank(&ids, &pairs, 20, 0.15);
        for (id, want) in expected {
            assert!((got[&id] - want).abs() < 1e-10, "seed {seed} vertex {id}");
        }
    }
}

#[test]
fn page_rank_mass_follows_the_recurrence() {
    let mut r = rng(11);
    // a ring guarantees every vertex has an out-edge
    let n = 50u64;
    let mut es: Vec<(VertexId, VertexId, ())> = (0..n).map(|i| (i, (i + 1) % n, ())).collect();
    for _ in 0..100 {
        es.push((r.gen_range(0..n), r.gen_range(0..n), ()));
    }
    let vs: Vec<(VertexId, ())> = (0..n).map(|i| (i, ())).collect();
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, ());
    let mut prev = n as f64;
    for it in 1..8 {
        let total: f64 = page_rank(&g, it, 0.15).unwrap().iter().map(|t| t.1).sum();
        let want = n as f64 * 0.15 + 0.85 * prev;
        assert!((total - want).abs() < 1e-9);
        prev = total;
    }
}

#[test]
fn page_rank_rejects_bad_reset() {
    let rt = runtime(cfg());
    let g = build::<(), ()>(&rt, &[(1, ())], &[], ());
    assert!(matches!(page_rank(&g, 1, 1.5), Err(Error::Config(_))));
    assert!(matches!(page_rank(&g, 1, 0.0), Err(Error::Config(_))));
}

#[test]
fn page_rank_uses_the_source_only_plan() {
    let mut r = rng(12);
    let (vs, es) = random_graph(&mut r, 50, 200);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let pg = page_rank_graph(&g, 1, 0.15).unwrap();
    let (_, stats) = pg
        .try_mr_triplets(
            AccessSpec::SRC,
            |t| Ok((None, Some(t.src_attr().rank))),
            |a, b| a + b,
            SkipStale::None,
        )
        .unwrap();
    assert_eq!(stats.plan, graphene_core::JoinPlan::TwoWaySrc);
    assert_eq!(stats.shipped_sides, AccessSpec::SRC);
}

#[test]
fn tolerance_page_rank_skip_is_exact_and_close_to_fixed_point() {
    for seed in 0..5 {
        let mut r = rng(800 + seed);
        let (vs, es) = random_graph(&mut r, 80, 400);
        let mut outs = Vec::new();
        for skip in [SkipStale::Out, SkipStale::None] {
            let rt = runtime(cfg());
            let g = build(&rt, &vs, &es, 0);
            let prog = DeltaPageRank {
                skip,
                tolerance: 1e-9,
                max_iterations: 500,
                ..DeltaPageRank::default()
            };
            let (pg, stats) = page_rank_tolerance(&g, &prog).unwrap();
            assert!(stats.rounds() < 500);
            let out: Vec<(VertexId, u64)> = pg
                .vertices()
                .to_vec()
                .into_iter()
                .map(|(v, s)| (v, s.rank.to_bits()))
                .collect();
            let mut out = out;
            out.sort();
            outs.push(out);
        }
        assert_eq!(outs[0], outs[1], "seed {seed}");
        let ids: Vec<VertexId> = vs.iter().map(|v| v.0).collect();
        let pairs: Vec<_> = es.iter().map(|(s, d, _)| (*s, *d)).collect();
        let fixed = dense_page_rank(&ids, &pairs, 300, 0.15);
        for (id, bits) in &outs[0] {
            assert!((f64::from_bits(*bits) - fixed[id]).abs() < 1e-6);
        }
    }
}

#[test]
fn components_of_small_graphs() {
    let rt = runtime(cfg());
    let edgeless = build::<(), ()>(&rt, &[(4, ()), (8, ())], &[], ());
    let (cc, stats) = connected_components(&edgeless).unwrap();
    assert_eq!(labels(&cc), BTreeMap::from([(4, 4), (8, 8)]));
    assert_eq!(stats.rounds(), 1);
    let pair = build(&rt, &[(5, ()), (9, ())], &[(5, 9, ()), (9, 5, ())], ());
    assert_eq!(
        labels(&connected_components(&pair).unwrap().0),
        BTreeMap::from([(5, 5), (9, 5)])
    );
    let path = build(
        &rt,
        &[(3, ()), (7, ()), (9, ())],
        &[(3, 7, ()), (9, 7, ())],
        (),
    );
    assert!(labels(&connected_components(&path).unwrap().0)
        .values()
        .all(|&c| c == 3));
}

#[test]
fn components_match_union_find() {
    for seed in 0..10 {
        let mut r = rng(900 + seed);
        let n = r.gen_range(1..500);
        let m = r.gen_range(0..n);
        let (vs, es) = random_graph(&mut r, n, m);
        let rt = runtime(cfg());
        let g = build(&rt, &vs, &es, 0);
        let ids: Vec<VertexId> = vs.iter().map(|v| v.0).collect();
        let pairs: Vec<_> = es.iter().map(|(s, d, _)| (*s, *d)).collect();
        let expected = component_minima(&ids, &pairs);
        let (cc, stats) = connected_components(&g).unwrap();
        assert_eq!(labels(&cc), expected, "seed {seed}");
        let changed: Vec<u64> = stats.iterations.iter().map(|s| s.changed).collect();
        assert!(changed.last() == Some(&0));
    }
}

/// Skipping edges with an unchanged source misses labels that must travel
/// against edge direction, unless every edge also appears reversed.
#[test]
fn out_skipping_needs_reversed_edges() {
    let rt = runtime(cfg());
    let vs: Vec<(VertexId, ())> = vec![(1, ()), (2, ()), (3, ())];
    let es = vec![(1, 3, ()), (2, 3, ())];
    let g = build(&rt, &vs, &es, ());
    let exact = BTreeMap::from([(1, 1), (2, 1), (3, 1)]);
    let raw = pregel(
        &g.map_v(|id, _| ComponentId(id)),
        &ComponentsProgram {
            skip: SkipStale::Out,
            ..ComponentsProgram::default()
        },
    )
    .unwrap()
    .0;
    assert_eq!(labels(&raw)[&2], 2);
    for skip in [
        SkipStale::None,
        SkipStale::Out,
        SkipStale::In,
        SkipStale::Either,
    ] {
        assert_eq!(
            labels(&connected_components_with(&g, skip).unwrap().0),
            exact,
            "{skip:?}"
        );
    }
}

struct HaltAll;

impl PregelProgram<()> for HaltAll {
    type State = bool;
    type Msg = u8;

    fn vprog(&self, _: VertexId, _: &bool, _: &u8) -> bool {
        unreachable!("no vertex is live")
    }

    fn send(&self, _: &Triplet<'_, bool, ()>) -> (Option<u8>, Option<u8>) {
        unreachable!("no vertex is live")
    }

    fn gather(&self, a: &u8, _: &u8) -> u8 {
        *a
    }

    fn halted(&self, s: &bool) -> bool {
        *s
    }
}

#[test]
fn pregel_with_everything_halted_does_nothing() {
    let rt = runtime(cfg());
    let g = build(&rt, &[(1, true), (2, true)], &[(1, 2, ())], true);
    let before = rt.meter().total_bytes();
    let (h, stats) = pregel(&g, &HaltAll).unwrap();
    assert_eq!(stats.rounds(), 0);
    assert_eq!(rt.meter().total_bytes(), before);
    assert_eq!(sorted(&h.vertices()), sorted(&g.vertices()));
}

#[test]
fn seniority_counts_older_neighbors() {
    let rt = runtime(cfg());
    let g = build(&rt, &[(1, 30u32), (2, 40)], &[(1, 2, ())], 0);
    assert_eq!(sorted(&senior_neighbor_count(&g).unwrap()), vec![(1, 1)]);
    let same = build(&rt, &[(1, 30u32), (2, 30)], &[(1, 2, ()), (2, 1, ())], 0);
    assert!(senior_neighbor_count(&same).unwrap().is_empty());
    let mut r = rng(13);
    let (vs, es) = random_graph(&mut r, 60, 200);
    let g = build(&rt, &vs, &es, 0);
    let mut expected: BTreeMap<VertexId, u64> = BTreeMap::new();
    let age: BTreeMap<VertexId, i64> = vs.iter().copied().collect();
    for (s, d, _) in &es {
        if age[s] > age[d] {
            *expected.entry(*d).or_default() += 1;
        } else if age[d] > age[s] {
            *expected.entry(*s).or_default() += 1;
        }
    }
    let got: BTreeMap<_, _> = senior_neighbor_count(&g)
        .unwrap()
        .to_vec()
        .into_iter()
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn coarsen_matches_contraction_oracle() {
    for seed in 0..8 {
        let mut r = rng(1000 + seed);
        let n = 50;
        let ids = ids(&mut r, n);
        let vs: Vec<(VertexId, u64)> = ids.iter().map(|&id| (id, r.gen_range(0..100))).collect();
        let es: Vec<(VertexId, VertexId, f64)> = (0..120)
            .map(|_| {
                (
                    ids[r.gen_range(0..n)],
                    ids[r.gen_range(0..n)],
                    r.gen::<f64>(),
                )
            })
            .collect();
        let rt = runtime(cfg());
        let g = build(&rt, &vs, &es, 0);
        let c = coarsen(&g, |t| *t.attr() < 0.5, |a, b| a + b).unwrap();
        let (supers, rest) = contraction_oracle(&vs, &es, |e| *e < 0.5, |a, b| a + b);
        let got_v: BTreeMap<_, _> = c.vertices().to_vec().into_iter().collect();
        assert_eq!(got_v, supers, "seed {seed}");
        let mut got_e: Vec<_> = c
            .edges()
            .to_vec()
            .into_iter()
            .map(|((s, d), e)| (s, d, e.to_bits()))
            .collect();
        got_e.sort();
        let mut want_e: Vec<_> = rest
            .into_iter()
            .map(|(s, d, e)| (s, d, e.to_bits()))
            .collect();
        want_e.sort();
        assert_eq!(got_e, want_e, "seed {seed}");
    }
}

#[test]
fn coarsen_extremes() {
    let mut r = rng(14);
    let (vs, es) = random_graph(&mut r, 30, 60);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let same = coarsen(&g, |_| false, |a, b| a + b).unwrap();
    assert_eq!(sorted(&same.vertices()), sorted(&g.vertices()));
    assert_eq!(sorted(&same.edges()), sorted(&g.edges()));
    let ring: Vec<(VertexId, VertexId, i64)> = (0..10).map(|i| (i, (i + 1) % 10, 0)).collect();
    let vs: Vec<(VertexId, i64)> = (0..10).map(|i| (i, i as i64)).collect();
    let g = build(&rt, &vs, &ring, 0);
    let all = coarsen(&g, |_| true, |a, b| a + b).unwrap();
    assert_eq!(sorted(&all.vertices()), vec![(0, 45)]);
    assert!(all.edges().is_empty());
}
