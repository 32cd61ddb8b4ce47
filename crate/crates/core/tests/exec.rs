mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use graphene_core::algo::connected_components;
use graphene_core::exec::{choose_scan, incremental_update, materialize_view, plan_join};
use graphene_core::meter;
use graphene_core::partition::PartitionerKind;
use graphene_core::{
    AccessSpec, Collection, Config, Error, JoinPlan, ScanMode, ScanStrategy, SkipStale, VertexId,
};
use rand::Rng;

fn cfg() -> Config {
    config(4, PartitionerKind::Random1D, 5)
}

#[test]
fn view_without_reads_is_empty() {
    let mut r = rng(1);
    let (vs, es) = random_graph(&mut r, 50, 200);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let before = rt.meter().bytes_for(meter::VERTEX_VIEW);
    let view = materialize_view(&g, AccessSpec::NONE).unwrap();
    assert_eq!(view.shipped_bytes(), 0);
    assert_eq!(rt.meter().bytes_for(meter::VERTEX_VIEW), before);
    assert!(view.mirrors().iter().all(|m| m.is_empty()));
}

#[test]
fn source_view_ships_distinct_sources_per_partition() {
    let mut r = rng(2);
    let (vs, es) = random_graph(&mut r, 80, 1000);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let view = materialize_view(&g, AccessSpec::SRC).unwrap();
    let expected: usize = g
        .edge_partitions()
        .iter()
        .map(|p| p.iter().map(|(s, _, _)| s).collect::<BTreeSet<_>>().len())
        .sum();
    assert_eq!(view.shipped_tuples() as usize, expected);
}

#[test]
fn full_view_ships_every_routed_pair() {
    let mut r = rng(3);
    let (vs, es) = random_graph(&mut r, 100, 1000);
    let rt = runtime(config(4, PartitionerKind::Hash2D, 9));
    let g = build(&rt, &vs, &es, 0);
    let before = rt.meter().bytes_for(meter::VERTEX_VIEW);
    let view = materialize_view(&g, AccessSpec::BOTH).unwrap();
    let parts: Vec<Vec<(VertexId, VertexId)>> = g
        .edge_partitions()
        .iter()
        .map(|p| p.iter().map(|(s, d, _)| (s, d)).collect())
        .collect();
    assert_eq!(view.shipped_tuples() as usize, routing_pairs(&parts).len());
    assert_eq!(
        rt.meter().bytes_for(meter::VERTEX_VIEW) - before,
        view.shipped_bytes()
    );
    let attrs: BTreeMap<VertexId, i64> = vs.iter().copied().collect();
    for (e, p) in g.edge_partitions().iter().enumerate() {
        let s = p.structure();
        for (local, id) in s.local_ids().iter().enumerate() {
            assert_eq!(view.mirrors()[e].get(local), Some(&attrs[id]));
        }
    }
}

#[test]
fn incremental_update_ships_only_changes() {
    let mut r = rng(4);
    let (vs, es) = random_graph(&mut r, 100, 500);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let full = materialize_view(&g, AccessSpec::BOTH).unwrap();
    let none: Vec<_> = g
        .vertex_partitions()
        .iter()
        .map(|p| fixedbitset::FixedBitSet::with_capacity(p.slots()))
        .collect();
    let idle = incremental_update(&full, &g, &none).unwrap();
    assert_eq!(idle.shipped_bytes(), 0);
    assert!(idle
        .mirrors()
        .iter()
        .all(|m| m.changed().count_ones(..) == 0));
    for (a, b) in idle.mirrors().iter().zip(full.mirrors()) {
        assert_eq!(a.len(), b.len());
    }
    let all: Vec<_> = g
        .vertex_partitions()
        .iter()
        .map(|p| {
            let mut b = fixedbitset::FixedBitSet::with_capacity(p.slots());
            b.insert_range(..);
            b
        })
        .collect();
    let again = incremental_update(&full, &g, &all).unwrap();
    assert_eq!(again.shipped_bytes(), full.shipped_bytes());
    // a view of another epoch is rebuilt from scratch
    let other = g.reindex().unwrap();
    let rebuilt = incremental_update(&full, &other, &none).unwrap();
    assert_eq!(rebuilt.epoch(), other.index_epoch());
    assert_eq!(rebuilt.shipped_tuples(), full.shipped_tuples());
}

/// Applies the same sequence of vertex updates with incremental maintenance
/// on and off; every aggregation must agree.
#[test]
fn incremental_equals_full_rebuild() {
    for seed in 0..10 {
        let mut r = rng(400 + seed);
        let (vs, es) = random_graph(&mut r, 60, 300);
        let on = runtime(cfg());
        let off = runtime(Config {
            incremental: false,
            ..cfg()
        });
        let mut ga = build(&on, &vs, &es, 0);
        let mut gb = build(&off, &vs, &es, 0);
        for step in 0..6 {
            let send = |t: &graphene_core::Triplet<'_, i64, i64>| {
                (Some(*t.dst_attr()), Some(*t.src_attr() + *t.attr()))
            };
            let a = ga
                .mr_triplets(
                    AccessSpec::BOTH,
                    send,
                    |x, y| x.max(y).to_owned(),
                    SkipStale::None,
                )
                .unwrap();
            let b = gb
                .mr_triplets(
                    AccessSpec::BOTH,
                    send,
                    |x, y| x.max(y).to_owned(),
                    SkipStale::None,
                )
                .unwrap();
            assert_eq!(sorted(&a), sorted(&b), "seed {seed} step {step}");
            let picked: Vec<(VertexId, i64)> = vs
                .iter()
                .filter_map(|(id, _)| r.gen_bool(0.2).then_some(*id))
                .map(|id| (id, step))
                .collect();
            let ta = Collection::from_vec(&on, picked.clone());
            let tb = Collection::from_vec(&off, picked);
            ga = ga.join_vertices(&ta, |_, v, u| v + u + 1).unwrap();
            gb = gb.join_vertices(&tb, |_, v, u| v + u + 1).unwrap();
        }
        assert!(
            on.meter().bytes_for(meter::VERTEX_VIEW) < off.meter().bytes_for(meter::VERTEX_VIEW)
        );
    }
}

#[test]
fn cc_on_path_ships_less_as_it_converges() {
    let rt = runtime(cfg());
    let vs: Vec<(VertexId, ())> = (0..10).map(|i| (i, ())).collect();
    let es: Vec<(VertexId, VertexId, ())> = (0..9).map(|i| (i, i + 1, ())).collect();
    let g = build(&rt, &vs, &es, ());
    rt.meter().reset();
    let (cc, stats) = connected_components(&g).unwrap();
    assert!(cc.vertices().iter().all(|(_, c)| c.0 == 0));
    let changed: Vec<u64> = stats.iterations.iter().map(|s| s.changed).collect();
    assert!(
        changed.windows(2).skip(1).all(|w| w[1] <= w[0]),
        "{changed:?}"
    );
    let bytes: Vec<u64> = rt
        .meter()
        .series(meter::VERTEX_VIEW)
        .into_iter()
        .map(|r| r.bytes)
        .collect();
    assert!(bytes.windows(2).all(|w| w[1] <= w[0]), "{bytes:?}");
}

#[test]
fn join_plans_follow_declared_access() {
    assert_eq!(plan_join(AccessSpec::SRC), JoinPlan::TwoWaySrc);
    assert_eq!(plan_join(AccessSpec::NONE), JoinPlan::NoJoin);
    assert_eq!(plan_join(AccessSpec::BOTH), JoinPlan::ThreeWay);
    assert_eq!(plan_join(AccessSpec::DST), JoinPlan::TwoWayDst);
}

#[test]
fn verification_catches_undeclared_reads() {
    let mut r = rng(5);
    let (vs, es) = random_graph(&mut r, 20, 50);
    let rt = runtime(Config {
        verify_access: true,
        ..cfg()
    });
    let g = build(&rt, &vs, &es, 0);
    let bad = g.mr_triplets(
        AccessSpec::SRC,
        |t| (None, Some(*t.dst_attr())),
        |a, b| a + b,
        SkipStale::None,
    );
    assert_eq!(bad.unwrap_err(), Error::UndeclaredAccess { side: "dst" });
    let bad = g.map_e(AccessSpec::NONE, |t| *t.src_attr());
    assert_eq!(bad.unwrap_err(), Error::UndeclaredAccess { side: "src" });
    let good = g.mr_triplets(
        AccessSpec::SRC,
        |t| (None, Some(*t.src_attr())),
        |a, b| a + b,
        SkipStale::None,
    );
    assert!(good.is_ok());
}

#[test]
#[should_panic(expected = "not declared")]
fn undeclared_read_panics_without_verification() {
    let rt = runtime(cfg());
    let g = build(&rt, &[(1, 1i64), (2, 2)], &[(1, 2, 0i64)], 0);
    let _ = g.mr_triplets(
        AccessSpec::SRC,
        |t| (None, Some(*t.dst_attr())),
        |a, b| a + b,
        SkipStale::None,
    );
}

#[test]
fn plans_agree_on_results() {
    for seed in 0..5 {
        let mut r = rng(500 + seed);
        let (vs, es) = random_graph(&mut r, 50, 300);
        let mut outs = Vec::new();
        for (join_elimination, verify_access) in [(true, false), (false, false), (true, true)] {
            let rt = runtime(Config {
                join_elimination,
                verify_access,
                ..cfg()
            });
            let g = build(&rt, &vs, &es, 0);
            let src = g
                .mr_triplets(
                    AccessSpec::SRC,
                    |t| (None, Some(*t.src_attr())),
                    |a, b| a + b,
                    SkipStale::None,
                )
                .unwrap();
            let dst = g
                .mr_triplets(
                    AccessSpec::DST,
                    |t| (Some(*t.dst_attr()), None),
                    |a, b| a + b,
                    SkipStale::None,
                )
                .unwrap();
            let none = g
                .mr_triplets(
                    AccessSpec::NONE,
                    |t| (Some(*t.attr()), None),
                    |a, b| a + b,
                    SkipStale::None,
                )
                .unwrap();
            outs.push((sorted(&src), sorted(&dst), sorted(&none)));
        }
        assert!(outs.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn degree_count_ships_no_vertex_data() {
    let mut r = rng(6);
    let (vs, es) = random_graph(&mut r, 50, 300);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let before = rt.meter().bytes_for(meter::VERTEX_VIEW);
    let (_, stats) = g
        .try_mr_triplets(
            AccessSpec::NONE,
            |_| Ok((None, Some(1u64))),
            |a, b| a + b,
            SkipStale::None,
        )
        .unwrap();
    assert_eq!(stats.plan, JoinPlan::NoJoin);
    assert_eq!(stats.view_bytes, 0);
    assert_eq!(rt.meter().bytes_for(meter::VERTEX_VIEW), before);
}

#[test]
fn scan_choice_is_a_threshold() {
    let s = ScanStrategy::default();
    assert_eq!(choose_scan(0.79, &s), ScanMode::VertexIndexScan);
    assert_eq!(choose_scan(0.8, &s), ScanMode::SequentialEdgeScan);
    assert_eq!(choose_scan(1.0, &s), ScanMode::SequentialEdgeScan);
    let mut r = rng(7);
    for _ in 0..1000 {
        let f: f64 = r.gen();
        let t: f64 = r.gen();
        let s = ScanStrategy {
            threshold: t,
            ..ScanStrategy::default()
        };
        assert_eq!(choose_scan(f, &s) == ScanMode::VertexIndexScan, f < t);
    }
}

fn forced(mode: ScanMode) -> Config {
    Config {
        scan: ScanStrategy::forced(mode),
        ..cfg()
    }
}

/// Updates a random subset, then aggregates with each skip direction under
/// both scan modes; results must equal the oracle restricted to the edges
/// the direction keeps.
#[test]
fn skip_stale_under_both_scans_matches_subset_oracle() {
    for seed in 0..10 {
        let mut r = rng(600 + seed);
        let (vs, es) = random_graph(&mut r, 60, 400);
        let changed: BTreeSet<VertexId> = vs
            .iter()
            .filter_map(|(id, _)| r.gen_bool(0.3).then_some(*id))
            .collect();
        let updated: Vec<(VertexId, i64)> = vs
            .iter()
            .map(|(id, v)| (*id, if changed.contains(id) { v + 100 } else { *v }))
            .collect();
        for skip in [
            SkipStale::None,
            SkipStale::Out,
            SkipStale::In,
            SkipStale::Both,
            SkipStale::Either,
        ] {
            let keep =
                |s: &VertexId, d: &VertexId| skip.keeps(changed.contains(s), changed.contains(d));
            let subset: Vec<_> = es.iter().filter(|(s, d, _)| keep(s, d)).copied().collect();
            let expected = mr_oracle(
                &updated,
                &subset,
                |_, a, e, _, b| (Some(a * 3 + e), Some(b - e)),
                |x, y| x + y,
            );
            for mode in [ScanMode::SequentialEdgeScan, ScanMode::VertexIndexScan] {
                let rt = runtime(forced(mode));
                let g = build(&rt, &vs, &es, 0);
                // ship everything once so the next shipment carries only changes
                g.mr_triplets(
                    AccessSpec::BOTH,
                    |_| (None::<i64>, None),
                    |a, _| *a,
                    SkipStale::None,
                )
                .unwrap();
                let t = Collection::from_vec(&rt, changed.iter().map(|&id| (id, 100i64)).collect());
                let g = g.join_vertices(&t, |_, v, u| v + u).unwrap();
                let (out, stats) = g
                    .try_mr_triplets(
                        AccessSpec::BOTH,
                        |t| {
                            Ok((
                                Some(t.src_attr() * 3 + t.attr()),
                                Some(t.dst_attr() - t.attr()),
                            ))
                        },
                        |x, y| x + y,
                        skip,
                    )
                    .unwrap();
                assert!(stats.scan.iter().all(|m| *m == mode));
                let got: BTreeMap<_, _> = out.to_vec().into_iter().collect();
                assert_eq!(got, expected, "seed {seed} skip {skip:?} mode {mode:?}");
            }
        }
    }
}

#[test]
fn all_changed_makes_skip_stale_a_no_op() {
    let mut r = rng(8);
    let (vs, es) = random_graph(&mut r, 60, 300);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let send =
        |t: &graphene_core::Triplet<'_, i64, i64>| (Some(*t.src_attr()), Some(*t.dst_attr()));
    let base = sorted(
        &g.mr_triplets(AccessSpec::BOTH, send, |a, b| a + b, SkipStale::None)
            .unwrap(),
    );
    for skip in [
        SkipStale::Out,
        SkipStale::In,
        SkipStale::Both,
        SkipStale::Either,
    ] {
        // a fresh graph has no view, so every vertex counts as changed
        let fresh = g.map_v(|_, v| *v);
        let out = fresh
            .mr_triplets(AccessSpec::BOTH, send, |a, b| a + b, skip)
            .unwrap();
        assert_eq!(sorted(&out), base, "{skip:?}");
    }
}

#[test]
fn auto_scan_switches_with_activity() {
    let mut r = rng(9);
    let (vs, es) = random_graph(&mut r, 200, 1000);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    let (_, first) = g
        .try_mr_triplets(
            AccessSpec::BOTH,
            |_| Ok((None::<u8>, None)),
            |a, _| *a,
            SkipStale::Out,
        )
        .unwrap();
    assert!(first
        .scan
        .iter()
        .all(|m| *m == ScanMode::SequentialEdgeScan));
    let few = Collection::from_vec(&rt, vs.iter().take(10).map(|(id, _)| (*id, 1i64)).collect());
    let h = g.join_vertices(&few, |_, v, u| v + u).unwrap();
    assert_eq!(h.planned_scan(SkipStale::Out), ScanMode::VertexIndexScan);
    let (_, second) = h
        .try_mr_triplets(
            AccessSpec::BOTH,
            |_| Ok((None::<u8>, None)),
            |a, _| *a,
            SkipStale::Out,
        )
        .unwrap();
    assert!(second.active_fraction < 0.8);
    assert!(second.scan.iter().all(|m| *m == ScanMode::VertexIndexScan));
    assert!(second.triplets < first.triplets);
}

#[test]
fn metered_bytes_equal_block_lengths() {
    let mut r = rng(10);
    let (vs, es) = random_graph(&mut r, 100, 500);
    let rt = runtime(cfg());
    let g = build(&rt, &vs, &es, 0);
    rt.meter().reset();
    let view = materialize_view(&g, AccessSpec::BOTH).unwrap();
    assert_eq!(
        rt.meter().bytes_for(meter::VERTEX_VIEW),
        view.shipped_bytes()
    );
    // recompute the blocks independently from the routing tables
    let mut expected = 0u64;
    for p in g.vertex_partitions() {
        for e in 0..g.edge_partitions().len() {
            let bits = p.routing().bitmap(e);
            let tuples: Vec<(VertexId, &i64)> = bits
                .ones()
                .filter(|s| p.is_visible(*s))
                .map(|s| (p.index().id(s), p.get(p.index().id(s)).unwrap()))
                .collect();
            if !tuples.is_empty() {
                expected += graphene_core::wire::encode_vertex_block(tuples).len() as u64;
            }
        }
    }
    assert_eq!(view.shipped_bytes(), expected);
}
