use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roomsmith::corrector::correct_graph;
use roomsmith::scene::{
    Adjacency::*, ObjectNode, Preposition::*, Room, Rotation, SceneGraph, Size3, Vec3,
};
use roomsmith::solver::{
    cluster_containment_violations, compute_cluster_extents, feasible_region, solve_layout,
    verify_layout, Placement, SolveError, SolverConfig,
};
use roomsmith_testkit::oracle::{bounds, Centers};
use roomsmith_testkit::{random_graph, GraphParams, Oracle, Verdict};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-6
}

fn centimeter_oracle() -> Oracle {
    Oracle {
        step: 0.01,
        ..Oracle::default()
    }
}

fn bed_graph() -> SceneGraph {
    SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("bed_1", "bed", Size3::new(2.0, 1.6, 0.5)))
        .with_edge("middle_of_room", "bed_1", On, Adjacent)
}

#[test]
fn bed_region_in_middle_band() {
    let g = compute_cluster_extents(&bed_graph(), &SolverConfig::default()).unwrap();
    let r = feasible_region("bed_1", &g, &BTreeMap::new(), &SolverConfig::default()).unwrap();
    let oracle = centimeter_oracle();
    let cands = oracle.candidates(&g, &oracle.cluster_extents(&g), "bed_1", &Centers::new());
    let b = bounds(&cands).unwrap();
    for (iv, (lo, hi)) in [r.x, r.y, r.z].iter().zip(b) {
        assert!(close(iv.lo, lo) && close(iv.hi, hi), "{iv:?} vs ({lo}, {hi})");
    }
    assert!(close(r.x.lo, 1.0) && close(r.x.hi, 3.0));
    assert!(close(r.y.lo, 0.8) && close(r.y.hi, 2.2));
    assert!(close(r.z.lo, 0.25) && close(r.z.hi, 0.25));
}

#[test]
fn chair_region_against_placed_table() {
    let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("table_1", "table", Size3::new(1.6, 0.9, 0.75)))
        .with_node(ObjectNode::new("chair_1", "chair", Size3::new(0.5, 0.5, 0.9)))
        .with_edge("floor", "table_1", On, Adjacent)
        .with_edge("table_1", "chair_1", LeftOf, Adjacent);
    let cfg = SolverConfig::default();
    let g = compute_cluster_extents(&g, &cfg).unwrap();
    let mut partial = BTreeMap::new();
    partial.insert(
        "table_1".to_string(),
        Placement {
            position: Vec3::new(2.0, 1.5, 0.375),
            rotation: Rotation::Deg0,
        },
    );
    let r = feasible_region("chair_1", &g, &partial, &cfg).unwrap();
    assert!(close(r.x.lo, 0.95) && close(r.x.hi, 0.95), "{r:?}");
    assert!(close(r.y.lo, 1.3) && close(r.y.hi, 1.7));
    assert!(close(r.z.lo, 0.45) && close(r.z.hi, 0.45));

    let oracle = centimeter_oracle();
    let mut placed = Centers::new();
    placed.insert("table_1".into(), [2.0, 1.5, 0.375]);
    let cands = oracle.candidates(&g, &oracle.cluster_extents(&g), "chair_1", &placed);
    let b = bounds(&cands).unwrap();
    assert!(close(b[0].0, 0.95) && close(b[0].1, 0.95));
    assert!(close(b[1].0, 1.3) && close(b[1].1, 1.7));
    assert!(close(b[2].0, 0.45) && close(b[2].1, 0.45));
}

#[test]
fn wardrobe_wider_than_room_has_empty_region() {
    let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("wardrobe_1", "wardrobe", Size3::new(4.5, 0.6, 2.0)))
        .with_edge("wall_north", "wardrobe_1", On, Adjacent);
    let r = feasible_region("wardrobe_1", &g, &BTreeMap::new(), &SolverConfig::default()).unwrap();
    assert!(r.is_empty());
}

#[test]
fn region_requires_placed_parents() {
    let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("desk_1", "desk", Size3::new(1.2, 0.6, 0.75)))
        .with_node(ObjectNode::new("lamp_1", "lamp", Size3::new(0.2, 0.2, 0.4)))
        .with_edge("floor", "desk_1", On, Adjacent)
        .with_edge("desk_1", "lamp_1", On, Adjacent);
    let err = feasible_region("lamp_1", &g, &BTreeMap::new(), &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, SolveError::ParentUnplaced { .. }));
}

#[test]
fn cluster_extents_of_table_and_chair() {
    let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("table_1", "table", Size3::new(1.6, 0.9, 0.75)))
        .with_node(ObjectNode::new("chair_1", "chair", Size3::new(0.5, 0.5, 0.9)))
        .with_edge("floor", "table_1", On, Adjacent)
        .with_edge("table_1", "chair_1", LeftOf, Adjacent);
    let annotated = compute_cluster_extents(&g, &SolverConfig::default()).unwrap();
    let cs = annotated.node("table_1").unwrap().cluster_extents.unwrap();
    let expect = Oracle::default().cluster_extents(&g)["table_1"];
    assert_eq!(expect.map(|v| (v * 1e6).round() / 1e6), [1.3, 0.8, 0.45, 0.45]);
    assert!(close(cs.x_neg, expect[0]) && close(cs.x_pos, expect[1]));
    assert!(close(cs.y_neg, expect[2]) && close(cs.y_pos, expect[3]));
}

#[test]
fn nested_stack_adds_nothing_to_desk_extents() {
    let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("desk_1", "desk", Size3::new(1.4, 0.7, 0.75)))
        .with_node(ObjectNode::new("monitor_1", "monitor", Size3::new(0.6, 0.2, 0.4)))
        .with_node(ObjectNode::new("figurine_1", "figurine", Size3::new(0.1, 0.1, 0.1)))
        .with_edge("floor", "desk_1", On, Adjacent)
        .with_edge("desk_1", "monitor_1", On, Adjacent)
        .with_edge("monitor_1", "figurine_1", On, Adjacent);
    let annotated = compute_cluster_extents(&g, &SolverConfig::default()).unwrap();
    let cs = annotated.node("desk_1").unwrap().cluster_extents.unwrap();
    let expect = Oracle::default().cluster_extents(&g)["desk_1"];
    for (got, want) in [cs.x_neg, cs.x_pos, cs.y_neg, cs.y_pos].into_iter().zip(expect) {
        assert!(close(got, want));
    }
    assert!(close(cs.x_neg, 0.7) && close(cs.x_pos, 0.7) && close(cs.y_neg, 0.35) && close(cs.y_pos, 0.35));
}

#[test]
fn solved_layouts_verify_and_repeat() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolverConfig::default();
    let mut solved = 0;
    for seed in 0..40 {
        let g = correct_graph(&random_graph(&mut rng, &GraphParams::rooms()), None, None).graph;
        let cfg = cfg.clone().with_seed(seed);
        let first = solve_layout(&g, &cfg);
        let second = solve_layout(&g, &cfg);
        assert_eq!(first, second);
        if let Ok(layout) = first {
            solved += 1;
            assert_eq!(layout.to_json(), second.unwrap().to_json());
            let defects = verify_layout(&g, &layout, &cfg);
            assert!(defects.is_empty(), "{defects:?}");
            let annotated = compute_cluster_extents(&g, &cfg).unwrap();
            assert!(cluster_containment_violations(&annotated, &layout).is_empty());
        }
    }
    println!("solved {solved} of 40");
    assert!(solved >= 20, "only {solved} of 40 solved");
}

#[test]
fn small_graphs_agree_with_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SolverConfig {
        samples_per_object: 5000,
        max_backtracks: 5000,
        position_quantum: 0.05,
        ..SolverConfig::default()
    };
    let oracle = Oracle {
        node_budget: 200_000,
        ..Oracle::default()
    };
    let mut decided = 0;
    while decided < 10 {
        let g = random_graph(&mut rng, &GraphParams::small());
        let expect = match oracle.solve(&g) {
            Verdict::Sat(_) => true,
            Verdict::Unsat => false,
            Verdict::Unknown => continue,
        };
        decided += 1;
        assert_eq!(solve_layout(&g, &cfg).is_ok(), expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cluster_extents_match_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, &GraphParams::small());
        let annotated = compute_cluster_extents(&g, &SolverConfig::default()).unwrap();
        let expect = Oracle::default().cluster_extents(&g);
        for n in &annotated.nodes {
            let w = n.cluster_extents.unwrap().to_world(n.rotation);
            let e = expect[&n.id];
            prop_assert!(close(w.x_neg, e[0]) && close(w.x_pos, e[1]), "{}: {:?} vs {:?}", n.id, w, e);
            prop_assert!(close(w.y_neg, e[2]) && close(w.y_pos, e[3]), "{}: {:?} vs {:?}", n.id, w, e);
        }
    }

    #[test]
    fn regions_match_grid_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, &GraphParams::small());
        let cfg = SolverConfig { position_quantum: 0.05, ..SolverConfig::default() };
        let Ok(layout) = solve_layout(&g, &cfg) else { return Ok(()) };
        let annotated = compute_cluster_extents(&g, &cfg).unwrap();
        let oracle = Oracle::default();
        let cs = oracle.cluster_extents(&g);
        let placed: Centers = layout
            .placements
            .iter()
            .map(|(k, p)| (k.clone(), [p.position.x, p.position.y, p.position.z]))
            .collect();
        for n in &g.nodes {
            let region = feasible_region(&n.id, &annotated, &layout.placements, &cfg).unwrap();
            let b = bounds(&oracle.candidates(&g, &cs, &n.id, &placed)).unwrap();
            for (iv, (lo, hi)) in [region.x, region.y, region.z].iter().zip(b) {
                prop_assert!(close(iv.lo, lo) && close(iv.hi, hi), "{}: {:?} vs ({}, {})", n.id, iv, lo, hi);
            }
        }
    }

    #[test]
    fn backtracks_never_clear_before_failing_level(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, &GraphParams::rooms());
        let stats = match solve_layout(&g, &SolverConfig::default().with_seed(seed)) {
            Ok(l) => l.stats,
            Err(SolveError::Unsat(r)) => r.partial.stats,
            Err(e) => panic!("{e}"),
        };
        for e in stats.events {
            prop_assert!(e.cleared_from_level >= e.failing_level);
        }
    }
}
