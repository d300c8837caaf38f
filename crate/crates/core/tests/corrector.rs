use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roomsmith::corrector::{
    break_cycles, correct_graph, detect_violations, refine_siblings, resolve_violations,
    sibling_groups, ViolationKind,
};
use roomsmith::scene::{
    cyclic_components, is_layout_id, validate_graph, validate_refined_graph, Adjacency, Edge, ObjectNode,
    Preposition, Room, SceneGraph, Size3,
};
use roomsmith_testkit::fixtures::{clean_graphs, violation_fixtures};
use roomsmith_testkit::{random_graph, GraphParams};

#[test]
fn every_fixture_is_detected() {
    let fixtures = violation_fixtures();
    let mut per_kind: BTreeMap<ViolationKind, usize> = BTreeMap::new();
    for f in &fixtures {
        assert!(validate_graph(&f.graph).is_empty(), "{} is malformed", f.name);
        let found = detect_violations(&f.graph);
        assert!(
            found.iter().any(|v| v.kind == f.kind && v.subject == f.subject),
            "{}: expected {}({}), got {found:?}",
            f.name,
            f.kind,
            f.subject
        );
        *per_kind.entry(f.kind).or_default() += 1;
    }
    assert_eq!(per_kind.len(), 4);
    assert!(per_kind.values().all(|&n| n >= 5), "{per_kind:?}");
}

#[test]
fn clean_graphs_have_no_violations() {
    let graphs = clean_graphs();
    assert_eq!(graphs.len(), 20);
    for (name, g) in &graphs {
        assert!(validate_refined_graph(g).is_empty(), "{name}: {:?}", validate_refined_graph(g));
        let v = detect_violations(g);
        assert!(v.is_empty(), "{name}: {v:?}");
    }
}

#[test]
fn context_ids_exist() {
    for f in violation_fixtures() {
        for v in detect_violations(&f.graph) {
            for id in v.context.iter().chain([&v.subject]) {
                assert!(is_layout_id(id) || f.graph.contains(id), "{}: {id}", f.name);
            }
        }
    }
}

#[test]
fn resolution_clears_every_fixture() {
    for f in violation_fixtures() {
        let found = detect_violations(&f.graph);
        let r = resolve_violations(&f.graph, &found, None);
        assert!(detect_violations(&r.graph).is_empty(), "{}", f.name);
        assert!(validate_refined_graph(&r.graph).is_empty(), "{}", f.name);
        assert!(!r.log.is_empty());
    }
}

#[test]
fn resolution_clears_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let g = random_graph(&mut rng, &GraphParams::rooms());
        let found = detect_violations(&g);
        let r = resolve_violations(&g, &found, None);
        assert!(detect_violations(&r.graph).is_empty());
        assert!(validate_refined_graph(&r.graph).is_empty());
    }
}

#[test]
fn worked_fallbacks() {
    let f = &violation_fixtures()[0];
    assert_eq!(f.name, "lamp_behind_wall_sofa");
    let r = resolve_violations(&f.graph, &detect_violations(&f.graph), None);
    assert!(r.graph.edges.contains(&Edge::new(
        "sofa_1",
        "lamp_1",
        Preposition::LeftOf,
        Adjacency::NotAdjacent
    )));

    let rug = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("rug_1", "rug", Size3::new(2.0, 1.4, 0.02)));
    let r = resolve_violations(&rug, &detect_violations(&rug), None);
    assert_eq!(
        r.graph.edges,
        vec![Edge::new("middle_of_room", "rug_1", Preposition::On, Adjacency::Adjacent)]
    );
}

#[test]
fn size_fallback_moves_highest_id_child_up() {
    let g = SceneGraph::new(Room::new(4.0, 3.0, 2.4))
        .with_node(ObjectNode::new("table_1", "table", Size3::new(1.0, 1.0, 0.75)))
        .with_node(ObjectNode::new("chair_1", "chair", Size3::new(0.6, 0.6, 0.9)))
        .with_node(ObjectNode::new("chair_2", "chair", Size3::new(0.6, 0.6, 0.9)))
        .with_edge("floor", "table_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("table_1", "chair_1", Preposition::LeftOf, Adjacency::Adjacent)
        .with_edge("table_1", "chair_2", Preposition::LeftOf, Adjacency::Adjacent);
    let found = detect_violations(&g);
    assert_eq!(found.len(), 1);
    let r = resolve_violations(&g, &found, None);
    assert!(!r.graph.edges.iter().any(|e| e.parent == "table_1" && e.child == "chair_2"));
    assert!(r
        .graph
        .edges
        .iter()
        .any(|e| e.parent == "floor" && e.child == "chair_2"));
}

#[test]
fn no_violations_means_identity() {
    for (_, g) in clean_graphs() {
        let r = resolve_violations(&g, &[], None);
        assert_eq!(r.graph, g);
        assert!(r.log.is_empty());
    }
}

fn pair_graph(edges: &[(&str, &str)]) -> SceneGraph {
    let mut ids = BTreeSet::new();
    for (a, b) in edges {
        ids.insert(*a);
        ids.insert(*b);
    }
    let mut g = SceneGraph::new(Room::new(4.0, 4.0, 2.5));
    for id in ids {
        g = g.with_node(ObjectNode::new(id, "thing", Size3::new(0.2, 0.2, 0.2)));
    }
    for (a, b) in edges {
        g = g.with_edge(*a, *b, Preposition::LeftOf, Adjacency::Adjacent);
    }
    g
}

#[test]
fn two_cycle_loses_one_edge() {
    let g = pair_graph(&[("a", "b"), ("b", "a")]);
    let (out, removed) = break_cycles(&g);
    assert_eq!(removed.len(), 1);
    assert!(validate_graph(&out).is_empty());
}

/// Independent acyclicity check by repeated source removal.
fn acyclic(edges: &[(usize, usize)], n: usize) -> bool {
    let mut indeg = vec![0; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &(a, b) in edges {
            if a == v {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    stack.push(b);
                }
            }
        }
    }
    seen == n
}

/// Smallest number of edges whose removal leaves the graph acyclic.
fn minimum_feedback_edges(edges: &[(usize, usize)], n: usize) -> usize {
    let m = edges.len();
    (0..m + 1)
        .find(|&k| {
            (0u32..1 << m).any(|mask| {
                mask.count_ones() as usize == k && {
                    let kept: Vec<_> = (0..m)
                        .filter(|i| mask & (1 << i) == 0)
                        .map(|i| edges[i])
                        .collect();
                    acyclic(&kept, n)
                }
            })
        })
        .expect("removing every edge is acyclic")
}

fn index_graph(edges: &[(usize, usize)]) -> SceneGraph {
    let names: Vec<String> = (0..8).map(|i| format!("n_{i}")).collect();
    let mut g = SceneGraph::new(Room::new(4.0, 4.0, 2.5));
    for name in &names {
        g = g.with_node(ObjectNode::new(name, "thing", Size3::new(0.2, 0.2, 0.2)));
    }
    for &(a, b) in edges {
        g = g.with_edge(&names[a], &names[b], Preposition::RightOf, Adjacency::Adjacent);
    }
    g
}

/// Vertex-disjoint cycles plus acyclic edges between them, at most six edges.
fn disjoint_cycles(rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut nodes: Vec<usize> = (0..8).collect();
    for i in (1..nodes.len()).rev() {
        nodes.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    while edges.len() < 6 && next + 2 <= nodes.len() {
        let len = rng.random_range(2..=3).min(6 - edges.len()).min(nodes.len() - next);
        if len < 2 {
            break;
        }
        let group = nodes[next..next + len].to_vec();
        next += len;
        for i in 0..len {
            edges.push((group[i], group[(i + 1) % len]));
        }
        groups.push(group);
        if rng.random_bool(0.3) {
            break;
        }
    }
    while edges.len() < 6 && groups.len() >= 2 && rng.random_bool(0.5) {
        let i = rng.random_range(0..groups.len() - 1);
        let j = rng.random_range(i + 1..groups.len());
        let a = groups[i][rng.random_range(0..groups[i].len())];
        let b = groups[j][rng.random_range(0..groups[j].len())];
        edges.push((a, b));
    }
    // Interleave insertion order.
    for i in (1..edges.len()).rev() {
        edges.swap(i, rng.random_range(0..=i));
    }
    edges
}

#[test]
fn cycle_breaking_is_minimal_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let edges = disjoint_cycles(&mut rng);
        let g = index_graph(&edges);
        let (out, removed) = break_cycles(&g);
        assert!(cyclic_components(&out).is_empty());
        assert_eq!(removed.len(), minimum_feedback_edges(&edges, 8), "{edges:?}");
    }
}

#[test]
fn desk_ornament_cycle_loses_one_ordering_edge() {
    let g = SceneGraph::new(Room::new(4.0, 4.0, 2.5))
        .with_node(ObjectNode::new("desk_1", "desk", Size3::new(1.4, 0.7, 0.75)))
        .with_node(ObjectNode::new("lamp_1", "lamp", Size3::new(0.2, 0.2, 0.45)))
        .with_node(ObjectNode::new("clock_1", "clock", Size3::new(0.15, 0.1, 0.15)))
        .with_node(ObjectNode::new("plant_1", "plant", Size3::new(0.2, 0.2, 0.3)))
        .with_edge("floor", "desk_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("desk_1", "lamp_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("desk_1", "clock_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("desk_1", "plant_1", Preposition::On, Adjacency::Adjacent)
        .with_edge("lamp_1", "clock_1", Preposition::RightOf, Adjacency::Adjacent)
        .with_edge("clock_1", "plant_1", Preposition::RightOf, Adjacency::Adjacent)
        .with_edge("plant_1", "lamp_1", Preposition::RightOf, Adjacency::Adjacent);
    let (out, removed) = break_cycles(&g);
    assert_eq!(removed.len(), 1);
    assert_eq!(removed[0].parent, "plant_1");
    assert!(validate_refined_graph(&out).is_empty());

    let ordering: Vec<(usize, usize)> = vec![(0, 1), (1, 2), (2, 0)];
    assert_eq!(minimum_feedback_edges(&ordering, 3), removed.len());
}

/// True when the edges restricted to `members` order them totally
/// (every pair comparable through paths inside the group).
fn strict_total_order(g: &SceneGraph, members: &[String]) -> bool {
    let set: BTreeSet<&str> = members.iter().map(String::as_str).collect();
    let mut reach: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for m in &set {
        let mut seen = BTreeSet::new();
        let mut stack = vec![*m];
        while let Some(v) = stack.pop() {
            for e in &g.edges {
                if e.parent == v && set.contains(e.child.as_str()) && seen.insert(e.child.as_str()) {
                    stack.push(e.child.as_str());
                }
            }
        }
        reach.insert(m, seen);
    }
    let irreflexive = set.iter().all(|m| !reach[m].contains(m));
    let total = set.iter().all(|a| {
        set.iter()
            .all(|b| a == b || reach[a].contains(b) || reach[b].contains(a))
    });
    irreflexive && total
}

#[test]
fn pipeline_output_is_clean_and_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..150 {
        let g = random_graph(&mut rng, &GraphParams::rooms());
        let report = correct_graph(&g, None, None);
        assert!(report.remaining.is_empty(), "{:?}", report.remaining);
        assert!(validate_refined_graph(&report.graph).is_empty());
        for group in sibling_groups(&report.graph) {
            assert!(strict_total_order(&report.graph, &group.children), "{group:?}");
        }
        assert_eq!(correct_graph(&g, None, None), report);
    }
}

#[test]
fn refinement_of_clean_rooms_orders_groups() {
    for (name, g) in clean_graphs() {
        let r = refine_siblings(&g, None);
        for group in sibling_groups(&r.graph) {
            assert!(strict_total_order(&r.graph, &group.children), "{name}: {group:?}");
        }
        assert!(validate_refined_graph(&r.graph).is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn removed_edges_lie_on_cycles(
        raw in prop::collection::vec((0usize..6, 0usize..6), 1..12)
    ) {
        let distinct: BTreeSet<(usize, usize)> = raw.into_iter().filter(|(a, b)| a != b).collect();
        let edges: Vec<(usize, usize)> = distinct.into_iter().collect();
        let g = index_graph(&edges);
        let (out, removed) = break_cycles(&g);
        prop_assert!(validate_graph(&out).is_empty());
        for e in &removed {
            // An edge u -> v lies on a cycle iff v reaches u.
            let mut seen = BTreeSet::new();
            let mut stack = vec![e.child.clone()];
            while let Some(v) = stack.pop() {
                for x in g.edges.iter().filter(|x| x.parent == v) {
                    if seen.insert(x.child.clone()) {
                        stack.push(x.child.clone());
                    }
                }
            }
            prop_assert!(seen.contains(&e.parent), "{e} not on a cycle");
        }
        prop_assert_eq!(break_cycles(&g), (out, removed));
    }

    #[test]
    fn resolve_then_detect_is_empty(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, &GraphParams::small());
        let r = resolve_violations(&g, &detect_violations(&g), None);
        prop_assert!(detect_violations(&r.graph).is_empty());
        let again = resolve_violations(&g, &detect_violations(&g), None);
        prop_assert_eq!(again, r);
    }
}

#[test]
fn cycle_breaking_is_minimal_on_arbitrary_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let mut set = BTreeSet::new();
        let m = rng.random_range(1..=6);
        while set.len() < m {
            let a = rng.random_range(0..5);
            let b = rng.random_range(0..5);
            if a != b {
                set.insert((a, b));
            }
        }
        let mut edges: Vec<_> = set.into_iter().collect();
        for i in (1..edges.len()).rev() {
            edges.swap(i, rng.random_range(0..=i));
        }
        let (out, removed) = break_cycles(&index_graph(&edges));
        assert!(cyclic_components(&out).is_empty());
        assert_eq!(removed.len(), minimum_feedback_edges(&edges, 8), "{edges:?}");
    }
}
