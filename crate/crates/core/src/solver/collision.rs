use std::collections::BTreeSet;

use crate::scene::{Aabb, SceneGraph};

/// Unordered pairs of objects joined by an edge. Their contact is sanctioned.
pub fn sanctioned_pairs(graph: &SceneGraph) -> BTreeSet<(String, String)> {
    graph
        .edges
        .iter()
        .map(|e| ordered(&e.parent, &e.child))
        .collect()
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// True when `candidate` overlaps some placed box by more than `tolerance`
/// cubic meters. Pairs in `sanctioned` are skipped.
pub fn check_collision(
    candidate_id: &str,
    candidate: &Aabb,
    placed: &[(&str, Aabb)],
    sanctioned: &BTreeSet<(String, String)>,
    tolerance: f64,
) -> bool {
    placed.iter().any(|(id, b)| {
        *id != candidate_id
            && !sanctioned.contains(&ordered(candidate_id, id))
            && candidate.intersection_volume(b) > tolerance
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Vec3;

    fn cube(x: f64) -> Aabb {
        Aabb::from_center(Vec3::new(x, 0.5, 0.5), Vec3::new(0.5, 0.5, 0.5))
    }

    #[test]
    fn shared_face_is_not_a_collision() {
        let none = BTreeSet::new();
        assert!(!check_collision("b", &cube(1.0), &[("a", cube(0.0))], &none, 1e-6));
    }

    #[test]
    fn half_overlap_collides() {
        let none = BTreeSet::new();
        assert!((cube(0.5).intersection_volume(&cube(0.0)) - 0.5).abs() < 1e-12);
        assert!(check_collision("b", &cube(0.5), &[("a", cube(0.0))], &none, 1e-6));
    }

    #[test]
    fn sanctioned_pair_is_ignored() {
        let top = Aabb::from_center(Vec3::new(0.0, 0.5, 1.2), Vec3::new(0.2, 0.2, 0.2));
        let base = cube(0.0);
        let mut ok = BTreeSet::new();
        ok.insert(("lamp".to_string(), "table".to_string()));
        assert!(!check_collision("lamp", &top, &[("table", base)], &ok, 1e-6));
        // Sanctioning does not depend on argument order.
        let sunk = Aabb::from_center(Vec3::new(0.0, 0.5, 0.9), Vec3::new(0.2, 0.2, 0.2));
        assert!(!check_collision("lamp", &sunk, &[("table", base)], &ok, 1e-6));
        assert!(check_collision("vase", &sunk, &[("table", base)], &ok, 1e-6));
    }
}
