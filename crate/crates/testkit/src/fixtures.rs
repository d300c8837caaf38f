//! Hand-built graphs with known corrector outcomes.

use roomsmith::corrector::ViolationKind;
use roomsmith::scene::{
    Adjacency::{self, *},
    ObjectNode,
    Preposition::{self, *},
    Room, Rotation, SceneGraph, Size3,
};

/// A graph that must produce a violation of `kind` on `subject`.
#[derive(Clone, Debug)]
pub struct ViolationFixture {
    pub name: &'static str,
    pub kind: ViolationKind,
    pub subject: &'static str,
    pub graph: SceneGraph,
}

struct B(SceneGraph);

impl B {
    fn room(w: f64, d: f64, h: f64) -> Self {
        B(SceneGraph::new(Room::new(w, d, h)))
    }

    fn obj(self, id: &str, size: [f64; 3], r: Rotation) -> Self {
        let name = id.rsplit_once('_').map(|(n, _)| n).unwrap_or(id);
        B(self
            .0
            .with_node(ObjectNode::new(id, name, Size3::new(size[0], size[1], size[2])).with_rotation(r)))
    }

    fn e(self, p: &str, c: &str, prep: Preposition, adj: Adjacency) -> Self {
        B(self.0.with_edge(p, c, prep, adj))
    }

    fn floor(self, id: &str) -> Self {
        self.e("floor", id, On, Adjacent)
    }

    fn wall(self, wall: &str, id: &str) -> Self {
        self.e(wall, id, On, Adjacent).floor(id)
    }

    fn corner(self, a: &str, b: &str, id: &str) -> Self {
        self.e(a, id, InTheCorner, Adjacent)
            .e(b, id, InTheCorner, Adjacent)
            .floor(id)
    }
}

use Rotation::{Deg0 as N, Deg180 as S, Deg270 as W, Deg90 as E};

fn fx(name: &'static str, kind: ViolationKind, subject: &'static str, b: B) -> ViolationFixture {
    ViolationFixture {
        name,
        kind,
        subject,
        graph: b.0,
    }
}

pub fn out_of_bounds_fixtures() -> Vec<ViolationFixture> {
    use ViolationKind::OutOfBounds as K;
    vec![
        fx(
            "lamp_behind_wall_sofa",
            K,
            "lamp_1",
            B::room(4.0, 3.0, 2.4)
                .obj("sofa_1", [2.0, 0.9, 0.8], N)
                .obj("lamp_1", [0.3, 0.3, 1.5], N)
                .wall("wall_south", "sofa_1")
                .e("sofa_1", "lamp_1", Behind, NotAdjacent),
        ),
        fx(
            "plant_behind_bookshelf",
            K,
            "plant_1",
            B::room(5.0, 4.0, 2.6)
                .obj("bookshelf_1", [1.2, 0.4, 2.0], S)
                .obj("plant_1", [0.4, 0.4, 0.9], N)
                .wall("wall_north", "bookshelf_1")
                .e("bookshelf_1", "plant_1", Behind, Adjacent),
        ),
        fx(
            "chair_left_of_cornered_wardrobe",
            K,
            "chair_1",
            B::room(4.0, 4.0, 2.5)
                .obj("wardrobe_1", [1.0, 0.6, 2.0], N)
                .obj("chair_1", [0.5, 0.5, 0.9], N)
                .corner("wall_west", "wall_south", "wardrobe_1")
                .e("wardrobe_1", "chair_1", LeftOf, Adjacent),
        ),
        fx(
            "lamp_right_of_east_desk",
            K,
            "lamp_1",
            B::room(4.0, 3.5, 2.5)
                .obj("desk_1", [1.2, 0.6, 0.75], N)
                .obj("lamp_1", [0.3, 0.3, 1.6], N)
                .wall("wall_east", "desk_1")
                .e("desk_1", "lamp_1", RightOf, NotAdjacent),
        ),
        fx(
            "speaker_behind_tv_stand",
            K,
            "speaker_1",
            B::room(5.0, 4.0, 2.6)
                .obj("tv_stand_1", [1.6, 0.45, 0.5], E)
                .obj("speaker_1", [0.25, 0.25, 1.0], N)
                .wall("wall_west", "tv_stand_1")
                .e("tv_stand_1", "speaker_1", Behind, Adjacent),
        ),
        fx(
            "bin_in_front_of_corner_cabinet",
            K,
            "bin_1",
            B::room(4.0, 4.0, 2.5)
                .obj("cabinet_1", [0.8, 0.5, 1.0], N)
                .obj("bin_1", [0.3, 0.3, 0.4], N)
                .corner("wall_east", "wall_north", "cabinet_1")
                .e("cabinet_1", "bin_1", InFront, Adjacent),
        ),
    ]
}

pub fn adjacency_conflict_fixtures() -> Vec<ViolationFixture> {
    use ViolationKind::AdjacencyConflict as K;
    vec![
        fx(
            "bin_between_desk_and_cabinet",
            K,
            "bin_1",
            B::room(4.0, 3.0, 2.4)
                .obj("desk_1", [1.2, 0.6, 0.75], N)
                .obj("cabinet_1", [0.5, 0.5, 0.7], N)
                .obj("bin_1", [0.3, 0.3, 0.4], N)
                .floor("desk_1")
                .e("desk_1", "cabinet_1", RightOf, Adjacent)
                .e("desk_1", "bin_1", RightOf, Adjacent)
                .e("bin_1", "cabinet_1", RightOf, Adjacent),
        ),
        fx(
            "tray_between_table_and_vase",
            K,
            "tray_1",
            B::room(4.0, 4.0, 2.5)
                .obj("table_1", [1.2, 0.8, 0.75], N)
                .obj("tray_1", [0.4, 0.3, 0.05], N)
                .obj("vase_1", [0.15, 0.15, 0.3], N)
                .e("middle_of_room", "table_1", On, Adjacent)
                .e("table_1", "vase_1", On, Adjacent)
                .e("table_1", "tray_1", On, Adjacent)
                .e("tray_1", "vase_1", On, Adjacent),
        ),
        fx(
            "lamp_between_bed_and_nightstand",
            K,
            "lamp_1",
            B::room(4.0, 4.0, 2.5)
                .obj("bed_1", [2.0, 1.6, 0.5], N)
                .obj("nightstand_1", [0.5, 0.4, 0.5], N)
                .obj("lamp_1", [0.3, 0.3, 1.5], N)
                .floor("bed_1")
                .e("bed_1", "nightstand_1", LeftOf, Adjacent)
                .e("bed_1", "lamp_1", LeftOf, NotAdjacent)
                .e("lamp_1", "nightstand_1", LeftOf, NotAdjacent),
        ),
        fx(
            "rug_between_sofa_and_coffee_table",
            K,
            "rug_1",
            B::room(5.0, 4.0, 2.6)
                .obj("sofa_1", [2.0, 0.9, 0.8], N)
                .obj("coffee_table_1", [1.0, 0.6, 0.45], N)
                .obj("rug_1", [0.8, 0.6, 0.02], N)
                .wall("wall_south", "sofa_1")
                .e("sofa_1", "coffee_table_1", InFront, Adjacent)
                .e("sofa_1", "rug_1", InFront, NotAdjacent)
                .e("rug_1", "coffee_table_1", InFront, NotAdjacent),
        ),
        fx(
            "stool_between_desk_and_chair_via_reverse_edge",
            K,
            "stool_1",
            B::room(4.0, 4.0, 2.5)
                .obj("desk_1", [1.2, 0.6, 0.75], N)
                .obj("chair_1", [0.5, 0.5, 0.9], N)
                .obj("stool_1", [0.35, 0.35, 0.45], N)
                .floor("desk_1")
                .e("desk_1", "chair_1", InFront, Adjacent)
                .e("floor", "stool_1", On, Adjacent)
                .e("stool_1", "desk_1", Behind, Adjacent)
                .e("stool_1", "chair_1", InFront, NotAdjacent),
        ),
        fx(
            "box_between_rotated_shelf_and_box",
            K,
            "box_2",
            B::room(4.0, 4.0, 2.5)
                .obj("shelf_1", [1.0, 0.4, 1.8], E)
                .obj("box_1", [0.4, 0.4, 0.4], N)
                .obj("box_2", [0.4, 0.4, 0.4], N)
                .wall("wall_west", "shelf_1")
                .e("shelf_1", "box_1", InFront, Adjacent)
                .e("shelf_1", "box_2", InFront, Adjacent)
                .e("box_2", "box_1", RightOf, Adjacent),
        ),
    ]
}

pub fn size_fixtures() -> Vec<ViolationFixture> {
    use ViolationKind::SizeIncompatibility as K;
    vec![
        fx(
            "two_chairs_on_one_table_side",
            K,
            "table_1",
            B::room(4.0, 3.0, 2.4)
                .obj("table_1", [1.0, 1.0, 0.75], N)
                .obj("chair_1", [0.6, 0.6, 0.9], N)
                .obj("chair_2", [0.6, 0.6, 0.9], N)
                .floor("table_1")
                .e("table_1", "chair_1", LeftOf, Adjacent)
                .e("table_1", "chair_2", LeftOf, Adjacent)
                .e("chair_2", "chair_1", LeftOf, Adjacent),
        ),
        fx(
            "monitor_and_printer_on_desk",
            K,
            "desk_1",
            B::room(4.0, 3.0, 2.4)
                .obj("desk_1", [1.2, 0.6, 0.75], N)
                .obj("monitor_1", [0.7, 0.2, 0.45], N)
                .obj("printer_1", [0.6, 0.45, 0.3], N)
                .wall("wall_north", "desk_1")
                .e("desk_1", "monitor_1", On, Adjacent)
                .e("desk_1", "printer_1", On, Adjacent),
        ),
        fx(
            "box_under_floor_bed",
            K,
            "bed_1",
            B::room(4.0, 4.0, 2.5)
                .obj("bed_1", [2.0, 1.6, 0.5], N)
                .obj("box_1", [0.6, 0.4, 0.2], N)
                .floor("bed_1")
                .e("bed_1", "box_1", Under, Adjacent),
        ),
        fx(
            "mirror_wider_than_wall",
            K,
            "wall_north",
            B::room(3.0, 3.0, 2.4)
                .obj("mirror_1", [3.5, 0.05, 1.0], S)
                .e("wall_north", "mirror_1", On, Adjacent),
        ),
        fx(
            "floor_overfull",
            K,
            "floor",
            B::room(2.0, 2.0, 2.4)
                .obj("bed_1", [2.0, 1.6, 0.5], N)
                .obj("wardrobe_1", [1.0, 0.6, 2.0], N)
                .obj("desk_1", [1.2, 0.6, 0.75], N)
                .floor("bed_1")
                .floor("wardrobe_1")
                .floor("desk_1"),
        ),
        fx(
            "deep_lamp_on_narrow_shelf",
            K,
            "shelf_1",
            B::room(4.0, 3.0, 2.4)
                .obj("shelf_1", [1.0, 0.3, 1.2], S)
                .obj("lamp_1", [0.4, 0.5, 0.5], N)
                .wall("wall_north", "shelf_1")
                .e("shelf_1", "lamp_1", On, Adjacent),
        ),
    ]
}

pub fn orphan_fixtures() -> Vec<ViolationFixture> {
    use ViolationKind::Orphan as K;
    vec![
        fx("lone_rug", K, "rug_1", B::room(4.0, 3.0, 2.4).obj("rug_1", [2.0, 1.4, 0.02], N)),
        fx(
            "table_with_children_but_no_parent",
            K,
            "table_1",
            B::room(4.0, 4.0, 2.5)
                .obj("table_1", [1.2, 0.8, 0.75], N)
                .obj("chair_1", [0.5, 0.5, 0.9], N)
                .e("table_1", "chair_1", InFront, Adjacent),
        ),
        fx(
            "second_object_forgotten",
            K,
            "plant_1",
            B::room(4.0, 4.0, 2.5)
                .obj("sofa_1", [2.0, 0.9, 0.8], N)
                .obj("plant_1", [0.4, 0.4, 0.9], N)
                .wall("wall_south", "sofa_1"),
        ),
        fx(
            "floating_lamp",
            K,
            "lamp_1",
            B::room(3.0, 3.0, 2.4)
                .obj("bed_1", [2.0, 1.6, 0.5], N)
                .obj("lamp_1", [0.3, 0.3, 0.5], N)
                .floor("bed_1"),
        ),
        fx(
            "orphan_parent_of_stack",
            K,
            "crate_1",
            B::room(3.0, 3.0, 2.4)
                .obj("crate_1", [0.6, 0.6, 0.4], N)
                .obj("crate_2", [0.5, 0.5, 0.4], N)
                .e("crate_1", "crate_2", On, Adjacent),
        ),
    ]
}

pub fn violation_fixtures() -> Vec<ViolationFixture> {
    let mut all = out_of_bounds_fixtures();
    all.extend(adjacency_conflict_fixtures());
    all.extend(size_fixtures());
    all.extend(orphan_fixtures());
    all
}

fn bedroom(w: f64, d: f64) -> B {
    B::room(w, d, 2.6)
        .obj("bed_1", [1.6, 2.0, 0.5], S)
        .obj("nightstand_1", [0.5, 0.4, 0.55], S)
        .obj("nightstand_2", [0.5, 0.4, 0.55], S)
        .obj("lamp_1", [0.25, 0.25, 0.4], S)
        .obj("wardrobe_1", [1.2, 0.6, 2.0], E)
        .obj("rug_1", [1.4, 1.0, 0.02], N)
        .wall("wall_north", "bed_1")
        .e("bed_1", "nightstand_1", LeftOf, Adjacent)
        .e("bed_1", "nightstand_2", RightOf, Adjacent)
        .e("nightstand_1", "lamp_1", On, Adjacent)
        .wall("wall_west", "wardrobe_1")
        .e("middle_of_room", "rug_1", On, Adjacent)
}

fn living_room(w: f64, d: f64) -> B {
    B::room(w, d, 2.7)
        .obj("sofa_1", [2.0, 0.9, 0.8], N)
        .obj("coffee_table_1", [1.0, 0.6, 0.45], N)
        .obj("tv_stand_1", [1.6, 0.45, 0.5], S)
        .obj("tv_1", [1.2, 0.1, 0.7], S)
        .obj("armchair_1", [0.8, 0.8, 0.9], E)
        .obj("plant_1", [0.4, 0.4, 1.1], N)
        .wall("wall_south", "sofa_1")
        .e("sofa_1", "coffee_table_1", InFront, NotAdjacent)
        .wall("wall_north", "tv_stand_1")
        .e("tv_stand_1", "tv_1", On, Adjacent)
        .wall("wall_west", "armchair_1")
        .corner("wall_east", "wall_north", "plant_1")
}

fn office(w: f64, d: f64) -> B {
    B::room(w, d, 2.6)
        .obj("desk_1", [1.4, 0.7, 0.75], S)
        .obj("chair_1", [0.55, 0.55, 1.0], N)
        .obj("monitor_1", [0.6, 0.2, 0.45], S)
        .obj("lamp_1", [0.2, 0.2, 0.45], S)
        .obj("bookshelf_1", [1.0, 0.35, 1.9], W)
        .obj("cabinet_1", [0.45, 0.5, 0.7], N)
        .wall("wall_north", "desk_1")
        .e("desk_1", "chair_1", InFront, Adjacent)
        .e("desk_1", "monitor_1", On, Adjacent)
        .e("desk_1", "lamp_1", On, Adjacent)
        .e("monitor_1", "lamp_1", RightOf, Adjacent)
        .wall("wall_east", "bookshelf_1")
        .e("desk_1", "cabinet_1", LeftOf, Adjacent)
}

fn dining_room(w: f64, d: f64) -> B {
    B::room(w, d, 2.7)
        .obj("table_1", [1.6, 0.9, 0.75], N)
        .obj("chair_1", [0.45, 0.5, 0.9], S)
        .obj("chair_2", [0.45, 0.5, 0.9], S)
        .obj("chair_3", [0.45, 0.5, 0.9], N)
        .obj("chair_4", [0.45, 0.5, 0.9], N)
        .obj("sideboard_1", [1.4, 0.45, 0.85], S)
        .obj("vase_1", [0.2, 0.2, 0.35], N)
        .e("middle_of_room", "table_1", On, Adjacent)
        .e("table_1", "chair_1", InFront, Adjacent)
        .e("table_1", "chair_2", InFront, Adjacent)
        .e("chair_1", "chair_2", LeftOf, Adjacent)
        .e("table_1", "chair_3", Behind, Adjacent)
        .e("table_1", "chair_4", Behind, Adjacent)
        .e("chair_3", "chair_4", RightOf, Adjacent)
        .wall("wall_north", "sideboard_1")
        .e("table_1", "vase_1", On, Adjacent)
}

fn kids_room(w: f64, d: f64) -> B {
    B::room(w, d, 2.5)
        .obj("bed_1", [1.0, 2.0, 0.45], E)
        .obj("toy_box_1", [0.7, 0.4, 0.4], N)
        .obj("desk_1", [1.0, 0.55, 0.65], S)
        .obj("chair_1", [0.4, 0.4, 0.75], N)
        .obj("shelf_1", [0.8, 0.3, 1.2], W)
        .corner("wall_west", "wall_south", "bed_1")
        .e("bed_1", "toy_box_1", LeftOf, Adjacent)
        .wall("wall_north", "desk_1")
        .e("desk_1", "chair_1", InFront, Adjacent)
        .wall("wall_east", "shelf_1")
}

fn reading_nook(w: f64, d: f64) -> B {
    B::room(w, d, 2.6)
        .obj("armchair_1", [0.85, 0.85, 1.0], E)
        .obj("floor_lamp_1", [0.35, 0.35, 1.6], N)
        .obj("side_table_1", [0.45, 0.45, 0.55], N)
        .obj("book_1", [0.2, 0.15, 0.05], N)
        .obj("bookshelf_1", [1.2, 0.35, 2.0], S)
        .corner("wall_west", "wall_north", "armchair_1")
        .e("armchair_1", "side_table_1", RightOf, Adjacent)
        .e("side_table_1", "book_1", On, Adjacent)
        .e("armchair_1", "floor_lamp_1", InFront, NotAdjacent)
        .wall("wall_north", "bookshelf_1")
}

fn studio(w: f64, d: f64) -> B {
    B::room(w, d, 2.8)
        .obj("bed_1", [1.4, 2.0, 0.45], N)
        .obj("desk_1", [1.2, 0.6, 0.75], N)
        .obj("chair_1", [0.5, 0.5, 0.9], S)
        .obj("sofa_1", [1.8, 0.85, 0.8], W)
        .obj("lamp_1", [0.3, 0.3, 0.5], N)
        .obj("rug_1", [1.6, 1.2, 0.02], N)
        .corner("wall_west", "wall_south", "bed_1")
        .wall("wall_south", "desk_1")
        .e("desk_1", "chair_1", InFront, Adjacent)
        .wall("wall_east", "sofa_1")
        .e("desk_1", "lamp_1", On, Adjacent)
        .e("middle_of_room", "rug_1", On, Adjacent)
}

fn kitchen(w: f64, d: f64) -> B {
    B::room(w, d, 2.6)
        .obj("counter_1", [2.0, 0.6, 0.9], S)
        .obj("fridge_1", [0.7, 0.7, 1.8], S)
        .obj("island_1", [1.2, 0.8, 0.9], N)
        .obj("stool_1", [0.4, 0.4, 0.65], N)
        .obj("stool_2", [0.4, 0.4, 0.65], N)
        .obj("kettle_1", [0.25, 0.2, 0.25], N)
        .wall("wall_north", "counter_1")
        .e("counter_1", "fridge_1", LeftOf, Adjacent)
        .e("middle_of_room", "island_1", On, Adjacent)
        .e("island_1", "stool_1", Behind, Adjacent)
        .e("island_1", "stool_2", Behind, Adjacent)
        .e("stool_1", "stool_2", RightOf, Adjacent)
        .e("counter_1", "kettle_1", On, Adjacent)
}

fn bathroom(w: f64, d: f64) -> B {
    B::room(w, d, 2.4)
        .obj("bathtub_1", [1.7, 0.75, 0.6], S)
        .obj("sink_1", [0.6, 0.45, 0.85], E)
        .obj("mirror_1", [0.6, 0.03, 0.8], E)
        .obj("toilet_1", [0.4, 0.65, 0.75], E)
        .obj("mat_1", [0.8, 0.5, 0.02], N)
        .wall("wall_north", "bathtub_1")
        .wall("wall_west", "sink_1")
        .e("wall_west", "mirror_1", On, Adjacent)
        .wall("wall_west", "toilet_1")
        .e("bathtub_1", "mat_1", InFront, Adjacent)
}

fn home_gym(w: f64, d: f64) -> B {
    B::room(w, d, 2.8)
        .obj("treadmill_1", [0.8, 1.8, 1.4], N)
        .obj("bench_1", [1.2, 0.4, 0.45], N)
        .obj("rack_1", [1.0, 0.4, 1.2], S)
        .obj("dumbbell_1", [0.4, 0.2, 0.15], N)
        .obj("mat_1", [1.8, 0.6, 0.01], N)
        .corner("wall_east", "wall_south", "treadmill_1")
        .e("middle_of_room", "bench_1", On, Adjacent)
        .wall("wall_north", "rack_1")
        .e("rack_1", "dumbbell_1", On, Adjacent)
        .e("bench_1", "mat_1", Behind, NotAdjacent)
}

/// Twenty plausible rooms on which the corrector finds nothing.
pub fn clean_graphs() -> Vec<(String, SceneGraph)> {
    let rooms: [(&str, fn(f64, f64) -> B); 10] = [
        ("bedroom", bedroom),
        ("living_room", living_room),
        ("office", office),
        ("dining_room", dining_room),
        ("kids_room", kids_room),
        ("reading_nook", reading_nook),
        ("studio", studio),
        ("kitchen", kitchen),
        ("bathroom", bathroom),
        ("home_gym", home_gym),
    ];
    let mut out = Vec::new();
    for (w, d) in [(4.0, 4.0), (5.5, 4.5)] {
        for (name, build) in rooms {
            out.push((format!("{name}_{w}x{d}"), build(w, d).0));
        }
    }
    out
}
