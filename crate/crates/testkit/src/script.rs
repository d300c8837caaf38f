//! A deterministic stand-in for a language model.
//!
//! [`ScriptedModel`] answers each stage by rule: fixed Designer and Architect
//! documents, Engineer entries copied from the request, a Corrector that
//! flips lateral prepositions, and a Refiner that lines siblings up left to
//! right. Recording it gives the canned fixture sets shipped with the repo.

use serde_json::{json, Value};

use roomsmith::agents::{
    BackendError, DesignRequest, GenerationBackend, GenerationRequest, Stage,
};
use roomsmith::scene::Room;

pub struct ScriptedModel {
    designer: Vec<Value>,
    architect: Value,
    /// Index of a Designer item whose first answer omits `quantity`.
    flawed_item: Option<usize>,
}

fn first_json(text: &str) -> Result<Value, BackendError> {
    let start = text
        .find('{')
        .ok_or_else(|| BackendError::Malformed("no JSON in request".into()))?;
    let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
    match stream.next() {
        Some(Ok(v)) => Ok(v),
        _ => Err(BackendError::Malformed("bad JSON in request".into())),
    }
}

fn proximity(p: &Value) -> &'static str {
    if p["proximity"] == "Adjacent" {
        "adjacent"
    } else {
        "not_adjacent"
    }
}

fn opposite(prep: &str) -> &str {
    match prep {
        "left of" => "right of",
        "right of" => "left of",
        "in front" => "behind",
        "behind" => "in front",
        other => other,
    }
}

impl ScriptedModel {
    pub fn new(designer: Vec<Value>, architect: Value) -> Self {
        Self {
            designer,
            architect,
            flawed_item: None,
        }
    }

    /// The first Designer answer drops `quantity` from item `index`.
    pub fn with_flawed_designer_item(mut self, index: usize) -> Self {
        self.flawed_item = Some(index);
        self
    }

    fn designer(&self, request: &GenerationRequest) -> Value {
        let mut items = self.designer.clone();
        if request.messages.len() == 1 {
            if let Some(i) = self.flawed_item {
                items[i].as_object_mut().expect("item").remove("quantity");
            }
        }
        json!({ "objects": items })
    }

    fn engineer(request: &GenerationRequest) -> Result<Value, BackendError> {
        let input = first_json(&request.messages[0].content)?;
        let placement: Vec<Value> = input["Placement"]
            .as_array()
            .cloned()
            .unwrap_or_default()
            .iter()
            .map(|p| {
                json!({
                    "parent": p["anchor"],
                    "preposition": p["preposition"],
                    "adjacency": proximity(p),
                })
            })
            .collect();
        Ok(json!({
            "new_object_id": input["new_object_id"],
            "name": input["name"],
            "style": input["architecture_style"],
            "material": input["material"],
            "size_in_meters": input["size_in_meters"],
            "scene_graph": placement,
            "facing": input["Facing"],
        }))
    }

    fn corrector(request: &GenerationRequest) -> Result<Value, BackendError> {
        let text = &request.messages[0].content;
        let at = text
            .find("Object to fix:")
            .ok_or_else(|| BackendError::Malformed("no object in corrector request".into()))?;
        let mut doc = first_json(&text[at..])?;
        if let Some(edges) = doc["scene_graph"].as_array_mut() {
            for e in edges {
                let flipped = opposite(e["preposition"].as_str().unwrap_or("")).to_string();
                e["preposition"] = Value::from(flipped);
            }
        }
        Ok(doc)
    }

    fn refiner(request: &GenerationRequest) -> Result<Value, BackendError> {
        let input = first_json(&request.messages[0].content)?;
        let mut ids: Vec<String> = input["children"]
            .as_array()
            .cloned()
            .unwrap_or_default()
            .iter()
            .filter_map(|c| c["new_object_id"].as_str().map(String::from))
            .collect();
        ids.sort();
        let relations: Vec<Value> = ids
            .windows(2)
            .map(|w| json!({"child": w[1], "preposition": "right of", "anchor": w[0]}))
            .collect();
        Ok(json!({ "relations": relations }))
    }
}

impl GenerationBackend for ScriptedModel {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let v = match request.stage {
            Stage::Designer => self.designer(request),
            Stage::Architect => self.architect.clone(),
            Stage::Engineer => Self::engineer(request)?,
            Stage::Corrector => Self::corrector(request)?,
            Stage::Refiner => Self::refiner(request)?,
        };
        Ok(serde_json::to_string_pretty(&v).expect("json"))
    }
}

fn item(name: &str, style: &str, material: &str, lwh: [f64; 3], quantity: usize) -> Value {
    json!({
        "name": name,
        "architecture_style": style,
        "material": material,
        "bounding_box_size": {"Length": lwh[0], "Width": lwh[1], "Height": lwh[2]},
        "quantity": quantity,
    })
}

fn place(prep: &str, anchor: &str, adjacent: bool) -> Value {
    json!({
        "preposition": prep,
        "anchor": anchor,
        "proximity": if adjacent { "Adjacent" } else { "Not Adjacent" },
    })
}

fn inst(id: &str, facing: &str, placement: Vec<Value>) -> Value {
    json!({"id": id, "facing": facing, "placement": placement})
}

/// The reading bedroom used by the shipped `bedroom` fixture set.
pub fn bedroom_request() -> DesignRequest {
    DesignRequest {
        user_text: "A calm bedroom for a student who reads in bed and works at a desk. Light oak and linen, warm light.".into(),
        room: Room::new(4.0, 3.6, 2.6),
        object_count: 7,
    }
}

/// Scripted answers for [`bedroom_request`]. The first Designer answer is
/// missing a quantity, and the Architect puts the desk chair behind a desk
/// that stands against the south wall.
pub fn bedroom_model() -> ScriptedModel {
    let designer = vec![
        item("bed", "scandinavian", "light oak", [1.6, 2.1, 0.5], 1),
        item("nightstand", "scandinavian", "light oak", [0.5, 0.4, 0.55], 2),
        item("desk", "minimalist", "light oak", [1.2, 0.6, 0.75], 1),
        item("desk chair", "minimalist", "linen", [0.5, 0.5, 0.9], 1),
        item("table lamp", "modern", "linen", [0.3, 0.3, 0.45], 1),
        item("wardrobe", "scandinavian", "light oak", [1.0, 0.6, 2.0], 1),
        item("book", "classic", "paper", [0.2, 0.15, 0.05], 2),
    ];
    let architect = json!({"objects": [
        {"name": "bed", "instances": [inst("bed_1", "south_wall", vec![
            place("on", "north_wall", true), place("on", "floor", true)])]},
        {"name": "nightstand", "instances": [
            inst("nightstand_1", "south_wall", vec![place("left of", "bed_1", true), place("on", "floor", true)]),
            inst("nightstand_2", "south_wall", vec![place("right of", "bed_1", true), place("on", "floor", true)])]},
        {"name": "desk", "instances": [inst("desk_1", "north_wall", vec![
            place("on", "south_wall", true), place("on", "floor", true)])]},
        {"name": "desk chair", "instances": [inst("desk_chair_1", "south_wall", vec![
            place("behind", "desk_1", true), place("on", "floor", true)])]},
        {"name": "table lamp", "instances": [inst("table_lamp_1", "south_wall", vec![
            place("on", "nightstand_1", true)])]},
        {"name": "wardrobe", "instances": [inst("wardrobe_1", "east_wall", vec![
            place("on", "west_wall", true), place("on", "floor", true)])]},
        {"name": "book", "instances": [
            inst("book_1", "north_wall", vec![place("on", "desk_1", true)]),
            inst("book_2", "north_wall", vec![place("on", "desk_1", true)])]},
    ]});
    ScriptedModel::new(designer, architect).with_flawed_designer_item(1)
}
