//! Shipped JSON schemas and a thin validator wrapper.

use serde_json::{json, Value};

pub const SCENE_GRAPH_SCHEMA: &str = include_str!("../../../docs/schemas/scene_graph.schema.json");
pub const DESIGNER_SCHEMA: &str = include_str!("../../../docs/schemas/designer.schema.json");
pub const ARCHITECT_SCHEMA: &str = include_str!("../../../docs/schemas/architect.schema.json");
pub const REFINER_SCHEMA: &str = include_str!("../../../docs/schemas/refiner.schema.json");
pub const GRADE_SCHEMA: &str = include_str!("../../../docs/schemas/grade.schema.json");
pub const MANIFEST_SCHEMA: &str = include_str!("../../../docs/schemas/manifest.schema.json");
pub const METRICS_SCHEMA: &str = include_str!("../../../docs/schemas/metrics.schema.json");

fn parse(text: &str) -> Value {
    serde_json::from_str(text).expect("shipped schemas are valid JSON")
}

pub fn scene_graph_schema() -> Value {
    parse(SCENE_GRAPH_SCHEMA)
}

/// Schema for a single object entry: the scene-graph schema's `object`
/// definition promoted to the root.
pub fn engineer_object_schema() -> Value {
    let full = scene_graph_schema();
    json!({
        "$schema": full["$schema"],
        "$id": "urn:roomsmith:schema:engineer_object:1",
        "title": "Engineer object entry",
        "$ref": "#/$defs/object",
        "$defs": full["$defs"],
    })
}

/// A compiled schema.
pub struct SchemaValidator {
    inner: jsonschema::Validator,
}

impl std::fmt::Debug for SchemaValidator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemaValidator").finish_non_exhaustive()
    }
}

impl SchemaValidator {
    pub fn new(schema: &Value) -> Result<Self, String> {
        jsonschema::validator_for(schema)
            .map(|inner| Self { inner })
            .map_err(|e| e.to_string())
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Self::new(&v)
    }

    /// Every violation as "<instance path>: <message>".
    pub fn validate(&self, instance: &Value) -> Result<(), Vec<String>> {
        let errors: Vec<String> = self
            .inner
            .iter_errors(instance)
            .map(|e| {
                let path = e.instance_path.to_string();
                if path.is_empty() {
                    e.to_string()
                } else {
                    format!("{path}: {e}")
                }
            })
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_shipped_schemas_compile() {
        for text in [
            SCENE_GRAPH_SCHEMA,
            DESIGNER_SCHEMA,
            ARCHITECT_SCHEMA,
            REFINER_SCHEMA,
            GRADE_SCHEMA,
            MANIFEST_SCHEMA,
            METRICS_SCHEMA,
        ] {
            SchemaValidator::from_text(text).unwrap();
        }
        SchemaValidator::new(&engineer_object_schema()).unwrap();
    }

    #[test]
    fn designer_schema_requires_quantity() {
        let v = SchemaValidator::from_text(DESIGNER_SCHEMA).unwrap();
        let doc = json!({"objects": [{
            "name": "desk", "architecture_style": "modern", "material": "oak",
            "bounding_box_size": {"Length": 1.2, "Width": 0.6, "Height": 0.75}
        }]});
        let errs = v.validate(&doc).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("quantity")), "{errs:?}");
    }
}
