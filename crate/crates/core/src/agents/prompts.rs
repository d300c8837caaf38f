use std::path::Path;

use serde_json::Value;

use super::Stage;
use crate::schema;

/// System prompt templates. Placeholders are written `{name}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Prompts {
    pub designer: String,
    pub architect: String,
    pub engineer: String,
    pub corrector: String,
    pub refiner: String,
}

impl Default for Prompts {
    fn default() -> Self {
        Self {
            designer: include_str!("../../../../assets/prompts/designer.txt").into(),
            architect: include_str!("../../../../assets/prompts/architect.txt").into(),
            engineer: include_str!("../../../../assets/prompts/engineer.txt").into(),
            corrector: include_str!("../../../../assets/prompts/corrector.txt").into(),
            refiner: include_str!("../../../../assets/prompts/refiner.txt").into(),
        }
    }
}

impl Prompts {
    /// Defaults, overridden by any `<stage>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
        let mut p = Self::default();
        for stage in Stage::ALL {
            let path = dir.join(format!("{}.txt", stage.as_str()));
            if path.is_file() {
                *p.template_mut(stage) = std::fs::read_to_string(path)?;
            }
        }
        Ok(p)
    }

    pub fn template(&self, stage: Stage) -> &str {
        match stage {
            Stage::Designer => &self.designer,
            Stage::Architect => &self.architect,
            Stage::Engineer => &self.engineer,
            Stage::Corrector => &self.corrector,
            Stage::Refiner => &self.refiner,
        }
    }

    fn template_mut(&mut self, stage: Stage) -> &mut String {
        match stage {
            Stage::Designer => &mut self.designer,
            Stage::Architect => &mut self.architect,
            Stage::Engineer => &mut self.engineer,
            Stage::Corrector => &mut self.corrector,
            Stage::Refiner => &mut self.refiner,
        }
    }

    /// The stage prompt with its schema (and `{n}` for the Designer) filled in.
    pub fn system_prompt(&self, stage: Stage, n: usize) -> String {
        let schema_text = match stage {
            Stage::Designer => schema::DESIGNER_SCHEMA.to_string(),
            Stage::Architect => schema::ARCHITECT_SCHEMA.to_string(),
            Stage::Engineer | Stage::Corrector => pretty(&schema::engineer_object_schema()),
            Stage::Refiner => schema::REFINER_SCHEMA.to_string(),
        };
        render(
            self.template(stage),
            &[("n", &n.to_string()), ("json_schema", schema_text.trim_end())],
        )
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("schemas serialize")
}

pub(crate) fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn designer_prompt_fills_count_and_schema() {
        let p = Prompts::default().system_prompt(Stage::Designer, 7);
        assert!(p.starts_with("Interior Designer. Suggest 7 essential new objects"));
        assert!(p.contains("\"quantity\""));
        assert!(!p.contains("{json_schema}"));
    }

    #[test]
    fn every_stage_has_a_schema_slot() {
        for stage in Stage::ALL {
            assert!(Prompts::default().template(stage).contains("{json_schema}"), "{stage}");
        }
    }
}
