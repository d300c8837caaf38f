use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agents::extract_json;
use crate::compose::ViewDefinition;
use crate::schema::{SchemaValidator, GRADE_SCHEMA};

pub const EVALUATOR_PROMPT: &str = include_str!("../../../../assets/prompts/evaluator.txt");

/// Graded aspects. `Realism` is stored when present but is not part of the
/// overall average.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Func,
    Layout,
    Scheme,
    Atmos,
    Realism,
}

impl Criterion {
    pub const AVERAGED: [Criterion; 4] = [Criterion::Func, Criterion::Layout, Criterion::Scheme, Criterion::Atmos];

    /// Key in the grade document.
    pub fn key(self) -> &'static str {
        match self {
            Criterion::Realism => "realism_and_3d_geometric_consistency",
            Criterion::Func => "functionality_and_activity_based_alignment",
            Criterion::Layout => "layout_and_furniture",
            Criterion::Scheme => "color_scheme_and_material_choices",
            Criterion::Atmos => "overall_aesthetic_and_atmosphere",
        }
    }
}

/// An encoded picture of the scene, e.g. a PNG rendered from the manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewImage {
    pub name: String,
    pub media_type: String,
    pub data: Vec<u8>,
}

/// What is available to show the grader.
#[derive(Clone, Debug, PartialEq)]
pub enum SceneViews {
    Images(Vec<ViewImage>),
    /// Camera poses only; nothing has been rendered.
    Definitions(Vec<ViewDefinition>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisionRequest {
    pub prompt: String,
    pub images: Vec<ViewImage>,
}

/// A multimodal chat model.
pub trait VisionClient: Send + Sync {
    fn complete(&self, request: &VisionRequest) -> Result<String, String>;
}

impl<F> VisionClient for F
where
    F: Fn(&VisionRequest) -> Result<String, String> + Send + Sync,
{
    fn complete(&self, request: &VisionRequest) -> Result<String, String> {
        self(request)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RatingError {
    #[error("rating needs rendered images; the scene only has view definitions")]
    NeedsImages,
    #[error("rating needs two views, got {0}")]
    WrongViewCount(usize),
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("grader unavailable: {0}")]
    ClientUnavailable(String),
    #[error("run {run}: malformed grade: {error}")]
    MalformedGrade { run: usize, error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grade {
    pub grade: u8,
    pub comment: String,
}

/// One accepted grading run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunGrades {
    pub grades: BTreeMap<Criterion, Grade>,
    pub raw: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingReport {
    pub criteria: BTreeMap<Criterion, Stat>,
    /// Mean of the four averaged criteria.
    pub overall: f64,
    pub runs: Vec<RunGrades>,
}

impl RatingReport {
    /// Recomputes the statistics from the stored runs.
    pub fn from_runs(runs: Vec<RunGrades>) -> RatingReport {
        let mut criteria = BTreeMap::new();
        for c in [Criterion::Func, Criterion::Layout, Criterion::Scheme, Criterion::Atmos, Criterion::Realism] {
            let values: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.grades.get(&c).map(|g| f64::from(g.grade)))
                .collect();
            if !values.is_empty() {
                criteria.insert(c, Stat::of(&values));
            }
        }
        let overall = Criterion::AVERAGED.iter().map(|c| criteria[c].mean).sum::<f64>() / 4.0;
        RatingReport { criteria, overall, runs }
    }
}

fn example_json() -> String {
    let mut doc = serde_json::Map::new();
    for c in [Criterion::Realism, Criterion::Func, Criterion::Layout, Criterion::Scheme, Criterion::Atmos] {
        doc.insert(c.key().into(), json!({"comment": "Your comment and suggestion.", "grade": 0}));
    }
    Value::Object(doc).to_string()
}

/// The evaluator prompt with the user's preference filled in.
pub fn evaluator_prompt(user_prompt: &str) -> String {
    EVALUATOR_PROMPT
        .replace("{prompt}", user_prompt.trim())
        .replace("{example_json}", &example_json())
}

fn grade_validator() -> &'static SchemaValidator {
    use std::sync::OnceLock;
    static V: OnceLock<SchemaValidator> = OnceLock::new();
    V.get_or_init(|| SchemaValidator::from_text(GRADE_SCHEMA).expect("grade schema compiles"))
}

pub fn parse_grade(text: &str) -> Result<RunGrades, String> {
    let value = extract_json(text)?;
    grade_validator().validate(&value).map_err(|e| e.join("; "))?;
    let mut grades = BTreeMap::new();
    for c in [Criterion::Func, Criterion::Layout, Criterion::Scheme, Criterion::Atmos, Criterion::Realism] {
        if let Some(g) = value.get(c.key()) {
            let grade: Grade = serde_json::from_value(g.clone()).map_err(|e| e.to_string())?;
            grades.insert(c, grade);
        }
    }
    Ok(RunGrades {
        grades,
        raw: text.to_string(),
    })
}

/// Grades a scene `runs` times, up to `parallelism` calls at once.
///
/// A run whose answer does not parse is retried once; a second failure
/// fails the rating.
pub fn rate_scene(
    views: &SceneViews,
    user_prompt: &str,
    client: &dyn VisionClient,
    runs: usize,
    parallelism: usize,
) -> Result<RatingReport, RatingError> {
    let images = match views {
        SceneViews::Definitions(_) => return Err(RatingError::NeedsImages),
        SceneViews::Images(images) if images.len() != 2 => return Err(RatingError::WrongViewCount(images.len())),
        SceneViews::Images(images) => images.clone(),
    };
    if runs == 0 {
        return Err(RatingError::NoRuns);
    }
    let request = VisionRequest {
        prompt: evaluator_prompt(user_prompt),
        images,
    };
    let one_run = |run: usize| -> Result<RunGrades, RatingError> {
        let mut last = String::new();
        for _ in 0..2 {
            let text = client.complete(&request).map_err(RatingError::ClientUnavailable)?;
            match parse_grade(&text) {
                Ok(g) => return Ok(g),
                Err(e) => last = e,
            }
        }
        Err(RatingError::MalformedGrade { run, error: last })
    };

    let slots: Mutex<Vec<Option<Result<RunGrades, RatingError>>>> = Mutex::new(vec![None; runs]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..parallelism.clamp(1, runs) {
            scope.spawn(|| loop {
                let run = next.fetch_add(1, Ordering::SeqCst);
                if run >= runs {
                    break;
                }
                let out = one_run(run);
                slots.lock().expect("rating slots")[run] = Some(out);
            });
        }
    });
    let results = slots
        .into_inner()
        .expect("rating slots")
        .into_iter()
        .map(|s| s.expect("every run finishes"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RatingReport::from_runs(results))
}
