//! `roomsmith.toml`: which backend to talk to, where assets and bundles
//! live, and the pipeline and solver knobs.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use roomsmith::agents::{BackendError, CannedBackend, GenerationBackend, GenerationRequest, PipelineConfig, Prompts};
use roomsmith::compose::{RunContext, RunSettings};
use roomsmith::retrieval::{read_index, AssetIndex, Embedder, HashingEmbedder, TableEmbedder};
use roomsmith::solver::SolverConfig;

use crate::remote::{RemoteChat, RemoteEmbedder, RemoteVision};
use crate::CliError;

pub const DEFAULT_CONFIG: &str = "roomsmith.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Solver seed; overrides `solver.seed` when set.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Where design bundles are written.
    #[serde(default = "default_out_root")]
    pub out_root: PathBuf,
    /// An index file written by `roomsmith index build`.
    #[serde(default)]
    pub index: Option<PathBuf>,
    /// Directory of prompt templates replacing the built-in ones.
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
    #[serde(default)]
    pub backend: Option<BackendConfig>,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub vision: Option<VisionConfig>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub service: ServiceConfig,
}

fn default_out_root() -> PathBuf {
    PathBuf::from("designs")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out_root: default_out_root(),
            index: None,
            prompts_dir: None,
            backend: None,
            embedding: EmbeddingConfig::default(),
            vision: None,
            pipeline: PipelineConfig::default(),
            solver: SolverConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Recorded responses; runs offline.
    Canned { fixtures: PathBuf },
    /// An OpenAI-compatible chat completions endpoint.
    Remote(Endpoint),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    /// Full URL of the endpoint, e.g. `https://host/v1/chat/completions`.
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Attempts per call for connection errors, 429 and 5xx answers.
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    /// First retry delay; doubles after each attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_timeout() -> u64 {
    120
}

fn default_attempts() -> u32 {
    3
}

fn default_backoff() -> u64 {
    500
}

impl Endpoint {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// The API key from the environment.
    pub fn api_key(&self) -> Result<String, CliError> {
        match std::env::var(&self.api_key_env) {
            Ok(k) if !k.is_empty() => Ok(k),
            _ => Err(CliError::Config(format!(
                "environment variable {} is not set",
                self.api_key_env
            ))),
        }
    }

    fn validate(&self, section: &str) -> Result<(), CliError> {
        if !(self.url.starts_with("http://") || self.url.starts_with("https://")) {
            return Err(CliError::Config(format!("{section}: url must be http(s), got \"{}\"", self.url)));
        }
        if self.model.is_empty() {
            return Err(CliError::Config(format!("{section}: model is empty")));
        }
        if self.api_key_env.is_empty() {
            return Err(CliError::Config(format!("{section}: api_key_env is empty")));
        }
        if self.max_attempts == 0 {
            return Err(CliError::Config(format!("{section}: max_attempts must be positive")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    /// Offline bag-of-words hashing.
    Hashing { dim: usize },
    /// Precomputed vectors keyed by description, as a JSON object.
    Table { path: PathBuf },
    /// An OpenAI-compatible embeddings endpoint.
    Remote(Endpoint),
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Hashing { dim: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisionConfig {
    #[serde(flatten)]
    pub endpoint: Endpoint,
    /// Grading runs per scene.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_runs() -> usize {
    3
}

fn default_parallelism() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub addr: String,
    /// Threads running design and replay jobs.
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
            workers: 2,
        }
    }
}

/// Joins a relative `p` onto `base` and folds `.` and `..` lexically, so
/// `fixtures/../designs` prints as `designs`.
fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_absolute() {
        return;
    }
    let mut out = PathBuf::new();
    for c in base.join(&*p).components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir if matches!(out.components().next_back(), Some(Component::Normal(_))) => {
                out.pop();
            }
            c => out.push(c),
        }
    }
    if out.as_os_str().is_empty() {
        out.push(".");
    }
    *p = out;
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. Relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.out_root);
        if let Some(p) = &mut self.index {
            resolve(base, p);
        }
        if let Some(p) = &mut self.prompts_dir {
            resolve(base, p);
        }
        if let Some(BackendConfig::Canned { fixtures }) = &mut self.backend {
            resolve(base, fixtures);
        }
        if let EmbeddingConfig::Table { path } = &mut self.embedding {
            resolve(base, path);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match &self.backend {
            Some(BackendConfig::Canned { fixtures }) if fixtures.as_os_str().is_empty() => {
                return Err(CliError::Config("backend: canned mode needs a fixtures directory".into()));
            }
            Some(BackendConfig::Remote(e)) => e.validate("backend")?,
            _ => {}
        }
        match &self.embedding {
            EmbeddingConfig::Hashing { dim: 0 } => {
                return Err(CliError::Config("embedding: dim must be positive".into()));
            }
            EmbeddingConfig::Remote(e) => e.validate("embedding")?,
            _ => {}
        }
        if let Some(v) = &self.vision {
            v.endpoint.validate("vision")?;
            if v.runs == 0 || v.parallelism == 0 {
                return Err(CliError::Config("vision: runs and parallelism must be positive".into()));
            }
        }
        if self.service.workers == 0 {
            return Err(CliError::Config("service: workers must be positive".into()));
        }
        self.pipeline.validate().map_err(|e| CliError::Config(format!("pipeline: {e}")))?;
        self.solver.validate().map_err(|e| CliError::Config(format!("solver: {e}")))?;
        Ok(())
    }

    /// What goes into a bundle's `config.json`.
    pub fn settings(&self) -> RunSettings {
        let mut solver = self.solver.clone();
        if let Some(seed) = self.seed {
            solver.seed = seed;
        }
        RunSettings {
            pipeline: self.pipeline.clone(),
            solver,
            ..RunSettings::default()
        }
    }
}

/// Stands in when no backend is configured; every call fails.
struct NoBackend;

impl GenerationBackend for NoBackend {
    fn generate(&self, _: &GenerationRequest) -> Result<String, BackendError> {
        Err(BackendError::Unavailable("no backend configured".into()))
    }
}

/// Everything a command needs at run time, built once from a [`RunConfig`].
#[derive(Clone)]
pub struct Services {
    pub backend: Arc<dyn GenerationBackend>,
    /// False when `backend` is the stand-in that always fails.
    pub has_backend: bool,
    pub embedder: Arc<dyn Embedder>,
    pub index: Option<Arc<AssetIndex>>,
    pub prompts: Prompts,
    pub vision: Option<Arc<RemoteVision>>,
}

impl Services {
    pub fn from_config(config: &RunConfig) -> Result<Services, CliError> {
        let (backend, has_backend): (Arc<dyn GenerationBackend>, bool) = match &config.backend {
            None => (Arc::new(NoBackend), false),
            Some(BackendConfig::Canned { fixtures }) => {
                if !fixtures.is_dir() {
                    return Err(CliError::Config(format!(
                        "backend: fixture directory {} does not exist",
                        fixtures.display()
                    )));
                }
                let canned = CannedBackend::load(fixtures)
                    .map_err(|e| CliError::Config(format!("backend: {}: {e}", fixtures.display())))?;
                (Arc::new(canned), true)
            }
            Some(BackendConfig::Remote(e)) => (Arc::new(RemoteChat::new(e.clone(), e.api_key()?)), true),
        };
        let embedder: Arc<dyn Embedder> = match &config.embedding {
            EmbeddingConfig::Hashing { dim } => Arc::new(HashingEmbedder::new(*dim)),
            EmbeddingConfig::Table { path } => Arc::new(
                TableEmbedder::from_json_file(path).map_err(|e| CliError::Config(format!("embedding: {e}")))?,
            ),
            EmbeddingConfig::Remote(e) => Arc::new(RemoteEmbedder::new(e.clone(), e.api_key()?)),
        };
        let index = match &config.index {
            None => None,
            Some(path) => {
                let index = read_index(path).map_err(|e| CliError::Config(format!("index {}: {e}", path.display())))?;
                if let EmbeddingConfig::Hashing { dim } = config.embedding {
                    if dim != index.dim() {
                        return Err(CliError::Config(format!(
                            "index {} has dimension {}, the hashing embedder {dim}",
                            path.display(),
                            index.dim()
                        )));
                    }
                }
                Some(Arc::new(index))
            }
        };
        let prompts = match &config.prompts_dir {
            None => Prompts::default(),
            Some(dir) => Prompts::with_overrides(dir)
                .map_err(|e| CliError::Config(format!("prompts_dir {}: {e}", dir.display())))?,
        };
        let vision = match &config.vision {
            None => None,
            Some(v) => Some(Arc::new(RemoteVision::new(v.endpoint.clone(), v.endpoint.api_key()?))),
        };
        Ok(Services {
            backend,
            has_backend,
            embedder,
            index,
            prompts,
            vision,
        })
    }

    pub fn ctx(&self) -> RunContext<'_> {
        RunContext {
            backend: self.backend.as_ref(),
            prompts: self.prompts.clone(),
            index: self.index.as_deref(),
            embedder: self.embedder.as_ref(),
        }
    }

    pub fn require_backend(&self) -> Result<(), CliError> {
        if self.has_backend {
            Ok(())
        } else {
            Err(CliError::Config("no [backend] section in the config".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.settings().solver.seed, 0);
    }

    #[test]
    fn full_config_parses() {
        let c = RunConfig::parse(
            r#"
            seed = 9
            out_root = "out"
            index = "catalog.rsix"

            [backend]
            kind = "remote"
            url = "https://example.test/v1/chat/completions"
            model = "m"
            api_key_env = "KEY"

            [embedding]
            kind = "hashing"
            dim = 32

            [pipeline]
            max_retries = 2
            [pipeline.decoding]
            temperature = 0.2

            [solver]
            samples_per_object = 40
            "#,
        )
        .unwrap();
        assert_eq!(c.settings().solver.seed, 9);
        assert_eq!(c.settings().solver.samples_per_object, 40);
        assert_eq!(c.pipeline.max_retries, 2);
        assert_eq!(c.pipeline.decoding.temperature, 0.2);
        let Some(BackendConfig::Remote(e)) = &c.backend else { panic!() };
        assert_eq!(e.max_attempts, 3);
    }

    #[test]
    fn invalid_configs() {
        for text in [
            "[backend]\nkind = \"canned\"\nfixtures = \"\"",
            "[backend]\nkind = \"remote\"\nurl = \"ftp://x\"\nmodel = \"m\"\napi_key_env = \"K\"",
            "[backend]\nkind = \"remote\"\nurl = \"http://x\"\nmodel = \"m\"\napi_key_env = \"\"",
            "[backend]\nkind = \"remote\"\nurl = \"http://x\"\nmodel = \"m\"",
            "[embedding]\nkind = \"hashing\"\ndim = 0",
            "[pipeline.decoding]\ntop_p = 0.0",
            "[solver]\nsamples_per_object = 0",
            "colour = \"red\"",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let mut c = RunConfig::parse("index = \"a.rsix\"\n[backend]\nkind = \"canned\"\nfixtures = \"fx\"").unwrap();
        c.resolve_paths(Path::new("/etc/rs"));
        assert_eq!(c.index.unwrap(), Path::new("/etc/rs/a.rsix"));
        assert_eq!(c.out_root, Path::new("/etc/rs/designs"));
        assert_eq!(c.backend, Some(BackendConfig::Canned { fixtures: "/etc/rs/fx".into() }));

        let mut p = PathBuf::from("../designs");
        resolve(Path::new("fixtures"), &mut p);
        assert_eq!(p, Path::new("designs"));
        let mut p = PathBuf::from("./x/../..");
        resolve(Path::new("fixtures"), &mut p);
        assert_eq!(p, Path::new("."));
        let mut p = PathBuf::from("../../up");
        resolve(Path::new("a"), &mut p);
        assert_eq!(p, Path::new("../up"));
    }

    #[test]
    fn missing_fixtures_and_keys_are_config_errors() {
        let c = RunConfig {
            backend: Some(BackendConfig::Canned { fixtures: "/nonexistent/fixtures".into() }),
            ..RunConfig::default()
        };
        assert!(matches!(Services::from_config(&c), Err(CliError::Config(_))));
        let c = RunConfig::parse(
            "[backend]\nkind = \"remote\"\nurl = \"http://x\"\nmodel = \"m\"\napi_key_env = \"ROOMSMITH_TEST_UNSET_KEY\"",
        )
        .unwrap();
        assert!(matches!(Services::from_config(&c), Err(CliError::Config(_))));
        let s = Services::from_config(&RunConfig::default()).unwrap();
        assert!(s.require_backend().is_err());
    }
}
