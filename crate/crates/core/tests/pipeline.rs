use std::sync::atomic::{AtomicUsize, Ordering};

use roomsmith::agents::{
    run_pipeline, BackendError, CannedBackend, GenerationBackend, GenerationRequest,
    PipelineConfig, RecordingBackend, Stage,
};
use roomsmith::corrector::{CorrectionSource, ViolationKind};
use roomsmith::scene::{validate_graph, validate_refined_graph};
use roomsmith_testkit::script::{bedroom_model, bedroom_request};

struct Counting<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B: GenerationBackend> GenerationBackend for Counting<B> {
    fn generate(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.generate(request)
    }
}

fn transcripts_json(run: &roomsmith::agents::PipelineRun) -> String {
    serde_json::to_string(&run.transcripts).unwrap()
}

#[test]
fn scripted_bedroom_runs_through_every_stage() {
    let run = run_pipeline(&bedroom_request(), &PipelineConfig::default(), &bedroom_model()).unwrap();
    let stages: Vec<Stage> = run.transcripts.iter().map(|t| t.stage).collect();
    assert_eq!(stages, Stage::ALL);
    assert!(validate_graph(&run.graph).is_empty());
    assert!(validate_refined_graph(&run.graph).is_empty());
    assert_eq!(run.graph.nodes.len(), 9);

    // The first Designer answer lacked a quantity.
    assert_eq!(run.transcripts[0].calls[0].retry_count, 1);

    // The chair pushed into the south wall is moved by the Corrector agent.
    let fix = &run.correction.corrections[0];
    assert_eq!(fix.violation.kind, ViolationKind::OutOfBounds);
    assert_eq!(fix.violation.subject, "desk_chair_1");
    assert_eq!(fix.source, CorrectionSource::Advisor);
    assert!(run
        .graph
        .edges
        .iter()
        .any(|e| e.to_string() == "(desk_1 -> desk_chair_1, in front, adjacent)"));

    // The two books on the desk are ordered by the Refiner agent.
    assert_eq!(run.correction.refinement.added, ["(book_1 -> book_2, right of, adjacent)"]);
    assert_eq!(run.correction.refinement.groups[0].source, CorrectionSource::Advisor);
}

#[test]
fn every_node_traces_to_one_proposal() {
    let run = run_pipeline(&bedroom_request(), &PipelineConfig::default(), &bedroom_model()).unwrap();
    for node in &run.graph.nodes {
        let hits: Vec<_> = run.provenance.iter().filter(|p| p.id == node.id).collect();
        assert_eq!(hits.len(), 1, "{}", node.id);
        assert!(hits[0].proposal_index < run.proposals.len());
    }
}

#[test]
fn recorded_run_replays_byte_identical() {
    let rec = RecordingBackend::new(bedroom_model());
    let live = run_pipeline(&bedroom_request(), &PipelineConfig::default(), &rec).unwrap();
    let canned: CannedBackend = rec.recorded();
    let a = run_pipeline(&bedroom_request(), &PipelineConfig::default(), &canned).unwrap();
    let b = run_pipeline(&bedroom_request(), &PipelineConfig::default(), &canned).unwrap();
    assert_eq!(transcripts_json(&a), transcripts_json(&b));
    assert_eq!(transcripts_json(&a), transcripts_json(&live));
    assert_eq!(a.graph, live.graph);
}

#[test]
fn engineer_parallelism_does_not_change_output() {
    let one = PipelineConfig {
        engineer_parallelism: 1,
        ..PipelineConfig::default()
    };
    let many = PipelineConfig {
        engineer_parallelism: 16,
        ..PipelineConfig::default()
    };
    let a = run_pipeline(&bedroom_request(), &one, &bedroom_model()).unwrap();
    let b = run_pipeline(&bedroom_request(), &many, &bedroom_model()).unwrap();
    assert_eq!(transcripts_json(&a), transcripts_json(&b));
}

#[test]
fn backend_calls_are_bounded() {
    let config = PipelineConfig::default();
    let backend = Counting {
        inner: bedroom_model(),
        calls: AtomicUsize::new(0),
    };
    let run = run_pipeline(&bedroom_request(), &config, &backend).unwrap();
    let objects = run.statements.len();
    let bound = Stage::ALL.len() * objects * (1 + config.max_retries);
    assert!(backend.calls.load(Ordering::SeqCst) <= bound);
}

#[test]
fn missing_fixture_keeps_partial_transcripts() {
    let rec = RecordingBackend::new(bedroom_model());
    run_pipeline(&bedroom_request(), &PipelineConfig::default(), &rec).unwrap();
    let mut request = bedroom_request();
    request.user_text.push_str(" Plants too.");
    let err = run_pipeline(&request, &PipelineConfig::default(), &rec.recorded()).unwrap_err();
    assert_eq!(err.stage, Stage::Designer);
    assert_eq!(err.transcripts.len(), 1);
    assert!(err.to_string().contains("no canned response"));
}

#[test]
fn rule_only_correction_without_agents() {
    let config = PipelineConfig {
        agent_corrector: false,
        agent_refiner: false,
        ..PipelineConfig::default()
    };
    let run = run_pipeline(&bedroom_request(), &config, &bedroom_model()).unwrap();
    assert!(run.transcripts[3].calls.is_empty());
    assert!(run.transcripts[4].calls.is_empty());
    assert_eq!(run.correction.corrections[0].source, CorrectionSource::Fallback);
    assert!(validate_refined_graph(&run.graph).is_empty());
}

/// The shipped `bedroom` fixture set must answer every call of the scripted
/// run. `ROOMSMITH_BLESS=1` rewrites it.
#[test]
fn shipped_bedroom_fixtures_are_current() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/canned/bedroom");
    let rec = RecordingBackend::new(bedroom_model());
    let live = run_pipeline(&bedroom_request(), &PipelineConfig::default(), &rec).unwrap();
    if std::env::var_os("ROOMSMITH_BLESS").is_some() {
        let _ = std::fs::remove_dir_all(&dir);
        rec.save(&dir).unwrap();
        let request = serde_json::to_string_pretty(&bedroom_request()).unwrap();
        std::fs::write(dir.join("request.json"), request + "\n").unwrap();
    }
    let shipped: roomsmith::agents::DesignRequest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("request.json")).unwrap()).unwrap();
    assert_eq!(shipped, bedroom_request());
    let canned = CannedBackend::load(&dir).unwrap();
    assert_eq!(canned.len(), rec.recorded().len());
    let replay = run_pipeline(&shipped, &PipelineConfig::default(), &canned).unwrap();
    assert_eq!(transcripts_json(&replay), transcripts_json(&live));
}
