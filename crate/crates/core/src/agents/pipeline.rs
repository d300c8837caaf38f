use serde_json::json;

use super::{
    run_architect, run_designer, run_engineer, AgentCorrector, AgentError, AgentRefiner,
    DesignRequest, DroppedObject, EngineerOutput, GenerationBackend, ObjectProposal, PipelineConfig,
    PlacementStatement, Provenance, Stage, StageTranscript,
};
use crate::corrector::{correct_graph, CorrectionAdvisor, CorrectionReport, OrderingAdvisor};
use crate::scene::{validate_graph, SceneGraph};

#[derive(Clone, Debug)]
pub struct PipelineRun {
    /// Corrected, refined and acyclic.
    pub graph: SceneGraph,
    /// One per stage, in stage order.
    pub transcripts: Vec<StageTranscript>,
    pub proposals: Vec<ObjectProposal>,
    pub statements: Vec<PlacementStatement>,
    /// Graph as assembled from the Engineer's entries.
    pub engineered: SceneGraph,
    pub dropped: Vec<DroppedObject>,
    /// Engineer edges left out of the assembled graph.
    pub removed_edges: Vec<String>,
    pub provenance: Vec<Provenance>,
    pub correction: CorrectionReport,
}

/// A stage failure with the transcripts gathered up to and including it.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{stage} stage failed: {error}")]
pub struct PipelineError {
    pub stage: Stage,
    pub error: AgentError,
    pub transcripts: Vec<StageTranscript>,
}

/// Outputs of earlier stages, reused when a run resumes part way through.
#[derive(Clone, Debug, Default)]
pub struct PriorStages {
    pub proposals: Option<Vec<ObjectProposal>>,
    pub statements: Option<Vec<PlacementStatement>>,
    pub engineered: Option<EngineerOutput>,
    /// Transcripts of the stages that are not re-run, in stage order.
    pub transcripts: Vec<StageTranscript>,
}

/// Designer, Architect, Engineer, then rule-based correction with the
/// Corrector and Refiner agents as advisors.
pub fn run_pipeline(
    request: &DesignRequest,
    config: &PipelineConfig,
    backend: &dyn GenerationBackend,
) -> Result<PipelineRun, PipelineError> {
    resume_pipeline(request, config, backend, Stage::Designer, PriorStages::default())
}

/// Runs `from` and every later stage, taking earlier outputs from `prior`.
/// Corrector and Refiner share one correction pass, so resuming from either
/// re-runs both.
pub fn resume_pipeline(
    request: &DesignRequest,
    config: &PipelineConfig,
    backend: &dyn GenerationBackend,
    from: Stage,
    prior: PriorStages,
) -> Result<PipelineRun, PipelineError> {
    let from = if from == Stage::Refiner { Stage::Corrector } else { from };
    let mut transcripts: Vec<StageTranscript> =
        prior.transcripts.into_iter().filter(|t| t.stage < from).collect();
    let fail = |stage, error, transcripts| PipelineError {
        stage,
        error,
        transcripts,
    };
    if let Err(e) = config.validate().and_then(|_| request.validate()) {
        return Err(fail(from, AgentError::InvalidRequest(e), transcripts));
    }
    if transcripts.len() != Stage::ALL.iter().filter(|s| **s < from).count() {
        let e = AgentError::MissingInput("transcripts of earlier stages".into());
        return Err(fail(from, e, transcripts));
    }
    let missing = |what: &str| AgentError::MissingInput(what.into());

    let proposals = if from <= Stage::Designer {
        let (r, t) = run_designer(request, backend, config);
        transcripts.push(t);
        match r {
            Ok(p) => p,
            Err(e) => return Err(fail(Stage::Designer, e, transcripts)),
        }
    } else {
        match prior.proposals {
            Some(p) => p,
            None => return Err(fail(from, missing("proposals"), transcripts)),
        }
    };

    let statements = if from <= Stage::Architect {
        let (r, t) = run_architect(&proposals, request, backend, config);
        transcripts.push(t);
        match r {
            Ok(s) => s,
            Err(e) => return Err(fail(Stage::Architect, e, transcripts)),
        }
    } else {
        match prior.statements {
            Some(s) => s,
            None => return Err(fail(from, missing("placement statements"), transcripts)),
        }
    };

    let engineered = if from <= Stage::Engineer {
        let (r, t) = run_engineer(&proposals, &statements, request.room, backend, config);
        transcripts.push(t);
        match r {
            Ok(out) => out,
            Err(e) => return Err(fail(Stage::Engineer, e, transcripts)),
        }
    } else {
        match prior.engineered {
            Some(out) => out,
            None => return Err(fail(from, missing("engineered graph"), transcripts)),
        }
    };

    let corrector = AgentCorrector::new(backend, config, &engineered.graph);
    let refiner = AgentRefiner::new(backend, config, &engineered.graph);
    let advisor: Option<&dyn CorrectionAdvisor> = config.agent_corrector.then_some(&corrector);
    let ordering: Option<&dyn OrderingAdvisor> = config.agent_refiner.then_some(&refiner);
    let started = std::time::Instant::now();
    let correction = correct_graph(&engineered.graph, advisor, ordering);
    let elapsed = started.elapsed();

    let mut ct = corrector.transcript();
    ct.output = json!({
        "cycle_edges_removed": correction.cycle_edges_removed,
        "detected": correction.detected,
        "corrections": correction.corrections,
        "remaining": correction.remaining,
    });
    ct.duration = elapsed;
    transcripts.push(ct);
    let mut rt = refiner.transcript();
    rt.output = serde_json::to_value(&correction.refinement).expect("refinement serializes");
    transcripts.push(rt);

    let report = validate_graph(&correction.graph);
    if !report.is_empty() {
        let e = AgentError::InvalidGraph(
            report.errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
        );
        return Err(fail(Stage::Corrector, e, transcripts));
    }

    Ok(PipelineRun {
        graph: correction.graph.clone(),
        transcripts,
        proposals,
        statements,
        engineered: engineered.graph,
        dropped: engineered.dropped,
        removed_edges: engineered.removed_edges,
        provenance: engineered.provenance,
        correction,
    })
}
