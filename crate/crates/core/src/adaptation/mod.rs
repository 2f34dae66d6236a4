//! Query-time adaptation: gate, retrieve, partition, walk, compose.

mod compose;
mod traverse;
mod verifier;
mod walk;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::VerifierRegistry;
use crate::graph::SkillGraph;
use crate::provider::{ConfidenceProvider, EmbeddingProvider, Verifier, Writer};
use crate::retrieval::{
    degree_corrected_rwr, partition, seed_retrieve, CompatibilityPartition, PartitionConfig, RetrievalError,
    RwrConfig, ScoreVector, SeedDistribution,
};
use crate::text::{term_set, Substitution};

pub use compose::{adaptation_cost, compose, ContextEntry, CostConfig, SkillContext};
pub use traverse::{rewrite, traverse, AdaptationTrace, StepFlag, SubstitutionWriter, TraceStep};
pub use verifier::{route, RouteRequest, RoutingAction, RuleVerifier};
pub use walk::{frontier_walk, WalkBudget, WalkOutcome, WalkStep};

/// A task query plus the substitution pairs the default writer applies.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub substitutions: Vec<Substitution>,
}

impl Query {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            substitutions: Vec::new(),
        }
    }

    pub fn with_substitutions(mut self, subs: Vec<Substitution>) -> Self {
        self.substitutions = subs;
        self
    }

    pub fn terms(&self) -> BTreeSet<String> {
        term_set(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptationConfig {
    /// Retrieval is skipped when confidence strictly exceeds this; `None`
    /// always retrieves.
    pub trigger_threshold: Option<f64>,
    pub max_visited: usize,
    pub max_rewrites: usize,
    /// Number of seeds `K`.
    pub seeds: usize,
    pub partition: PartitionConfig,
    pub rwr: RwrConfig,
    pub cost: CostConfig,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            trigger_threshold: None,
            max_visited: 64,
            max_rewrites: 8,
            seeds: 4,
            partition: PartitionConfig::default(),
            rwr: RwrConfig::default(),
            cost: CostConfig::default(),
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_visited == 0 || self.max_rewrites == 0 {
            return Err("traversal budgets must be positive".into());
        }
        if self.seeds == 0 {
            return Err("seeds must be positive".into());
        }
        if self.trigger_threshold.is_some_and(f64::is_nan) {
            return Err("trigger_threshold is NaN".into());
        }
        self.partition.validate()?;
        self.rwr.validate()?;
        self.cost.validate()
    }

    pub fn budget(&self) -> WalkBudget {
        WalkBudget {
            max_visited: self.max_visited,
            max_rewrites: self.max_rewrites,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptError {
    #[error("invalid adaptation config: {0}")]
    Config(String),
    #[error(transparent)]
    Retrieval(RetrievalError),
}

/// Provider set used by one adaptation run.
#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub embedder: &'a dyn EmbeddingProvider,
    pub confidence: &'a dyn ConfidenceProvider,
    pub verifier: &'a dyn Verifier,
    pub writer: &'a dyn Writer,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Adaptation {
    pub context: SkillContext,
    pub trace: AdaptationTrace,
}

/// `false` exactly when the provider's confidence strictly exceeds the threshold.
pub fn should_trigger(query: &Query, confidence: &dyn ConfidenceProvider, cfg: &AdaptationConfig) -> bool {
    match cfg.trigger_threshold {
        None => true,
        Some(t) => !(confidence.confidence(query) > t),
    }
}

/// End-to-end skill adaptation for one query. Only configuration problems are
/// errors; provider failures show up as flags on the trace.
pub fn adapt(
    query: &Query,
    graph: &SkillGraph,
    rules: &VerifierRegistry,
    providers: Providers<'_>,
    cfg: &AdaptationConfig,
) -> Result<Adaptation, AdaptError> {
    cfg.validate().map_err(AdaptError::Config)?;
    if !should_trigger(query, providers.confidence, cfg) {
        return Ok(Adaptation::default());
    }
    let mut trace = AdaptationTrace {
        triggered: true,
        ..AdaptationTrace::default()
    };
    let stage = match retrieval_stage(query, graph, providers.embedder, cfg) {
        Ok(stage) => stage,
        Err(RetrievalError::EmptyGraph) => {
            return Ok(Adaptation {
                context: SkillContext::default(),
                trace,
            })
        }
        Err(RetrievalError::Provider(e)) => {
            trace.flags.push(format!("embedder_failed: {e}"));
            return Ok(Adaptation {
                context: SkillContext::default(),
                trace,
            });
        }
        Err(e) => return Err(AdaptError::Retrieval(e)),
    };

    let mut walked = traverse(
        graph,
        &stage.roots,
        &stage.scores,
        query,
        rules,
        providers.verifier,
        providers.writer,
        cfg.budget(),
    );
    walked.seeds = stage.seeds.entries.keys().cloned().collect();
    walked.full = stage.tiers.full.iter().cloned().collect();
    if !stage.scores.converged {
        walked.flags.push("rwr_not_converged".into());
    }
    let context = compose(&stage.tiers.full, &walked, &stage.scores, graph);
    Ok(Adaptation { context, trace: walked })
}

/// Everything computed before the walk starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalStage {
    pub seeds: SeedDistribution,
    pub scores: ScoreVector,
    pub tiers: CompatibilityPartition,
    /// Partially relevant units by score descending, then id.
    pub roots: Vec<String>,
}

/// Seeds, RWR scores, tiers and walk roots for `query`.
pub fn retrieval_stage(
    query: &Query,
    graph: &SkillGraph,
    embedder: &dyn EmbeddingProvider,
    cfg: &AdaptationConfig,
) -> Result<RetrievalStage, RetrievalError> {
    let seeds = seed_retrieve(&query.text, graph, cfg.seeds, embedder)?;
    let scores = degree_corrected_rwr(graph, &seeds, &cfg.rwr)?;
    let tiers = partition(&scores, &cfg.partition)?;
    let mut roots: Vec<String> = tiers.partial.iter().cloned().collect();
    roots.sort_by(|a, b| scores.get(b).total_cmp(&scores.get(a)).then_with(|| a.cmp(b)));
    Ok(RetrievalStage {
        seeds,
        scores,
        tiers,
        roots,
    })
}
