//! Model-role contracts. Every role has a deterministic in-process default;
//! HTTP-backed implementations live in the CLI crate.

use thiserror::Error;

use crate::adaptation::{Query, RouteRequest, RoutingAction, SkillContext};
use crate::evolution::{GapReport, RegistryPair, RuleEdit};
use crate::graph::{AgentEdit, EditOperator, SkillGraph, SkillUnit};
use crate::retrieval::Embedding;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed reply: {0}")]
    Malformed(String),
    #[error("provider misconfigured: {0}")]
    Config(String),
}

pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Embedding, ProviderError>;
}

/// Confidence of the agent answering `query` without retrieved skills.
pub trait ConfidenceProvider: Send + Sync {
    fn confidence(&self, query: &Query) -> f64;
}

/// Always reports zero confidence, so retrieval always triggers.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroConfidence;

impl ConfidenceProvider for ZeroConfidence {
    fn confidence(&self, _query: &Query) -> f64 {
        0.0
    }
}

/// Fixed confidence, mostly useful in tests.
#[derive(Debug, Clone, Copy)]
pub struct FixedConfidence(pub f64);

impl ConfidenceProvider for FixedConfidence {
    fn confidence(&self, _query: &Query) -> f64 {
        self.0
    }
}

pub trait Verifier: Send + Sync {
    fn route(&self, request: &RouteRequest<'_>) -> Result<RoutingAction, ProviderError>;
}

pub trait Writer: Send + Sync {
    /// Adapted content of `unit` for this query only.
    fn rewrite(&self, query: &Query, unit: &SkillUnit) -> Result<String, ProviderError>;
}

pub trait AgentProvider: Send + Sync {
    fn answer(&self, query: &Query, context: &SkillContext) -> Result<String, ProviderError>;
}

pub trait MetricProvider: Send + Sync {
    /// Task metric in `[0, 1]`.
    fn score(&self, ground_truth: &str, output: &str) -> f64;
    fn classify(&self, ground_truth: &str, output: &str) -> String;
}

/// Edit proposals driven by gap reports.
pub trait EditWriter: Send + Sync {
    /// One single-operator edit to the verifier registry targeting `target`
    /// (a unit id from the report), or `None` when the operator does not apply.
    fn propose_rule_edit(
        &self,
        op: EditOperator,
        target: &str,
        report: &GapReport,
        pair: &RegistryPair,
    ) -> Result<Option<RuleEdit>, ProviderError>;

    /// Agent-side edits materialized from a report replayed under a candidate routing.
    fn propose_agent_edits(
        &self,
        report: &GapReport,
        graph: &SkillGraph,
    ) -> Result<Vec<AgentEdit>, ProviderError>;
}
