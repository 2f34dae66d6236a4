use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AdaptationTrace, RoutingAction};
use crate::graph::{Layer, SkillGraph};
use crate::retrieval::ScoreVector;
use crate::text::token_count;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub id: String,
    pub layer: Layer,
    pub score: f64,
    /// Content injected into the prompt: the rewrite when there is one.
    pub content: String,
    pub rewritten: bool,
}

/// The composed skill context for one query.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SkillContext {
    pub entries: Vec<ContextEntry>,
    pub tokens: usize,
}

impl SkillContext {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    /// Plain-text rendering, coarse to fine.
    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("[{} {}] {}", e.layer, e.id, e.content))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Fully compatible units plus the accepted and rewritten units of the
/// trace, one entry per id, ordered by (layer, score descending, id).
pub fn compose(
    full: &BTreeSet<String>,
    trace: &AdaptationTrace,
    scores: &ScoreVector,
    graph: &SkillGraph,
) -> SkillContext {
    let mut content: BTreeMap<&str, (String, bool)> = BTreeMap::new();
    for id in full {
        if let Some(u) = graph.unit(id) {
            content.insert(id, (u.content.clone(), false));
        }
    }
    for step in &trace.steps {
        let Some(u) = graph.unit(&step.unit) else { continue };
        match (step.action, &step.rewritten) {
            (RoutingAction::Rewrite, Some(text)) => {
                content.insert(&step.unit, (text.clone(), true));
            }
            (RoutingAction::Accept, _) => {
                content.entry(&step.unit).or_insert_with(|| (u.content.clone(), false));
            }
            _ => {}
        }
    }
    let mut entries: Vec<ContextEntry> = content
        .into_iter()
        .map(|(id, (text, rewritten))| ContextEntry {
            id: id.to_string(),
            layer: graph.unit(id).map_or(Layer::PRIMITIVE, |u| u.layer),
            score: scores.get(id),
            content: text,
            rewritten,
        })
        .collect();
    entries.sort_by(|a, b| {
        a.layer
            .cmp(&b.layer)
            .then(b.score.total_cmp(&a.score))
            .then_with(|| a.id.cmp(&b.id))
    });
    let tokens = entries.iter().map(|e| token_count(&e.content)).sum();
    SkillContext { entries, tokens }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub lambda: f64,
    pub token_budget: usize,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            token_budget: 8192,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.token_budget == 0 {
            return Err("token_budget must be positive".into());
        }
        Ok(())
    }
}

/// Normalized cost in `[0, 1]`; depends on the trace only through its
/// visited and rewritten content.
pub fn adaptation_cost(trace: &AdaptationTrace, cfg: &CostConfig) -> f64 {
    (cfg.lambda * trace.token_cost as f64 / cfg.token_budget as f64).min(1.0)
}
