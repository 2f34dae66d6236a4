use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::walk::{frontier_walk, WalkBudget};
use super::{route, Query, RouteRequest, RoutingAction};
use crate::evolution::VerifierRegistry;
use crate::graph::{SkillGraph, SkillUnit};
use crate::provider::{ProviderError, Verifier, Writer};
use crate::retrieval::ScoreVector;
use crate::text::{apply_substitutions, token_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepFlag {
    BudgetExhausted,
    WriterFailed,
    VerifierFailed,
    VerifierMalformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub unit: String,
    pub action: RoutingAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rewritten: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<StepFlag>,
    /// Token estimate charged for this step.
    pub tokens: usize,
}

/// Per-query record of the retrieval stage and the verifier-driven walk.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdaptationTrace {
    pub triggered: bool,
    /// Seed ids from top-K retrieval.
    pub seeds: Vec<String>,
    /// Fully compatible units injected directly.
    pub full: Vec<String>,
    /// Partially relevant roots, in traversal order.
    pub roots: Vec<String>,
    pub steps: Vec<TraceStep>,
    /// `N_vis`.
    pub visited: usize,
    /// `N_rw`.
    pub rewrites: usize,
    /// `R`: accepted or rewritten units.
    pub retained: BTreeSet<String>,
    /// `B`: rewritten units.
    pub rewritten: BTreeSet<String>,
    pub budget_exhausted: bool,
    pub token_cost: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl AdaptationTrace {
    pub fn action_of(&self, id: &str) -> Option<RoutingAction> {
        self.steps.iter().find(|s| s.unit == id).map(|s| s.action)
    }

    /// Routing actions in step order.
    pub fn actions(&self) -> Vec<(String, RoutingAction)> {
        self.steps.iter().map(|s| (s.unit.clone(), s.action)).collect()
    }

    /// Every way this trace breaks its own contract; empty when consistent.
    pub fn contract_violations(&self, graph: &SkillGraph) -> Vec<String> {
        let mut out = Vec::new();
        if self.visited != self.steps.len() {
            out.push(format!("N_vis {} != {} steps", self.visited, self.steps.len()));
        }
        let rw = self
            .steps
            .iter()
            .filter(|s| s.action == RoutingAction::Rewrite)
            .count();
        if rw != self.rewrites {
            out.push(format!("N_rw {} != {rw} rewrite steps", self.rewrites));
        }
        if !self.rewritten.is_subset(&self.retained) {
            out.push("B is not a subset of R".into());
        }
        if self.rewrites > self.visited {
            out.push("more rewrites than visits".into());
        }
        out.extend(self.frontier_violations(graph));
        if !self.budget_exhausted {
            let seen: BTreeSet<&str> = self.steps.iter().map(|s| s.unit.as_str()).collect();
            for s in self.steps.iter().filter(|s| s.action == RoutingAction::Decompose) {
                if let Some(u) = graph.unit(&s.unit) {
                    for c in u.children.iter().filter(|c| !seen.contains(c.as_str())) {
                        out.push(format!("child {c} of decomposed {} never visited", s.unit));
                    }
                }
            }
        }
        out
    }

    /// Non-root steps whose recorded parent was not decomposed earlier, or
    /// is not a graph parent: such a node would lie below a terminal decision.
    pub fn frontier_violations(&self, graph: &SkillGraph) -> Vec<String> {
        let mut decided: BTreeMap<&str, RoutingAction> = BTreeMap::new();
        let mut out = Vec::new();
        for s in &self.steps {
            if let Some(p) = &s.parent {
                let is_child = graph.unit(p).is_some_and(|u| u.children.contains(&s.unit));
                match decided.get(p.as_str()) {
                    Some(RoutingAction::Decompose) if is_child => {}
                    other => out.push(format!(
                        "{} visited below {p} ({})",
                        s.unit,
                        other.map_or("undecided".to_string(), |a| a.token().to_string())
                    )),
                }
            }
            decided.insert(&s.unit, s.action);
        }
        out
    }
}

#[derive(Debug, Default)]
struct StepPayload {
    rewritten: Option<String>,
    flag: Option<StepFlag>,
}

/// Verifier-driven walk over the decomposition subtrees of `roots`.
#[allow(clippy::too_many_arguments)]
pub fn traverse(
    graph: &SkillGraph,
    roots: &[String],
    scores: &ScoreVector,
    query: &Query,
    rules: &VerifierRegistry,
    verifier: &dyn Verifier,
    writer: &dyn Writer,
    budget: WalkBudget,
) -> AdaptationTrace {
    let max_score = scores.max();
    let mut depth: BTreeMap<String, usize> = BTreeMap::new();
    let outcome = frontier_walk(
        roots.iter().filter(|r| graph.contains(r)).cloned(),
        |id: &String| graph.unit(id).map(|u| u.children.clone()).unwrap_or_default(),
        |id: &String, parent: Option<&String>| {
            let unit = graph.unit(id).expect("walk only yields graph units");
            let d = parent.and_then(|p| depth.get(p)).map_or(0, |d| d + 1);
            depth.insert(id.clone(), d);
            let score = if max_score > 0.0 { scores.get(id) / max_score } else { 0.0 };
            let req = RouteRequest {
                query,
                unit,
                score,
                depth: d,
                rules,
            };
            let (action, flag) = route(verifier, &req);
            if action != RoutingAction::Rewrite {
                return (action, StepPayload { rewritten: None, flag });
            }
            match rewrite(writer, query, unit) {
                Ok(text) => (
                    action,
                    StepPayload {
                        rewritten: Some(text),
                        flag,
                    },
                ),
                Err(_) => (
                    RoutingAction::Skip,
                    StepPayload {
                        rewritten: None,
                        flag: Some(StepFlag::WriterFailed),
                    },
                ),
            }
        },
        budget,
    );

    let mut trace = AdaptationTrace {
        triggered: true,
        roots: roots.to_vec(),
        budget_exhausted: outcome.budget_exhausted,
        ..AdaptationTrace::default()
    };
    for step in outcome.steps {
        let content = graph.unit(&step.node).map_or("", |u| u.content.as_str());
        let mut tokens = if step.budget_skip { 0 } else { token_count(content) + 1 };
        match step.action {
            RoutingAction::Accept => {
                trace.retained.insert(step.node.clone());
            }
            RoutingAction::Rewrite => {
                trace.retained.insert(step.node.clone());
                trace.rewritten.insert(step.node.clone());
                trace.rewrites += 1;
                tokens += step.payload.rewritten.as_deref().map_or(0, token_count) + 1;
            }
            RoutingAction::Decompose | RoutingAction::Skip => {}
        }
        trace.token_cost += tokens;
        trace.steps.push(TraceStep {
            unit: step.node,
            action: step.action,
            parent: step.parent,
            rewritten: step.payload.rewritten,
            flag: if step.budget_skip {
                Some(StepFlag::BudgetExhausted)
            } else {
                step.payload.flag
            },
            tokens,
        });
    }
    trace.visited = trace.steps.len();
    trace
}

/// Query-local adaptation of one unit; never written back to the registry.
pub fn rewrite(writer: &dyn Writer, query: &Query, unit: &SkillUnit) -> Result<String, ProviderError> {
    writer.rewrite(query, unit)
}

/// Default writer: applies the query's substitution pairs to the content.
#[derive(Debug, Clone, Copy, Default)]
pub struct SubstitutionWriter;

impl Writer for SubstitutionWriter {
    fn rewrite(&self, query: &Query, unit: &SkillUnit) -> Result<String, ProviderError> {
        Ok(apply_substitutions(&unit.content, &query.substitutions))
    }
}
