//! Deterministic in-process agent, metric and edit-writer providers.

use std::collections::BTreeSet;

use super::{GapReport, RegistryPair, RoutingRule, RuleEdit, RuleMatch};
use crate::adaptation::{Query, RoutingAction, SkillContext};
use crate::graph::{AgentEdit, EditOperator, SkillGraph};
use crate::provider::{AgentProvider, EditWriter, MetricProvider, ProviderError};
use crate::text::{substitute_tags, terms};

/// Answers with the sorted, deduplicated terms of the composed context.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConcatAgent;

impl AgentProvider for ConcatAgent {
    fn answer(&self, _query: &Query, context: &SkillContext) -> Result<String, ProviderError> {
        let words: BTreeSet<String> = context.entries.iter().flat_map(|e| terms(&e.content)).collect();
        Ok(words.into_iter().collect::<Vec<_>>().join(" "))
    }
}

/// Fraction of ground-truth terms present in the output.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenRecallMetric;

impl MetricProvider for TokenRecallMetric {
    fn score(&self, ground_truth: &str, output: &str) -> f64 {
        let want: BTreeSet<String> = terms(ground_truth).into_iter().collect();
        if want.is_empty() {
            return 1.0;
        }
        let got: BTreeSet<String> = terms(output).into_iter().collect();
        want.intersection(&got).count() as f64 / want.len() as f64
    }

    fn classify(&self, _ground_truth: &str, output: &str) -> String {
        if output.trim().is_empty() {
            "no-output".into()
        } else {
            "wrong-output".into()
        }
    }
}

/// Proposes edits read mechanically off a gap report.
///
/// Rule side: `Add` prepends a unit rule flipping the action the unit got in
/// the failed run; `Delete` drops the first rule naming the unit; `Update`
/// flips that rule's action; `Merge` folds it into the next rule sharing its
/// action. Agent side: every rewrite seen in the failed run is written back
/// with its tags substituted the same way.
#[derive(Debug, Clone, Copy, Default)]
pub struct MechanicalEditWriter;

/// Action to try instead of `a` on a unit.
fn flip(a: RoutingAction, leaf: bool) -> RoutingAction {
    match a {
        RoutingAction::Accept if leaf => RoutingAction::Rewrite,
        RoutingAction::Accept => RoutingAction::Decompose,
        RoutingAction::Decompose | RoutingAction::Rewrite | RoutingAction::Skip => RoutingAction::Accept,
    }
}

impl EditWriter for MechanicalEditWriter {
    fn propose_rule_edit(
        &self,
        op: EditOperator,
        target: &str,
        report: &GapReport,
        pair: &RegistryPair,
    ) -> Result<Option<RuleEdit>, ProviderError> {
        let leaf = pair.agent.unit(target).is_none_or(|u| u.is_leaf());
        let rules = &pair.verifier.rules;
        let own = rules.iter().position(|r| r.when.unit.as_deref() == Some(target));
        Ok(match op {
            EditOperator::Add => {
                let taken = report.action_of(target).unwrap_or(RoutingAction::Skip);
                Some(RuleEdit::Add {
                    index: 0,
                    rule: RoutingRule::new(RuleMatch::unit(target), flip(taken, leaf)),
                })
            }
            EditOperator::Delete => own.map(|index| RuleEdit::Delete { index }),
            EditOperator::Update => own.map(|index| {
                let mut rule = rules[index].clone();
                rule.action = flip(rule.action, leaf);
                RuleEdit::Update { index, rule }
            }),
            EditOperator::Merge => own.and_then(|first| {
                rules
                    .iter()
                    .enumerate()
                    .find(|(j, r)| *j != first && r.action == rules[first].action)
                    .map(|(second, _)| RuleEdit::Merge { first, second })
            }),
        })
    }

    fn propose_agent_edits(&self, report: &GapReport, graph: &SkillGraph) -> Result<Vec<AgentEdit>, ProviderError> {
        Ok(report
            .rewrites
            .iter()
            .filter_map(|(id, content)| {
                let unit = graph.unit(id)?;
                (*content != unit.content).then(|| AgentEdit::Update {
                    id: id.clone(),
                    content: Some(content.clone()),
                    tags: Some(substitute_tags(&unit.tags, &report.query.substitutions)),
                    embedding: None,
                })
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recall_counts_ground_truth_terms() {
        let m = TokenRecallMetric;
        assert_eq!(m.score("a b", "b a c"), 1.0);
        assert_eq!(m.score("a b c d", "a"), 0.25);
        assert_eq!(m.classify("a", ""), "no-output");
        assert_eq!(m.classify("a", "b"), "wrong-output");
    }

    #[test]
    fn flip_never_decomposes_a_leaf() {
        for a in RoutingAction::ALL {
            assert_ne!(flip(a, true), RoutingAction::Decompose);
            assert_ne!(flip(a, false), a);
        }
    }
}
