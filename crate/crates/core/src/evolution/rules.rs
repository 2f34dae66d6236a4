//! The verifier registry: an ordered list of routing rules plus the score-tier
//! fallback thresholds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adaptation::{RouteRequest, RoutingAction};
use crate::graph::{EditError, EditOperator, Layer};
use crate::retrieval::{PartitionConfig, ScoreTier};

/// Conjunctive predicate over a routing request. Absent fields match anything.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleMatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer: Option<Layer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tier: Option<ScoreTier>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query_term: Option<String>,
}

impl RuleMatch {
    pub fn unit(id: impl Into<String>) -> Self {
        Self {
            unit: Some(id.into()),
            ..Self::default()
        }
    }

    pub fn matches(&self, req: &RouteRequest<'_>, tier: ScoreTier) -> bool {
        self.unit.as_ref().is_none_or(|u| *u == req.unit.id)
            && self.layer.is_none_or(|l| l == req.unit.layer)
            && self.tag.as_ref().is_none_or(|t| req.unit.tags.contains(t))
            && self.tier.is_none_or(|t| t == tier)
            && self
                .query_term
                .as_ref()
                .is_none_or(|q| req.query.terms().contains(q))
    }

    /// The most specific predicate implied by both: fields on which they agree.
    pub fn generalize(&self, other: &RuleMatch) -> RuleMatch {
        fn keep<T: PartialEq + Clone>(a: &Option<T>, b: &Option<T>) -> Option<T> {
            if a == b {
                a.clone()
            } else {
                None
            }
        }
        RuleMatch {
            unit: keep(&self.unit, &other.unit),
            layer: keep(&self.layer, &other.layer),
            tag: keep(&self.tag, &other.tag),
            tier: keep(&self.tier, &other.tier),
            query_term: keep(&self.query_term, &other.query_term),
        }
    }

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(u) = &self.unit {
            parts.push(format!("unit={u}"));
        }
        if let Some(l) = self.layer {
            parts.push(format!("layer={}", l.0));
        }
        if let Some(t) = &self.tag {
            parts.push(format!("tag={t}"));
        }
        if let Some(t) = self.tier {
            parts.push(format!("tier={}", tier_name(t)));
        }
        if let Some(q) = &self.query_term {
            parts.push(format!("query_term={q}"));
        }
        if parts.is_empty() {
            "any unit".into()
        } else {
            parts.join(", ")
        }
    }
}

fn tier_name(t: ScoreTier) -> &'static str {
    match t {
        ScoreTier::High => "high",
        ScoreTier::Mid => "mid",
        ScoreTier::Low => "low",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoutingRule {
    pub when: RuleMatch,
    pub action: RoutingAction,
}

impl RoutingRule {
    pub fn new(when: RuleMatch, action: RoutingAction) -> Self {
        Self { when, action }
    }
}

/// A single-operator edit against the verifier registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RuleEdit {
    Add { index: usize, rule: RoutingRule },
    Delete { index: usize },
    Update { index: usize, rule: RoutingRule },
    /// Replace two rules sharing an action with their generalization,
    /// placed at the smaller index.
    Merge { first: usize, second: usize },
}

impl RuleEdit {
    pub fn operator(&self) -> EditOperator {
        match self {
            Self::Add { .. } => EditOperator::Add,
            Self::Delete { .. } => EditOperator::Delete,
            Self::Update { .. } => EditOperator::Update,
            Self::Merge { .. } => EditOperator::Merge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifierRegistry {
    #[serde(default)]
    pub rules: Vec<RoutingRule>,
    #[serde(default)]
    pub thresholds: PartitionConfig,
}

impl VerifierRegistry {
    pub fn new(rules: Vec<RoutingRule>, thresholds: PartitionConfig) -> Self {
        Self { rules, thresholds }
    }

    /// First matching rule, if any.
    pub fn first_match(&self, req: &RouteRequest<'_>) -> Option<(usize, &RoutingRule)> {
        let tier = self.thresholds.tier(req.score);
        self.rules
            .iter()
            .enumerate()
            .find(|(_, r)| r.when.matches(req, tier))
    }

    pub fn validate(&self) -> Result<(), String> {
        self.thresholds.validate()?;
        for (i, r) in self.rules.iter().enumerate() {
            if r.when.layer.is_some_and(|l| !l.is_valid()) {
                return Err(format!("rule {i}: invalid layer"));
            }
            let empty = |s: &Option<String>| s.as_deref().is_some_and(str::is_empty);
            if empty(&r.when.unit) || empty(&r.when.tag) || empty(&r.when.query_term) {
                return Err(format!("rule {i}: empty match field"));
            }
        }
        Ok(())
    }

    pub fn apply(&self, edit: &RuleEdit) -> Result<VerifierRegistry, EditError> {
        let mut out = self.clone();
        let len = out.rules.len();
        let check = |index: usize, bound: usize| {
            if index < bound {
                Ok(())
            } else {
                Err(EditError::RuleIndex { index, len })
            }
        };
        match edit {
            RuleEdit::Add { index, rule } => {
                check(*index, len + 1)?;
                out.rules.insert(*index, rule.clone());
            }
            RuleEdit::Delete { index } => {
                check(*index, len)?;
                out.rules.remove(*index);
            }
            RuleEdit::Update { index, rule } => {
                check(*index, len)?;
                out.rules[*index] = rule.clone();
            }
            RuleEdit::Merge { first, second } => {
                check(*first, len)?;
                check(*second, len)?;
                if first == second {
                    return Err(EditError::RuleIndex { index: *second, len });
                }
                let (lo, hi) = ((*first).min(*second), (*first).max(*second));
                if out.rules[lo].action != out.rules[hi].action {
                    return Err(EditError::RuleActionMismatch);
                }
                let merged = RoutingRule::new(
                    out.rules[lo].when.generalize(&out.rules[hi].when),
                    out.rules[lo].action,
                );
                out.rules.remove(hi);
                out.rules[lo] = merged;
            }
        }
        out.validate().map_err(EditError::InvalidRule)?;
        Ok(out)
    }

    /// Numbered plain-text rendering, as shown to an external verifier.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.rules.iter().enumerate() {
            let _ = writeln!(s, "{}. when {} -> {}", i + 1, r.when.describe(), r.action.token());
        }
        let _ = writeln!(
            s,
            "otherwise: relative score >= {} -> ACCEPT; >= {} -> DECOMPOSE (REWRITE for primitives); else SKIP",
            self.thresholds.theta_full, self.thresholds.theta_part
        );
        s
    }
}
