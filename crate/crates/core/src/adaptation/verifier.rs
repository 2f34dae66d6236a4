use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Query, StepFlag};
use crate::evolution::VerifierRegistry;
use crate::graph::SkillUnit;
use crate::provider::{ProviderError, Verifier};
use crate::retrieval::ScoreTier;

/// Per-unit routing decision emitted by the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingAction {
    Accept,
    Decompose,
    Rewrite,
    Skip,
}

impl RoutingAction {
    pub const ALL: [RoutingAction; 4] = [Self::Accept, Self::Decompose, Self::Rewrite, Self::Skip];

    /// Wire token used in verifier prompts and replies.
    pub fn token(self) -> &'static str {
        match self {
            Self::Accept => "ACCEPT",
            Self::Decompose => "DECOMPOSE",
            Self::Rewrite => "REWRITE",
            Self::Skip => "SKIP",
        }
    }

    /// Terminal actions stop the walk below the unit.
    pub fn is_terminal(self) -> bool {
        self != Self::Decompose
    }
}

impl fmt::Display for RoutingAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Strict parse: the reply must be exactly one action token (case-insensitive,
/// surrounding whitespace ignored). Anything else is an error.
impl FromStr for RoutingAction {
    type Err = ProviderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        RoutingAction::ALL
            .into_iter()
            .find(|a| a.token().eq_ignore_ascii_case(t))
            .ok_or_else(|| ProviderError::Malformed(format!("not an action token: {t:?}")))
    }
}

/// Everything a verifier sees when routing one unit.
#[derive(Debug, Clone, Copy)]
pub struct RouteRequest<'a> {
    pub query: &'a Query,
    pub unit: &'a SkillUnit,
    /// RWR score relative to the query's maximum score, in `[0, 1]`.
    pub score: f64,
    /// Distance from the traversal root; roots are at depth 0.
    pub depth: usize,
    pub rules: &'a VerifierRegistry,
}

/// Asks the verifier for an action and enforces the routing contract:
/// failures become `Skip` with a flag, and `Decompose` on a unit without
/// children becomes `Rewrite`.
pub fn route(verifier: &dyn Verifier, req: &RouteRequest<'_>) -> (RoutingAction, Option<StepFlag>) {
    match verifier.route(req) {
        Ok(RoutingAction::Decompose) if req.unit.is_leaf() => (RoutingAction::Rewrite, None),
        Ok(a) => (a, None),
        Err(ProviderError::Malformed(_)) => (RoutingAction::Skip, Some(StepFlag::VerifierMalformed)),
        Err(_) => (RoutingAction::Skip, Some(StepFlag::VerifierFailed)),
    }
}

/// Default deterministic verifier: the registry's first matching rule, else
/// the score tier (high accepts, mid decomposes or rewrites a leaf, low skips).
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleVerifier;

impl Verifier for RuleVerifier {
    fn route(&self, req: &RouteRequest<'_>) -> Result<RoutingAction, ProviderError> {
        if let Some((_, rule)) = req.rules.first_match(req) {
            return Ok(rule.action);
        }
        Ok(match req.rules.thresholds.tier(req.score) {
            ScoreTier::High => RoutingAction::Accept,
            ScoreTier::Mid if req.unit.is_leaf() => RoutingAction::Rewrite,
            ScoreTier::Mid => RoutingAction::Decompose,
            ScoreTier::Low => RoutingAction::Skip,
        })
    }
}
