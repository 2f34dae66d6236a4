//! Synthetic libraries and tasks with known ground truth, scripted providers
//! and exhaustive oracles.

mod coverage;
mod harness;
mod library;
mod linear;
mod scripted;
mod select;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptation::{AdaptError, Query};
use crate::evolution::Task;

pub use coverage::{
    context_coverage, coverage_utility, coverage_with_rewrites, rewrite_gain, rewritten_tags, surrogate_utility,
    tag_coverage,
};
pub use harness::{
    ablation, full_tree_size, greedy_trials, measure_errors, measure_visited, prop1, prop2, prop3, registry_digest,
    to_csv, AblationReport,
    AblationRow, AblationSummary, ErrorRow, GreedyRow, Prop1Report, Prop2Report, Prop2Row, Prop3Report, VisitRow,
    VisitSummary,
};
pub use library::{gen_synthetic_library, gen_tasks, missing_tag, private_tag, unit_id, vocab_tag};
pub use linear::{rwr_linear_solve, LINEAR_SOLVE_BOUND};
pub use scripted::{oracle_plan, ScriptedVerifier, VerifierMode};
pub use select::{brute_force_select, exact_gain, greedy_select, Candidate, Selection, ENUMERATION_BOUND};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown verifier mode `{0}`")]
    UnknownMode(String),
    #[error("{n} candidates exceed the enumeration bound of {max}")]
    TooManyCandidates { n: usize, max: usize },
    #[error("singular linear system")]
    Singular,
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Adapt(#[from] AdaptError),
}

/// A task whose utility is tag coverage of `required`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub id: String,
    pub query: Query,
    pub required: BTreeSet<String>,
    pub ground_truth: String,
}

impl SyntheticTask {
    pub fn to_task(&self) -> Task {
        Task {
            id: self.id.clone(),
            query: self.query.clone(),
            ground_truth: self.ground_truth.clone(),
            required_tags: self.required.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub seed: u64,
    /// Units per layer, policy first.
    pub layer_sizes: [usize; 4],
    /// Branching factor `b` of the visit-count trees.
    pub branching: usize,
    /// Depths `D` of the visit-count trees.
    pub depths: Vec<u32>,
    /// Decompose probability `rho`.
    pub rho: f64,
    pub trials: usize,
    pub vocab: usize,
    pub tags_per_unit: usize,
    pub tasks: usize,
    pub anchors_per_task: usize,
    pub substitutions_per_task: usize,
    /// Evolution runs and iterations per run.
    pub runs: usize,
    pub iterations: usize,
    /// Random coverage instances and their size limit.
    pub instances: usize,
    pub max_candidates: usize,
    pub noise: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            layer_sizes: [1, 3, 9, 27],
            branching: 2,
            depths: vec![5, 9, 15],
            rho: 0.25,
            trials: 1000,
            vocab: 24,
            tags_per_unit: 2,
            tasks: 20,
            anchors_per_task: 3,
            substitutions_per_task: 2,
            runs: 100,
            iterations: 20,
            instances: 1000,
            max_candidates: 12,
            noise: vec![0.01, 0.05],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if self.branching == 0 {
            return bad("branching must be positive".into());
        }
        if self.rho * self.branching as f64 >= 1.0 {
            return bad(format!("rho * b must be below 1, got {}", self.rho * self.branching as f64));
        }
        if self.layer_sizes.contains(&0) {
            return bad("every layer needs at least one unit".into());
        }
        if self.vocab == 0 || self.anchors_per_task == 0 {
            return bad("vocab and anchors_per_task must be positive".into());
        }
        if self.trials == 0 || self.runs == 0 || self.iterations == 0 || self.instances == 0 {
            return bad("trial, run, iteration and instance counts must be positive".into());
        }
        if self.max_candidates == 0 || self.max_candidates > ENUMERATION_BOUND {
            return bad(format!("max_candidates must lie in 1..={ENUMERATION_BOUND}"));
        }
        if self.noise.iter().any(|e| !(*e >= 0.0)) {
            return bad("noise levels must be non-negative".into());
        }
        Ok(())
    }
}

/// Calibration errors of retrieval seeds, RWR ranking and verifier actions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorEstimates {
    pub eps_ret: f64,
    pub eps_rwr: f64,
    pub eps_ver: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_b_must_stay_below_one() {
        let cfg = SimConfig {
            rho: 0.5,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }
}
