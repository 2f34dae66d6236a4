use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{RetrievalError, ScoreVector};

/// Relative tier thresholds on `s / s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionConfig {
    pub theta_full: f64,
    pub theta_part: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            theta_full: 0.7,
            theta_part: 0.2,
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 <= self.theta_part && self.theta_part < self.theta_full && self.theta_full <= 1.0) {
            return Err(format!(
                "thresholds must satisfy 0 <= theta_part < theta_full <= 1, got ({}, {})",
                self.theta_part, self.theta_full
            ));
        }
        Ok(())
    }

    pub fn tier(&self, relative: f64) -> ScoreTier {
        if relative >= self.theta_full {
            ScoreTier::High
        } else if relative >= self.theta_part {
            ScoreTier::Mid
        } else {
            ScoreTier::Low
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreTier {
    High,
    Mid,
    Low,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CompatibilityPartition {
    pub full: BTreeSet<String>,
    pub partial: BTreeSet<String>,
    pub mismatched: BTreeSet<String>,
    pub theta_full: f64,
    pub theta_part: f64,
}

/// Splits units with nonzero score into three tiers relative to the maximum score.
pub fn partition(
    scores: &ScoreVector,
    cfg: &PartitionConfig,
) -> Result<CompatibilityPartition, RetrievalError> {
    cfg.validate().map_err(RetrievalError::Config)?;
    if scores.entries.is_empty() {
        return Err(RetrievalError::EmptyScores);
    }
    let mut out = CompatibilityPartition {
        theta_full: cfg.theta_full,
        theta_part: cfg.theta_part,
        ..Default::default()
    };
    let max = scores.max();
    if max <= 0.0 {
        return Ok(out);
    }
    for (id, &s) in &scores.entries {
        if s <= 0.0 {
            continue;
        }
        let set = match cfg.tier(s / max) {
            ScoreTier::High => &mut out.full,
            ScoreTier::Mid => &mut out.partial,
            ScoreTier::Low => &mut out.mismatched,
        };
        set.insert(id.clone());
    }
    Ok(out)
}
