//! Seed retrieval, degree-corrected random walk with restart and tiering.

mod embed;
mod partition;
mod rwr;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{SkillGraph, SkillUnit};
use crate::provider::{EmbeddingProvider, ProviderError};

pub use embed::{cosine, Embedding, HashEmbedder, DEFAULT_EMBEDDING_DIM};
pub use partition::{partition, CompatibilityPartition, PartitionConfig, ScoreTier};
pub use rwr::{degree_corrected_rwr, RwrConfig, Transition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("number of seeds must be positive")]
    InvalidK,
    #[error("cannot retrieve from an empty graph")]
    EmptyGraph,
    #[error("seed `{0}` is not a unit of the graph")]
    UnknownSeed(String),
    #[error("score vector is empty")]
    EmptyScores,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Restart distribution `p0` over unit ids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeedDistribution {
    pub query: String,
    pub entries: BTreeMap<String, f64>,
}

impl SeedDistribution {
    /// All mass on one unit.
    pub fn point(id: impl Into<String>) -> Self {
        Self {
            query: String::new(),
            entries: [(id.into(), 1.0)].into_iter().collect(),
        }
    }

    /// Normalizes nonnegative weights; repeated ids add up and zero-weight
    /// entries are dropped.
    pub fn from_weights(query: impl Into<String>, weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut raw: BTreeMap<String, f64> = BTreeMap::new();
        for (k, w) in weights.into_iter().filter(|(_, w)| *w > 0.0) {
            *raw.entry(k).or_default() += w;
        }
        let total: f64 = raw.values().sum();
        Self {
            query: query.into(),
            entries: raw.into_iter().map(|(k, w)| (k, w / total)).collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }
}

/// Stationary scores `s(u)` plus solver diagnostics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreVector {
    pub entries: BTreeMap<String, f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl ScoreVector {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            entries: entries.into_iter().collect(),
            iterations: 0,
            residual: 0.0,
            converged: true,
        }
    }

    pub fn get(&self, id: &str) -> f64 {
        self.entries.get(id).copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.entries.values().copied().fold(0.0, f64::max)
    }

    /// `s(u) / s_max`, or zero when every score is zero.
    pub fn relative(&self, id: &str) -> f64 {
        let m = self.max();
        if m > 0.0 {
            self.get(id) / m
        } else {
            0.0
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Largest absolute difference over the union of ids.
    pub fn sup_distance(&self, other: &ScoreVector) -> f64 {
        self.entries
            .keys()
            .chain(other.entries.keys())
            .map(|k| (self.get(k) - other.get(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Stored embedding of a unit, or a fresh one computed from its content.
pub fn unit_embedding(
    unit: &SkillUnit,
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<f64>, ProviderError> {
    match &unit.embedding {
        Some(e) => Ok(e.clone()),
        None => Ok(embedder.embed(&unit.content)?.vector),
    }
}

/// Clamped cosine similarity of every unit to the query, in id order.
pub fn query_similarities(
    query: &str,
    graph: &SkillGraph,
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<(String, f64)>, RetrievalError> {
    let q = embedder.embed(query)?;
    graph
        .units()
        .map(|u| {
            let e = unit_embedding(u, embedder)?;
            Ok((u.id.clone(), cosine(&q.vector, &e).clamp(0.0, 1.0)))
        })
        .collect()
}

/// Top-`k` units by clamped query similarity, with mass proportional to
/// similarity. Ties go to the smaller id. When every similarity is zero the
/// mass is uniform over the `k` smallest ids.
pub fn seed_retrieve(
    query: &str,
    graph: &SkillGraph,
    k: usize,
    embedder: &dyn EmbeddingProvider,
) -> Result<SeedDistribution, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if graph.is_empty() {
        return Err(RetrievalError::EmptyGraph);
    }
    let mut sims = query_similarities(query, graph, embedder)?;
    if sims.iter().all(|(_, s)| *s <= 0.0) {
        let n = k.min(sims.len());
        return Ok(SeedDistribution::from_weights(
            query,
            sims.into_iter().take(n).map(|(id, _)| (id, 1.0)),
        ));
    }
    // stable sort keeps id order among equal similarities
    sims.sort_by(|a, b| b.1.total_cmp(&a.1));
    sims.truncate(k);
    Ok(SeedDistribution::from_weights(query, sims))
}
