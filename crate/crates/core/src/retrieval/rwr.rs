//! Degree-corrected random walk with restart.
//!
//! Every edge is walkable in both directions. The raw mass from `i` to `j` is
//! `e_ij / deg(j)^beta`, where `deg(j)` is `j`'s total incident weight; rows are
//! then normalized. Rows without outgoing mass send everything back to the seed
//! distribution. `beta = 0` is plain personalized PageRank.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RetrievalError, ScoreVector, SeedDistribution};
use crate::graph::SkillGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RwrConfig {
    /// Restart probability, in `(0, 1]`.
    pub alpha: f64,
    /// Degree-correction exponent, `>= 0`.
    pub beta: f64,
    /// Sup-norm convergence tolerance between successive iterates.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for RwrConfig {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            beta: 0.5,
            tol: 1e-8,
            max_iters: 200,
        }
    }
}

impl RwrConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.tol > 0.0) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// Row-stochastic transition structure over the graph's units (id order).
/// Dangling rows are empty and handled by the caller.
#[derive(Debug, Clone)]
pub struct Transition {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Transition {
    pub fn build(graph: &SkillGraph, beta: f64) -> Self {
        let ids: Vec<String> = graph.ids().map(str::to_string).collect();
        let index: BTreeMap<&str, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let n = ids.len();

        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (a, b, w) in graph.hierarchical_edges().chain(graph.lateral_edges()) {
            let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) else {
                continue;
            };
            if i == j || w <= 0.0 {
                continue;
            }
            *adj[i].entry(j).or_default() += w;
            *adj[j].entry(i).or_default() += w;
        }
        let degree: Vec<f64> = adj.iter().map(|r| r.values().sum()).collect();

        let rows = adj
            .iter()
            .map(|row| {
                let raw: Vec<(usize, f64)> = row
                    .iter()
                    .map(|(&j, &w)| (j, w / degree[j].powf(beta)))
                    .filter(|(_, m)| *m > 0.0 && m.is_finite())
                    .collect();
                let total: f64 = raw.iter().map(|(_, m)| m).sum();
                if total > 0.0 {
                    raw.into_iter().map(|(j, m)| (j, m / total)).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Self { ids, rows }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Dense restart vector aligned with `ids`; errors on unknown seed ids.
pub(crate) fn dense_seed(ids: &[String], p0: &SeedDistribution) -> Result<Vec<f64>, RetrievalError> {
    let index: BTreeMap<&str, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut v = vec![0.0; ids.len()];
    for (id, &m) in &p0.entries {
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| RetrievalError::UnknownSeed(id.clone()))?;
        v[i] = m;
    }
    Ok(v)
}

/// Power iteration for `s = (1 - alpha) P^T s + alpha p0`, starting from `p0`.
/// Non-convergence is reported through [`ScoreVector::converged`], not as an error.
pub fn degree_corrected_rwr(
    graph: &SkillGraph,
    p0: &SeedDistribution,
    cfg: &RwrConfig,
) -> Result<ScoreVector, RetrievalError> {
    cfg.validate().map_err(RetrievalError::Config)?;
    let t = Transition::build(graph, cfg.beta);
    let restart = dense_seed(&t.ids, p0)?;
    let n = t.len();

    let mut s = restart.clone();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut dangling = 0.0;
        for (i, row) in t.rows.iter().enumerate() {
            if row.is_empty() {
                dangling += s[i];
                continue;
            }
            for &(j, p) in row {
                next[j] += s[i] * p;
            }
        }
        let walk = 1.0 - cfg.alpha;
        for (x, r) in next.iter_mut().zip(&restart) {
            *x = walk * (*x + dangling * r) + cfg.alpha * r;
        }
        residual = s
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut s, &mut next);
        if residual < cfg.tol {
            break;
        }
    }

    Ok(ScoreVector {
        entries: t.ids.into_iter().zip(s).collect(),
        iterations,
        residual,
        converged: residual < cfg.tol,
    })
}
