//! Direct dense solve of the RWR fixed point, used as an oracle for the
//! power iteration. Builds its own transition matrix from the edge lists.

use std::collections::BTreeMap;

use super::SimError;
use crate::graph::SkillGraph;
use crate::retrieval::{RwrConfig, ScoreVector, SeedDistribution};

pub const LINEAR_SOLVE_BOUND: usize = 200;

/// Solves `(I - (1 - alpha) Pᵀ) s = alpha p0`, where rows of `P` without
/// outgoing mass are replaced by `p0`.
pub fn rwr_linear_solve(graph: &SkillGraph, p0: &SeedDistribution, cfg: &RwrConfig) -> Result<ScoreVector, SimError> {
    let ids: Vec<&str> = graph.ids().collect();
    let n = ids.len();
    if n > LINEAR_SOLVE_BOUND {
        return Err(SimError::Config(format!("linear solve limited to {LINEAR_SOLVE_BOUND} nodes, got {n}")));
    }
    let pos: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut w = vec![vec![0.0f64; n]; n];
    for (a, b, e) in graph.hierarchical_edges().chain(graph.lateral_edges()) {
        let (Some(&i), Some(&j)) = (pos.get(a), pos.get(b)) else { continue };
        if i != j && e > 0.0 {
            w[i][j] += e;
            w[j][i] += e;
        }
    }
    let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();

    let mut restart = vec![0.0; n];
    for (id, &m) in &p0.entries {
        let &i = pos
            .get(id.as_str())
            .ok_or_else(|| SimError::Config(format!("seed `{id}` is not in the graph")))?;
        restart[i] = m;
    }

    let mut p = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        let mut total = 0.0;
        for j in 0..n {
            if w[i][j] > 0.0 {
                p[i][j] = w[i][j] / deg[j].powf(cfg.beta);
                total += p[i][j];
            }
        }
        if total > 0.0 {
            p[i].iter_mut().for_each(|x| *x /= total);
        } else {
            p[i].clone_from(&restart);
        }
    }

    // A = I - (1 - alpha) Pᵀ
    let walk = 1.0 - cfg.alpha;
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for r in 0..n {
        for c in 0..n {
            a[r][c] = if r == c { 1.0 } else { 0.0 } - walk * p[c][r];
        }
        a[r][n] = cfg.alpha * restart[r];
    }
    let s = gaussian_elimination(a)?;
    Ok(ScoreVector::from_entries(ids.iter().map(|s| s.to_string()).zip(s)))
}

/// Solves an augmented `n x (n + 1)` system with partial pivoting.
fn gaussian_elimination(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>, SimError> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty pivot range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(SimError::Singular);
        }
        a.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - tail) / a[r][r];
    }
    Ok(x)
}
