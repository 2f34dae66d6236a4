#![allow(dead_code)]

use skilltree_core::adaptation::{RuleVerifier, SubstitutionWriter};
use skilltree_core::evolution::{ConcatAgent, EvolutionProviders, MechanicalEditWriter, TokenRecallMetric};
use skilltree_core::provider::ZeroConfidence;
use skilltree_core::sim::{gen_synthetic_library, SimConfig};
use skilltree_core::{HashEmbedder, Providers, SkillGraph};

pub fn embedder() -> HashEmbedder {
    HashEmbedder::new(32)
}

pub fn library(seed: u64, layer_sizes: [usize; 4], emb: &HashEmbedder) -> (SkillGraph, SimConfig) {
    let cfg = SimConfig {
        seed,
        layer_sizes,
        ..SimConfig::default()
    };
    (gen_synthetic_library(&cfg, emb), cfg)
}

pub fn mock_providers(emb: &HashEmbedder) -> EvolutionProviders<'_> {
    EvolutionProviders {
        adapt: Providers {
            embedder: emb,
            confidence: &ZeroConfidence,
            verifier: &RuleVerifier,
            writer: &SubstitutionWriter,
        },
        agent: &ConcatAgent,
        metric: &TokenRecallMetric,
        editor: &MechanicalEditWriter,
    }
}

/// Dense Gaussian elimination with partial pivoting. Kept separate from the
/// library's solver so the two can check each other.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}
