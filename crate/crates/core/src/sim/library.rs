//! Seeded synthetic skill libraries and tasks.
//!
//! Ground truth lives entirely in tags. Every unit holds a few tags from a
//! shared vocabulary plus one private tag nobody else has. A task requires
//! some vocabulary tags and some "missing" tags no unit holds; a missing tag
//! can only be covered by rewriting the one unit whose private tag a
//! substitution maps onto it. Rewrite gains are therefore additive.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SimConfig, SyntheticTask};
use crate::adaptation::Query;
use crate::graph::{build_edges, GraphConfig, Layer, SkillGraph, SkillUnit};
use crate::provider::EmbeddingProvider;
use crate::text::Substitution;

const VERBS: [&str; 8] = ["locate", "open", "inspect", "move", "check", "prepare", "apply", "verify"];

pub fn unit_id(layer: u8, index: usize) -> String {
    format!("u{layer}n{index:05}")
}

/// The tag only `unit_id(layer, index)` holds.
pub fn private_tag(layer: u8, index: usize) -> String {
    format!("o{layer}n{index:05}")
}

pub fn vocab_tag(i: usize) -> String {
    format!("t{i:03}")
}

pub fn missing_tag(i: usize) -> String {
    format!("x{i:03}")
}

/// Four-layer library with `cfg.layer_sizes`. Unit `j` of layer `l + 1` hangs
/// under unit `j * n_l / n_(l+1)` of layer `l`, so sizes `(1, b, b², b³)`
/// give a full b-ary tree.
pub fn gen_synthetic_library(cfg: &SimConfig, embedder: &dyn EmbeddingProvider) -> SkillGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes = cfg.layer_sizes;
    let mut units = Vec::new();
    for (l, &n) in sizes.iter().enumerate() {
        let layer = l as u8 + 1;
        for j in 0..n {
            let mut tags: BTreeSet<String> = (0..cfg.tags_per_unit)
                .map(|_| vocab_tag(rng.random_range(0..cfg.vocab)))
                .collect();
            tags.insert(private_tag(layer, j));
            let verb = VERBS[rng.random_range(0..VERBS.len())];
            let content = format!("{verb} {}", tags.iter().cloned().collect::<Vec<_>>().join(" "));
            let children: Vec<String> = match sizes.get(l + 1) {
                Some(&next) => (0..next)
                    .filter(|&c| c * n / next == j)
                    .map(|c| unit_id(layer + 1, c))
                    .collect(),
                None => Vec::new(),
            };
            units.push(
                SkillUnit::new(unit_id(layer, j), Layer(layer), content)
                    .with_children(children)
                    .with_tags(tags),
            );
        }
    }
    build_edges(units, embedder, GraphConfig::default()).expect("generated library is valid by construction")
}

/// `count` tasks over `graph`, deterministic in `seed`.
pub fn gen_tasks(graph: &SkillGraph, cfg: &SimConfig, seed: u64, count: usize) -> Vec<SyntheticTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let units: Vec<&SkillUnit> = graph.units().collect();
    (0..count)
        .map(|i| {
            // required vocabulary tags come from a few anchor units so that
            // coverage is achievable
            let mut required = BTreeSet::new();
            for _ in 0..cfg.anchors_per_task {
                let u = units.choose(&mut rng).expect("library is non-empty");
                let vocab: Vec<&String> = u.tags.iter().filter(|t| t.starts_with('t')).collect();
                if let Some(t) = vocab.choose(&mut rng) {
                    required.insert((*t).clone());
                }
            }
            if required.is_empty() {
                required.insert(vocab_tag(rng.random_range(0..cfg.vocab)));
            }
            let mut hosts: Vec<&SkillUnit> = units.clone();
            hosts.shuffle(&mut rng);
            let mut substitutions = Vec::new();
            for (k, host) in hosts.iter().take(cfg.substitutions_per_task).enumerate() {
                let to = missing_tag(i * cfg.substitutions_per_task + k);
                let from = host
                    .tags
                    .iter()
                    .find(|t| t.starts_with('o'))
                    .expect("every unit has a private tag")
                    .clone();
                required.insert(to.clone());
                substitutions.push(Substitution::new(from, to));
            }
            let text = format!(
                "task {} {}",
                required.iter().filter(|t| t.starts_with('t')).cloned().collect::<Vec<_>>().join(" "),
                substitutions.iter().map(|s| s.from.as_str()).collect::<Vec<_>>().join(" ")
            );
            SyntheticTask {
                id: format!("task{i:04}"),
                query: Query::new(text.trim_end()).with_substitutions(substitutions),
                ground_truth: required.iter().cloned().collect::<Vec<_>>().join(" "),
                required,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;
    use crate::retrieval::HashEmbedder;

    #[test]
    fn same_seed_same_library() {
        let cfg = SimConfig::default();
        let e = HashEmbedder::new(64);
        assert_eq!(gen_synthetic_library(&cfg, &e), gen_synthetic_library(&cfg, &e));
    }

    #[test]
    fn power_sizes_give_full_tree() {
        let cfg = SimConfig {
            layer_sizes: [1, 3, 9, 27],
            ..SimConfig::default()
        };
        let g = gen_synthetic_library(&cfg, &HashEmbedder::new(64));
        assert!(validate_graph(&g).is_empty());
        for u in g.units().filter(|u| !u.layer.is_primitive()) {
            assert_eq!(u.children.len(), 3, "{}", u.id);
        }
    }

    #[test]
    fn uneven_sizes_still_validate() {
        let cfg = SimConfig {
            layer_sizes: [2, 3, 7, 5],
            ..SimConfig::default()
        };
        let g = gen_synthetic_library(&cfg, &HashEmbedder::new(64));
        assert!(validate_graph(&g).is_empty());
        assert_eq!(g.len(), 17);
    }

    #[test]
    fn substitution_sources_are_private() {
        let cfg = SimConfig::default();
        let g = gen_synthetic_library(&cfg, &HashEmbedder::new(64));
        for task in gen_tasks(&g, &cfg, 5, 20) {
            for s in &task.query.substitutions {
                assert_eq!(g.units().filter(|u| u.tags.contains(&s.from)).count(), 1);
                assert_eq!(g.units().filter(|u| u.tags.contains(&s.to)).count(), 0);
                assert!(task.required.contains(&s.to));
            }
        }
    }
}
