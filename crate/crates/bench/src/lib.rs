//! Fixtures for the pipeline benchmarks: seeded synthetic libraries and the
//! queries run against them.

use skilltree_core::retrieval::SeedDistribution;
use skilltree_core::sim::{gen_synthetic_library, gen_tasks, SimConfig, SyntheticTask};
use skilltree_core::{HashEmbedder, SkillGraph};

pub const EMBEDDING_DIM: usize = 64;

pub struct Fixture {
    pub graph: SkillGraph,
    pub tasks: Vec<SyntheticTask>,
    pub embedder: HashEmbedder,
}

/// A library with `width` strategies per policy, tripling per layer below.
pub fn fixture(width: usize, seed: u64) -> Fixture {
    let cfg = SimConfig {
        seed,
        layer_sizes: [1, width, 3 * width, 9 * width],
        tasks: 8,
        ..SimConfig::default()
    };
    let embedder = HashEmbedder::new(EMBEDDING_DIM);
    let graph = gen_synthetic_library(&cfg, &embedder);
    let tasks = gen_tasks(&graph, &cfg, seed ^ 0xbe7c, cfg.tasks);
    Fixture { graph, tasks, embedder }
}

/// Uniform restart mass over the first `k` unit ids.
pub fn uniform_seeds(graph: &SkillGraph, k: usize) -> SeedDistribution {
    SeedDistribution::from_weights("", graph.ids().take(k).map(|id| (id.to_string(), 1.0)))
}
