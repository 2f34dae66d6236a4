//! Structural invariants checked over generated inputs.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use skilltree_core::adaptation::{
    adaptation_cost, compose, retrieval_stage, traverse, RouteRequest, StepFlag, SubstitutionWriter, WalkBudget,
};
use skilltree_core::evolution::{evaluate_objective, evolve_step, EvolutionConfig, RoutingRule, RuleEdit, RuleMatch};
use skilltree_core::graph::{apply_edit, decomposition_subtree, AgentEdit, GraphConfig};
use skilltree_core::io::{decode_registry, encode_registry};
use skilltree_core::provider::{ProviderError, Verifier, ZeroConfidence};
use skilltree_core::retrieval::{partition, PartitionConfig, SeedDistribution};
use skilltree_core::sim::{
    brute_force_select, coverage_utility, exact_gain, gen_tasks, greedy_select, measure_visited, rwr_linear_solve,
    Candidate, ScriptedVerifier, SimConfig, SyntheticTask,
};
use skilltree_core::{
    adapt, degree_corrected_rwr, validate_graph, AdaptationConfig, Layer, Providers, Query, RegistryPair,
    RoutingAction, RwrConfig, ScoreVector, SkillGraph, SkillUnit, VerifierRegistry,
};

fn layer_sizes() -> impl Strategy<Value = [usize; 4]> {
    (1..=2usize, 1..=3usize, 1..=5usize, 1..=8usize).prop_map(|(a, b, c, d)| [a, b, c, d])
}

fn edit_for(g: &SkillGraph, pick: (usize, usize, u8, u8)) -> AgentEdit {
    let ids: Vec<String> = g.ids().map(str::to_string).collect();
    let a = ids[pick.0 % ids.len()].clone();
    let b = ids[pick.1 % ids.len()].clone();
    match pick.2 % 4 {
        0 => AgentEdit::Delete { id: a },
        1 => AgentEdit::Update {
            id: a,
            content: Some(format!("rewritten {}", pick.3)),
            tags: None,
            embedding: None,
        },
        2 => AgentEdit::Merge { a, b },
        _ => AgentEdit::Add {
            unit: SkillUnit::new(format!("new{}", pick.3), Layer(1 + pick.3 % 4), "added"),
            parent: Some(a),
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accepted_edits_keep_the_graph_valid(
        seed in 0u64..1000,
        sizes in layer_sizes(),
        picks in prop::collection::vec((0usize..64, 0usize..64, any::<u8>(), any::<u8>()), 1..8),
    ) {
        let emb = common::embedder();
        let (mut g, _) = common::library(seed, sizes, &emb);
        for pick in picks {
            if g.is_empty() {
                break;
            }
            let edit = edit_for(&g, pick);
            let once = apply_edit(&g, &edit);
            prop_assert_eq!(&once, &apply_edit(&g, &edit));
            if let Ok(next) = once {
                prop_assert!(validate_graph(&next).is_empty());
                g = next;
            }
        }
    }

    #[test]
    fn any_graph_reaches_any_other(a in 0u64..500, b in 0u64..500, sa in layer_sizes(), sb in layer_sizes()) {
        let emb = common::embedder();
        let (mut g, _) = common::library(a, sa, &emb);
        let (target, _) = common::library(b, sb, &emb);
        let ids: Vec<String> = g.ids().map(str::to_string).collect();
        for id in ids {
            if let Ok(next) = apply_edit(&g, &AgentEdit::Delete { id }) {
                g = next;
            }
        }
        prop_assert!(g.is_empty());
        // children before parents, so every add sees its children present
        let mut units: Vec<&SkillUnit> = target.units().collect();
        units.sort_by_key(|u| std::cmp::Reverse(u.layer));
        for u in units {
            g = apply_edit(&g, &AgentEdit::Add { unit: u.clone(), parent: None }).unwrap();
        }
        prop_assert_eq!(g, target);
    }

    #[test]
    fn decomposition_subtree_stays_hierarchical(seed in 0u64..1000, sizes in layer_sizes()) {
        let emb = common::embedder();
        let (g, _) = common::library(seed, sizes, &emb);
        for root in g.ids() {
            let sub = decomposition_subtree(&g, root).unwrap();
            let distinct: BTreeSet<&String> = sub.units.iter().collect();
            prop_assert_eq!(distinct.len(), sub.units.len());
            prop_assert_eq!(sub.size, sub.units.len());
            prop_assert_eq!(&sub.units[0], root);
            for id in &sub.units[1..] {
                // reached through a parent inside the subtree, never a sibling link
                let parents = g.parents(id);
                prop_assert!(parents.iter().any(|p| distinct.contains(&p.to_string())), "{} under {}", id, root);
            }
        }
    }

    #[test]
    fn rwr_is_a_distribution_matching_the_direct_solve(
        seed in 0u64..1000,
        sizes in layer_sizes(),
        alpha in 0.05f64..=1.0,
        beta in 0.0f64..2.0,
        seeds in prop::collection::vec((0usize..64, 0.01f64..1.0), 1..4),
    ) {
        let emb = common::embedder();
        let (g, _) = common::library(seed, sizes, &emb);
        let ids: Vec<String> = g.ids().map(str::to_string).collect();
        let p0 = SeedDistribution::from_weights("q", seeds.iter().map(|(i, w)| (ids[i % ids.len()].clone(), *w)));
        let cfg = RwrConfig { alpha, beta, tol: 1e-11, max_iters: 5000 };
        let s = degree_corrected_rwr(&g, &p0, &cfg).unwrap();
        prop_assert!(s.converged);
        prop_assert!((s.total() - 1.0).abs() < 1e-6);
        prop_assert!(s.entries.values().all(|&x| x >= 0.0));
        let direct = rwr_linear_solve(&g, &p0, &cfg).unwrap();
        prop_assert!(s.sup_distance(&direct) < 1e-6);
    }

    #[test]
    fn uniform_weight_scaling_leaves_scores_unchanged(
        seed in 0u64..1000,
        sizes in layer_sizes(),
        scale in 0.05f64..1.0,
        beta in prop_oneof![Just(0.0), 0.0f64..1.5],
    ) {
        let emb = common::embedder();
        let (g, _) = common::library(seed, sizes, &emb);
        let scaled = SkillGraph::from_parts(
            g.units().cloned(),
            g.hierarchical_edges().map(|(a, b, w)| (a.to_string(), b.to_string(), w * scale)),
            g.lateral_edges().map(|(a, b, w)| (a.to_string(), b.to_string(), w * scale)),
            g.config(),
        );
        let p0 = SeedDistribution::point(g.ids().next().unwrap());
        let cfg = RwrConfig { beta, tol: 1e-12, max_iters: 2000, ..RwrConfig::default() };
        let x = degree_corrected_rwr(&g, &p0, &cfg).unwrap();
        let y = degree_corrected_rwr(&scaled, &p0, &cfg).unwrap();
        prop_assert!(x.sup_distance(&y) < 1e-9);
    }

    #[test]
    fn degree_correction_lowers_the_hub(leaves in 2usize..30) {
        // x -- h -- {l0..}, x -- y; the walk starts at x.
        let mut units = vec![
            SkillUnit::new("h", Layer::STRATEGY, ""),
            SkillUnit::new("x", Layer::STRATEGY, ""),
            SkillUnit::new("y", Layer::STRATEGY, ""),
        ];
        let mut lateral = vec![("h".to_string(), "x".to_string(), 0.5), ("x".to_string(), "y".to_string(), 0.5)];
        for i in 0..leaves {
            units.push(SkillUnit::new(format!("l{i}"), Layer::STRATEGY, ""));
            lateral.push(("h".to_string(), format!("l{i}"), 0.5));
        }
        let g = SkillGraph::from_parts(units, [], lateral, GraphConfig::default());
        let p0 = SeedDistribution::point("x");
        let plain = degree_corrected_rwr(&g, &p0, &RwrConfig { beta: 0.0, ..RwrConfig::default() }).unwrap();
        let corrected = degree_corrected_rwr(&g, &p0, &RwrConfig::default()).unwrap();
        prop_assert!(corrected.get("h") < plain.get("h"));
    }

    #[test]
    fn partition_is_scale_invariant(
        scores in prop::collection::vec(0.0f64..1.0, 1..30),
        scale in 1e-3f64..1e3,
    ) {
        let base = ScoreVector::from_entries(scores.iter().enumerate().map(|(i, s)| (format!("u{i}"), *s)));
        let scaled = ScoreVector::from_entries(base.entries.iter().map(|(k, v)| (k.clone(), v * scale)));
        let cfg = PartitionConfig::default();
        let a = partition(&base, &cfg).unwrap();
        let b = partition(&scaled, &cfg).unwrap();
        prop_assert_eq!(a.full, b.full);
        prop_assert_eq!(a.partial, b.partial);
        prop_assert_eq!(a.mismatched, b.mismatched);
    }
}

/// Decomposes exactly the listed units and accepts everything else.
struct DecomposeOnly(BTreeSet<String>);

impl Verifier for DecomposeOnly {
    fn route(&self, req: &RouteRequest<'_>) -> Result<RoutingAction, ProviderError> {
        Ok(if self.0.contains(&req.unit.id) {
            RoutingAction::Decompose
        } else {
            RoutingAction::Accept
        })
    }
}

/// Root `r` with children `c0, c1`; `c1` optionally carries a hidden subtree.
fn shallow_tree(hidden: usize) -> SkillGraph {
    let mut units = vec![
        SkillUnit::new("r", Layer::STRATEGY, "root plan").with_children(["c0", "c1"]),
        SkillUnit::new("c0", Layer::PROCEDURE, "first step"),
        SkillUnit::new("c1", Layer::PROCEDURE, "second step")
            .with_children((0..hidden).map(|i| format!("p{i}")).collect::<Vec<_>>()),
    ];
    units.extend((0..hidden).map(|i| SkillUnit::new(format!("p{i}"), Layer::PRIMITIVE, "hidden primitive")));
    SkillGraph::from_units(units, GraphConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cost_depends_on_the_trace_not_the_tree(hidden in 0usize..200) {
        let verifier = DecomposeOnly(["r".to_string()].into());
        let run = |g: &SkillGraph| {
            let scores = ScoreVector::from_entries(g.ids().map(|id| (id.to_string(), 0.5)));
            traverse(
                g,
                &["r".to_string()],
                &scores,
                &Query::new("q"),
                &VerifierRegistry::default(),
                &verifier,
                &SubstitutionWriter,
                WalkBudget::UNLIMITED,
            )
        };
        let small = shallow_tree(0);
        let big = shallow_tree(hidden);
        let (a, b) = (run(&small), run(&big));
        prop_assert_eq!(&a.steps, &b.steps);
        let cfg = AdaptationConfig::default().cost;
        prop_assert_eq!(adaptation_cost(&a, &cfg), adaptation_cost(&b, &cfg));
    }

    #[test]
    fn traces_respect_the_frontier(
        seed in 0u64..500,
        task_seed in 0u64..500,
        rho in 0.0f64..0.9,
        max_visited in 1usize..40,
        max_rewrites in 1usize..8,
    ) {
        let emb = common::embedder();
        let (g, sim) = common::library(seed, [1, 3, 6, 12], &emb);
        let cfg = AdaptationConfig { max_visited, max_rewrites, ..AdaptationConfig::default() };
        for task in gen_tasks(&g, &sim, task_seed, 3) {
            let verifier = ScriptedVerifier::bernoulli(rho, task_seed);
            let providers = Providers {
                embedder: &emb,
                confidence: &ZeroConfidence,
                verifier: &verifier,
                writer: &SubstitutionWriter,
            };
            let run = adapt(&task.query, &g, &VerifierRegistry::default(), providers, &cfg).unwrap();
            let t = &run.trace;
            prop_assert!(t.contract_violations(&g).is_empty(), "{:?}", t.contract_violations(&g));
            prop_assert!(t.rewritten.is_subset(&t.retained));
            // budget skips are recorded as steps but never reach the verifier
            let decided = t.steps.iter().filter(|s| s.flag != Some(StepFlag::BudgetExhausted)).count();
            prop_assert!(decided <= max_visited);
            prop_assert!(t.rewrites <= max_rewrites);
        }
    }

    #[test]
    fn compose_ignores_discovery_order(seed in 0u64..500, order in Just((0..64usize).collect::<Vec<_>>()).prop_shuffle()) {
        let emb = common::embedder();
        let (g, sim) = common::library(seed, [1, 3, 6, 12], &emb);
        let task = &gen_tasks(&g, &sim, seed, 1)[0];
        let cfg = AdaptationConfig::default();
        let stage = retrieval_stage(&task.query, &g, &emb, &cfg).unwrap();
        let verifier = ScriptedVerifier::bernoulli(0.4, seed);
        let trace = traverse(
            &g, &stage.roots, &stage.scores, &task.query, &VerifierRegistry::default(),
            &verifier, &SubstitutionWriter, cfg.budget(),
        );
        let mut shuffled = trace.clone();
        let n = shuffled.steps.len();
        let perm: Vec<usize> = order.into_iter().filter(|&i| i < n).collect();
        shuffled.steps = perm.iter().map(|&i| trace.steps[i].clone()).collect();
        prop_assert_eq!(
            compose(&stage.tiers.full, &trace, &stage.scores, &g),
            compose(&stage.tiers.full, &shuffled, &stage.scores, &g)
        );
    }
}

fn split(g: &SkillGraph, sim: &SimConfig, seed: u64, n: usize) -> Vec<skilltree_core::Task> {
    gen_tasks(g, sim, seed, n).iter().map(SyntheticTask::to_task).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_steps_never_lose_ground(seed in 0u64..200) {
        let emb = common::embedder();
        let (g, sim) = common::library(seed, [1, 2, 4, 8], &emb);
        let tasks = split(&g, &sim, seed ^ 7, 6);
        let providers = common::mock_providers(&emb);
        let cfg = EvolutionConfig::default();
        let mut pair = RegistryPair::new(g, VerifierRegistry::default());
        let mut j = evaluate_objective(&pair, &tasks, providers, &cfg.adaptation).unwrap().j;
        for _ in 0..4 {
            let step = evolve_step(&pair, &tasks, providers, &cfg).unwrap();
            prop_assert!(step.objective.j >= j - 1e-12);
            if step.committed == 0 {
                // a stalled step is a fixed point: registries stay byte-identical
                prop_assert_eq!(encode_registry(&step.pair).unwrap(), encode_registry(&pair).unwrap());
            } else {
                prop_assert!(step.objective.j > j);
                prop_assert_eq!(step.pair.version, pair.version + 1);
            }
            j = step.objective.j;
            pair = step.pair;
        }
    }

    #[test]
    fn objective_ignores_task_order(seed in 0u64..200, order in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
        let emb = common::embedder();
        let (g, sim) = common::library(seed, [1, 2, 4, 8], &emb);
        let tasks = split(&g, &sim, seed, 6);
        let shuffled: Vec<_> = order.iter().map(|&i| tasks[i].clone()).collect();
        let providers = common::mock_providers(&emb);
        let cfg = AdaptationConfig::default();
        let pair = RegistryPair::new(g, VerifierRegistry::default());
        let a = evaluate_objective(&pair, &tasks, providers, &cfg).unwrap();
        let b = evaluate_objective(&pair, &shuffled, providers, &cfg).unwrap();
        prop_assert_eq!(a.j, b.j);
    }

    #[test]
    fn registries_round_trip(seed in 0u64..1000, sizes in layer_sizes()) {
        let emb = common::embedder();
        let (g, _) = common::library(seed, sizes, &emb);
        let pair = RegistryPair::new(g, VerifierRegistry::default());
        let bytes = encode_registry(&pair).unwrap();
        let back = decode_registry(&bytes).unwrap();
        prop_assert_eq!(encode_registry(&back).unwrap(), bytes);
    }
}

fn rule_strategy() -> impl Strategy<Value = RoutingRule> {
    let action = prop_oneof![
        Just(RoutingAction::Accept),
        Just(RoutingAction::Decompose),
        Just(RoutingAction::Rewrite),
        Just(RoutingAction::Skip),
    ];
    (prop::option::of("[a-z]{1,4}"), prop::option::of(1u8..=4), action).prop_map(|(unit, layer, action)| {
        RoutingRule::new(
            RuleMatch {
                unit,
                layer: layer.map(Layer),
                ..RuleMatch::default()
            },
            action,
        )
    })
}

proptest! {
    #[test]
    fn any_rule_list_reaches_any_other(
        from in prop::collection::vec(rule_strategy(), 0..6),
        to in prop::collection::vec(rule_strategy(), 0..6),
    ) {
        let mut reg = VerifierRegistry::new(from, PartitionConfig::default());
        let target = VerifierRegistry::new(to.clone(), PartitionConfig::default());
        while !reg.rules.is_empty() {
            reg = reg.apply(&RuleEdit::Delete { index: 0 }).unwrap();
        }
        for (index, rule) in to.into_iter().enumerate() {
            reg = reg.apply(&RuleEdit::Add { index, rule }).unwrap();
        }
        prop_assert_eq!(reg, target);
    }
}

/// Coverage values of every subset of `tags`, indexed by bitmask.
fn all_subsets(units: &[BTreeSet<String>], required: &BTreeSet<String>) -> Vec<f64> {
    let g = SkillGraph::from_units(
        units
            .iter()
            .enumerate()
            .map(|(i, t)| SkillUnit::new(format!("u{i}"), Layer::PRIMITIVE, "").with_tags(t.clone())),
        GraphConfig::default(),
    )
    .unwrap();
    let task = SyntheticTask {
        id: "t".into(),
        query: Query::new("q"),
        required: required.clone(),
        ground_truth: String::new(),
    };
    let ids: Vec<String> = (0..units.len()).map(|i| format!("u{i}")).collect();
    (0u32..(1 << units.len()))
        .map(|m| {
            let picked = (0..units.len()).filter(|i| m >> i & 1 == 1).map(|i| ids[i].as_str());
            coverage_utility(&task, picked, &g)
        })
        .collect()
}

fn tag_sets(max_units: usize) -> impl Strategy<Value = Vec<BTreeSet<String>>> {
    prop::collection::vec(
        prop::collection::btree_set((0..10u8).prop_map(|t| format!("t{t}")), 0..5),
        1..=max_units,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coverage_is_monotone_and_submodular(units in tag_sets(8), req in prop::collection::btree_set(0..10u8, 1..10)) {
        let required: BTreeSet<String> = req.iter().map(|t| format!("t{t}")).collect();
        let f = all_subsets(&units, &required);
        let n = units.len();
        for s in 0usize..(1 << n) {
            for u in (0..n).filter(|u| s >> u & 1 == 0) {
                let gain_s = f[s | 1 << u] - f[s];
                prop_assert!(gain_s >= -1e-12);
                // every superset t of s that still lacks u
                let free = ((1usize << n) - 1) & !s & !(1 << u);
                let mut extra = free;
                loop {
                    let t = s | extra;
                    prop_assert!(f[t | 1 << u] - f[t] <= gain_s + 1e-12);
                    if extra == 0 {
                        break;
                    }
                    extra = (extra - 1) & free;
                }
            }
        }
    }

    #[test]
    fn exact_greedy_meets_the_bound(units in tag_sets(12), req in prop::collection::btree_set(0..10u8, 1..10), k in 1usize..6) {
        let required: BTreeSet<String> = req.iter().map(|t| format!("t{t}")).collect();
        let cands: Vec<Candidate> = units.iter().enumerate().map(|(i, t)| Candidate::new(format!("c{i:02}"), t.clone())).collect();
        let opt = brute_force_select(&required, &cands, k).unwrap().value;
        let greedy = greedy_select(&required, &cands, k, |p, i| exact_gain(&required, &cands, p, i));
        prop_assert!(greedy.ids.len() <= k);
        prop_assert!(greedy.value >= (1.0 - (-1.0f64).exp()) * opt - 1e-12);
    }
}

#[test]
fn visit_counts_bound_rewrites() {
    let cfg = SimConfig {
        trials: 200,
        depths: vec![3, 6],
        rho: 0.45,
        ..SimConfig::default()
    };
    let (rows, summaries) = measure_visited(&cfg).unwrap();
    assert_eq!(rows.len(), 400);
    for r in &rows {
        assert!(r.rewrites <= r.visited);
        assert!(r.frontier_ok);
    }
    let by_size: BTreeMap<usize, usize> = rows.iter().fold(BTreeMap::new(), |mut m, r| {
        *m.entry(r.size).or_default() += 1;
        m
    });
    assert!(by_size.values().all(|&c| c == 200));
    assert!(summaries.iter().all(|s| s.rewrites_within_visits && s.frontier_exclusive));
}
