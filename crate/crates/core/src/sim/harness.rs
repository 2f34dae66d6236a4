//! Measurement harnesses. Each returns flat rows (one CSV line each) plus a
//! short text summary.
//!
//! CSV columns, by harness:
//! - prop1: `size,depth,trial,visited,rewrites,frontier_ok`
//! - prop2: `run,iteration,j,committed,candidates,reports,digest`
//! - prop3 greedy: `instance,candidates,k,universe,noise,opt,value,bound,ok`
//! - prop3 errors: `task,eps_ret,eps_rwr,eps_ver,retained,opt_ret,rewrite_bonus,achieved,bound,holds`
//! - ablation: `task,mode,coverage,rewrites,visited,tokens`

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::coverage::{context_coverage, coverage_utility, rewrite_gain};
use super::library::{gen_synthetic_library, gen_tasks};
use super::scripted::{bernoulli_action, ScriptedVerifier, VerifierMode};
use super::select::{brute_force_select, exact_gain, greedy_select, Candidate};
use super::{ErrorEstimates, SimConfig, SimError, SyntheticTask};
use crate::adaptation::{
    adapt, frontier_walk, retrieval_stage, AdaptError, AdaptationConfig, Providers, RoutingAction, RuleVerifier,
    SubstitutionWriter, WalkBudget, WalkOutcome,
};
use crate::evolution::{
    evaluate_objective, evolve_step, ConcatAgent, EvolutionConfig, EvolutionProviders, MechanicalEditWriter, RegistryPair, TokenRecallMetric,
    VerifierRegistry,
};
use crate::graph::SkillGraph;
use crate::provider::{EmbeddingProvider, ZeroConfidence};
use crate::retrieval::{query_similarities, HashEmbedder};

const SIM_EMBEDDING_DIM: usize = 64;
const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / std::f64::consts::E;

pub fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

/// Node count of a full `b`-ary tree of depth `depth`.
pub fn full_tree_size(b: usize, depth: u32) -> usize {
    (0..=depth).map(|d| b.pow(d)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisitRow {
    pub size: usize,
    pub depth: u32,
    pub trial: usize,
    pub visited: usize,
    pub rewrites: usize,
    pub frontier_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisitSummary {
    pub size: usize,
    pub depth: u32,
    pub trials: usize,
    pub mean_visited: f64,
    pub max_visited: usize,
    pub mean_rewrites: f64,
    pub max_rewrites: usize,
    /// `Σ_{d ≤ D} (ρb)^d`.
    pub series_bound: f64,
    pub rewrites_within_visits: bool,
    pub frontier_exclusive: bool,
}

fn visit_trial(b: usize, n: usize, rho: f64, seed: u64) -> (usize, usize, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out: WalkOutcome<usize, ()> = frontier_walk(
        [0usize],
        |&k| (1..=b).map(|i| b * k + i).filter(|&c| c < n).collect(),
        |&k, _| {
            let a = bernoulli_action(&mut rng, rho);
            let leaf = b * k + 1 >= n;
            let a = if a == RoutingAction::Decompose && leaf { RoutingAction::Rewrite } else { a };
            (a, ())
        },
        WalkBudget::UNLIMITED,
    );
    let mut decomposed = BTreeSet::new();
    let mut frontier_ok = true;
    for s in &out.steps {
        if let Some(p) = s.parent {
            frontier_ok &= decomposed.contains(&p) && (s.node - 1) / b == p;
        }
        if s.action == RoutingAction::Decompose {
            decomposed.insert(s.node);
        }
    }
    (out.visited(), out.rewrites(), frontier_ok)
}

/// Bernoulli-verifier walks over full `b`-ary trees, `cfg.trials` per depth,
/// trial `t` seeded with `cfg.seed + t`.
pub fn measure_visited(cfg: &SimConfig) -> Result<(Vec<VisitRow>, Vec<VisitSummary>), SimError> {
    cfg.validate()?;
    let b = cfg.branching;
    let rb = cfg.rho * b as f64;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &depth in &cfg.depths {
        let n = full_tree_size(b, depth);
        let trials: Vec<VisitRow> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let (visited, rewrites, frontier_ok) = visit_trial(b, n, cfg.rho, cfg.seed.wrapping_add(t as u64));
                VisitRow {
                    size: n,
                    depth,
                    trial: t,
                    visited,
                    rewrites,
                    frontier_ok,
                }
            })
            .collect();
        let k = trials.len() as f64;
        summaries.push(VisitSummary {
            size: n,
            depth,
            trials: trials.len(),
            mean_visited: trials.iter().map(|r| r.visited as f64).sum::<f64>() / k,
            max_visited: trials.iter().map(|r| r.visited).max().unwrap_or(0),
            mean_rewrites: trials.iter().map(|r| r.rewrites as f64).sum::<f64>() / k,
            max_rewrites: trials.iter().map(|r| r.rewrites).max().unwrap_or(0),
            series_bound: (0..=depth).map(|d| rb.powi(d as i32)).sum(),
            rewrites_within_visits: trials.iter().all(|r| r.rewrites <= r.visited),
            frontier_exclusive: trials.iter().all(|r| r.frontier_ok),
        });
        rows.extend(trials);
    }
    Ok((rows, summaries))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Report {
    pub rows: Vec<VisitRow>,
    pub summaries: Vec<VisitSummary>,
}

impl Prop1Report {
    /// Largest over smallest mean visit count across tree sizes.
    pub fn growth(&self) -> f64 {
        match (self.summaries.first(), self.summaries.last()) {
            (Some(a), Some(z)) if a.mean_visited > 0.0 => z.mean_visited / a.mean_visited,
            _ => 1.0,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::from("size depth trials mean_vis max_vis mean_rw max_rw series_bound rw<=vis frontier\n");
        for r in &self.summaries {
            let _ = writeln!(
                s,
                "{} {} {} {:.4} {} {:.4} {} {:.4} {} {}",
                r.size,
                r.depth,
                r.trials,
                r.mean_visited,
                r.max_visited,
                r.mean_rewrites,
                r.max_rewrites,
                r.series_bound,
                r.rewrites_within_visits,
                r.frontier_exclusive
            );
        }
        let _ = writeln!(s, "growth smallest->largest: {:.4}", self.growth());
        s
    }
}

pub fn prop1(cfg: &SimConfig) -> Result<Prop1Report, SimError> {
    let (rows, summaries) = measure_visited(cfg)?;
    Ok(Prop1Report { rows, summaries })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop2Row {
    pub run: usize,
    pub iteration: usize,
    pub j: f64,
    /// Committed candidate index; 0 is the fallback.
    pub committed: usize,
    pub candidates: usize,
    pub reports: usize,
    /// SHA-256 of the serialized registry pair held after this iteration.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop2Report {
    pub rows: Vec<Prop2Row>,
}

impl Prop2Report {
    fn runs(&self) -> impl Iterator<Item = &[Prop2Row]> {
        self.rows.chunk_by(|a, b| a.run == b.run)
    }

    /// Steps where `J` decreased.
    pub fn monotonicity_violations(&self) -> usize {
        self.runs()
            .map(|run| run.windows(2).filter(|w| w[1].j < w[0].j).count())
            .sum()
    }

    /// Iterations after the first fallback commit whose registries differ
    /// from the pair held at that commit.
    pub fn fixed_point_violations(&self) -> usize {
        self.runs()
            .map(|run| match run.iter().skip(1).position(|r| r.committed == 0) {
                Some(i) => {
                    let held = &run[i + 1].digest;
                    run[i + 1..].iter().filter(|r| r.digest != *held).count()
                }
                None => 0,
            })
            .sum()
    }

    pub fn summary(&self) -> String {
        let runs = self.runs().count();
        let improved = self.runs().filter(|r| r.last().map(|l| l.j) > r.first().map(|f| f.j)).count();
        let mut s = String::new();
        let _ = writeln!(s, "runs: {runs}");
        let _ = writeln!(s, "rows: {}", self.rows.len());
        let _ = writeln!(s, "runs with improvement: {improved}");
        let _ = writeln!(s, "monotonicity violations: {}", self.monotonicity_violations());
        let _ = writeln!(s, "fixed-point violations: {}", self.fixed_point_violations());
        s
    }
}

pub fn registry_digest(pair: &RegistryPair) -> String {
    let bytes = serde_json::to_vec(pair).expect("registry pairs serialize");
    hex::encode(Sha256::digest(&bytes))
}

fn evolution_run(cfg: &SimConfig, run: usize) -> Result<Vec<Prop2Row>, SimError> {
    let emb = HashEmbedder::new(SIM_EMBEDDING_DIM);
    let lib_cfg = SimConfig {
        seed: cfg.seed.wrapping_add(run as u64),
        ..cfg.clone()
    };
    let graph = gen_synthetic_library(&lib_cfg, &emb);
    let tasks: Vec<_> = gen_tasks(&graph, &lib_cfg, lib_cfg.seed ^ 0x5eed, cfg.tasks)
        .iter()
        .map(SyntheticTask::to_task)
        .collect();
    let providers = EvolutionProviders {
        adapt: Providers {
            embedder: &emb,
            confidence: &ZeroConfidence,
            verifier: &RuleVerifier,
            writer: &SubstitutionWriter,
        },
        agent: &ConcatAgent,
        metric: &TokenRecallMetric,
        editor: &MechanicalEditWriter,
    };
    let evo = EvolutionConfig {
        max_iters: cfg.iterations,
        ..EvolutionConfig::default()
    };
    let mut pair = RegistryPair::new(graph, VerifierRegistry::default());
    let j0 = evaluate_objective(&pair, &tasks, providers, &evo.adaptation)?.j;
    let mut rows = vec![Prop2Row {
        run,
        iteration: 0,
        j: j0,
        committed: 0,
        candidates: 0,
        reports: 0,
        digest: registry_digest(&pair),
    }];
    // Every step runs, including after the split stops producing failures.
    for iteration in 1..=cfg.iterations {
        let step = evolve_step(&pair, &tasks, providers, &evo)?;
        pair = step.pair;
        rows.push(Prop2Row {
            run,
            iteration,
            j: step.objective.j,
            committed: step.committed,
            candidates: step.candidates,
            reports: step.reports,
            digest: registry_digest(&pair),
        });
    }
    Ok(rows)
}

/// `cfg.runs` seeded evolution runs of up to `cfg.iterations` steps each.
pub fn prop2(cfg: &SimConfig) -> Result<Prop2Report, SimError> {
    cfg.validate()?;
    let runs: Vec<Vec<Prop2Row>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| evolution_run(cfg, run))
        .collect::<Result<_, _>>()?;
    Ok(Prop2Report {
        rows: runs.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyRow {
    pub instance: usize,
    pub candidates: usize,
    pub k: usize,
    pub universe: usize,
    pub noise: f64,
    pub opt: f64,
    pub value: f64,
    /// `(1 - 1/e) OPT - 2 K ε`.
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub task: String,
    pub eps_ret: f64,
    pub eps_rwr: f64,
    pub eps_ver: f64,
    pub retained: usize,
    pub opt_ret: f64,
    pub rewrite_bonus: f64,
    pub achieved: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop3Report {
    pub greedy: Vec<GreedyRow>,
    pub errors: Vec<ErrorRow>,
    pub estimates: ErrorEstimates,
}

impl Prop3Report {
    pub fn pass_rate(&self, noise: f64) -> f64 {
        let rows: Vec<&GreedyRow> = self.greedy.iter().filter(|r| r.noise == noise).collect();
        rows.iter().filter(|r| r.ok).count() as f64 / rows.len().max(1) as f64
    }

    pub fn bound_rate(&self) -> f64 {
        self.errors.iter().filter(|r| r.holds).count() as f64 / self.errors.len().max(1) as f64
    }

    pub fn summary(&self) -> String {
        let mut levels: Vec<f64> = self.greedy.iter().map(|r| r.noise).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut s = String::new();
        for e in levels {
            let _ = writeln!(s, "greedy bound, noise {e}: {:.4} of instances", self.pass_rate(e));
        }
        let _ = writeln!(
            s,
            "max eps_ret {:.4}, eps_rwr {:.4}, eps_ver {:.4}",
            self.estimates.eps_ret, self.estimates.eps_rwr, self.estimates.eps_ver
        );
        let _ = writeln!(s, "pipeline bound holds on {:.4} of tasks", self.bound_rate());
        let _ = writeln!(
            s,
            "eps_rwr reading: summed per-step regret of picking units in RWR-score order"
        );
        s
    }
}

fn random_instance(rng: &mut ChaCha8Rng, max_candidates: usize) -> (BTreeSet<String>, Vec<Candidate>, usize) {
    let universe: Vec<String> = (0..rng.random_range(3..=10)).map(|i| format!("g{i}")).collect();
    let n = rng.random_range(1..=max_candidates);
    let candidates = (0..n)
        .map(|i| {
            let size = rng.random_range(1..=4.min(universe.len()));
            let tags: Vec<&String> = universe.choose_multiple(rng, size).collect();
            Candidate::new(format!("c{i:02}"), tags.into_iter().cloned())
        })
        .collect();
    let k = rng.random_range(1..=n.min(5));
    (universe.into_iter().collect(), candidates, k)
}

/// Greedy with exact and noisy gain estimates against the enumerated optimum.
pub fn greedy_trials(cfg: &SimConfig) -> Result<Vec<GreedyRow>, SimError> {
    let per_instance: Vec<Vec<GreedyRow>> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            let (req, cands, k) = random_instance(&mut rng, cfg.max_candidates);
            let opt = brute_force_select(&req, &cands, k)?.value;
            let mut rows = Vec::new();
            for &eps in std::iter::once(&0.0).chain(&cfg.noise) {
                let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (i as u64) << 16 ^ eps.to_bits());
                let value = greedy_select(&req, &cands, k, |p, c| {
                    let g = exact_gain(&req, &cands, p, c);
                    if eps > 0.0 {
                        g + noise_rng.random_range(-eps..=eps)
                    } else {
                        g
                    }
                })
                .value;
                let bound = ONE_MINUS_INV_E * opt - 2.0 * k as f64 * eps;
                rows.push(GreedyRow {
                    instance: i,
                    candidates: cands.len(),
                    k,
                    universe: req.len(),
                    noise: eps,
                    opt,
                    value,
                    bound,
                    ok: value >= bound - 1e-12,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_, SimError>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

/// Calibration errors of the pipeline on `tasks`, plus the per-task check
/// `achieved >= (1 - 1/e) OPT_ret + J_rw(B*) - (ε_ret + ε_rwr + |R̂| ε_ver)`.
///
/// `ε_ret` is the largest gap between a unit's clamped query similarity and
/// its singleton coverage. `ε_rwr` sums, over `K` picks in RWR-score order,
/// how far each pick's marginal gain falls short of the best available one.
/// `ε_ver` is the share of walk decisions that differ from the oracle plan.
pub fn measure_errors(
    graph: &SkillGraph,
    tasks: &[SyntheticTask],
    embedder: &dyn EmbeddingProvider,
    cfg: &AdaptationConfig,
    mode: VerifierMode,
) -> Result<(ErrorEstimates, Vec<ErrorRow>), SimError> {
    let mut rows = Vec::new();
    let mut est = ErrorEstimates::default();
    let units: Vec<Candidate> = graph
        .units()
        .map(|u| Candidate {
            id: u.id.clone(),
            tags: u.tags.clone(),
        })
        .collect();
    for task in tasks {
        let sims = query_similarities(&task.query.text, graph, embedder).map_err(AdaptError::Retrieval)?;
        let eps_ret = sims
            .iter()
            .map(|(id, s)| (s - coverage_utility(task, [id.as_str()], graph)).abs())
            .fold(0.0, f64::max);

        let stage = retrieval_stage(&task.query, graph, embedder, cfg).map_err(AdaptError::Retrieval)?;
        let mut order: Vec<usize> = (0..units.len()).collect();
        order.sort_by(|&a, &b| {
            stage
                .scores
                .get(&units[b].id)
                .total_cmp(&stage.scores.get(&units[a].id))
                .then_with(|| units[a].id.cmp(&units[b].id))
        });
        let k = cfg.seeds.min(units.len());
        let mut picked = Vec::new();
        let mut eps_rwr = 0.0;
        for &next in order.iter().take(k) {
            let best = (0..units.len())
                .filter(|i| !picked.contains(i))
                .map(|i| exact_gain(&task.required, &units, &picked, i))
                .fold(0.0, f64::max);
            eps_rwr += best - exact_gain(&task.required, &units, &picked, next);
            picked.push(next);
        }
        let opt_ret = if units.len() <= super::ENUMERATION_BOUND {
            brute_force_select(&task.required, &units, k)?.value
        } else {
            greedy_select(&task.required, &units, k, |p, i| exact_gain(&task.required, &units, p, i)).value
        };

        let oracle = ScriptedVerifier::new(VerifierMode::Oracle, task, graph, &stage);
        let tested = ScriptedVerifier::new(mode, task, graph, &stage);
        let run = adapt(
            &task.query,
            graph,
            &VerifierRegistry::default(),
            Providers {
                embedder,
                confidence: &ZeroConfidence,
                verifier: &tested,
                writer: &SubstitutionWriter,
            },
            cfg,
        )?;
        let decided: Vec<_> = run.trace.steps.iter().filter(|s| s.flag.is_none()).collect();
        let disagree = decided
            .iter()
            .filter(|s| oracle.planned(&s.unit) != Some(s.action))
            .count();
        let eps_ver = disagree as f64 / decided.len().max(1) as f64;

        let retained: Vec<&str> = run.context.ids().collect();
        let rewrite_bonus: f64 = retained.iter().map(|id| rewrite_gain(task, graph, id)).sum();
        let achieved = context_coverage(task, &run.context, graph);
        let bound = ONE_MINUS_INV_E * opt_ret + rewrite_bonus - (eps_ret + eps_rwr + retained.len() as f64 * eps_ver);
        est.eps_ret = est.eps_ret.max(eps_ret);
        est.eps_rwr = est.eps_rwr.max(eps_rwr);
        est.eps_ver = est.eps_ver.max(eps_ver);
        rows.push(ErrorRow {
            task: task.id.clone(),
            eps_ret,
            eps_rwr,
            eps_ver,
            retained: retained.len(),
            opt_ret,
            rewrite_bonus,
            achieved,
            bound,
            holds: achieved >= bound - 1e-12,
        });
    }
    Ok((est, rows))
}

/// Greedy-bound trials plus calibration errors on small libraries.
pub fn prop3(cfg: &SimConfig) -> Result<Prop3Report, SimError> {
    cfg.validate()?;
    let greedy = greedy_trials(cfg)?;
    let emb = HashEmbedder::new(SIM_EMBEDDING_DIM);
    let small = SimConfig {
        layer_sizes: [1, 2, 3, 6],
        ..cfg.clone()
    };
    let mut errors = Vec::new();
    let mut estimates = ErrorEstimates::default();
    for l in 0..10u64 {
        let lib = SimConfig {
            seed: cfg.seed.wrapping_add(l),
            ..small.clone()
        };
        let graph = gen_synthetic_library(&lib, &emb);
        let tasks = gen_tasks(&graph, &lib, lib.seed ^ 0x7a5c, cfg.tasks);
        let (est, rows) = measure_errors(&graph, &tasks, &emb, &AdaptationConfig::default(), VerifierMode::Oracle)?;
        estimates.eps_ret = estimates.eps_ret.max(est.eps_ret);
        estimates.eps_rwr = estimates.eps_rwr.max(est.eps_rwr);
        estimates.eps_ver = estimates.eps_ver.max(est.eps_ver);
        errors.extend(rows);
    }
    Ok(Prop3Report {
        greedy,
        errors,
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub task: String,
    pub mode: String,
    pub coverage: f64,
    pub rewrites: usize,
    pub visited: usize,
    pub tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummary {
    pub mode: String,
    pub tasks: usize,
    pub mean_coverage: f64,
    pub total_rewrites: usize,
    pub mean_visited: f64,
    pub mean_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub summaries: Vec<AblationSummary>,
}

impl AblationReport {
    pub fn mode(&self, name: &str) -> Option<&AblationSummary> {
        self.summaries.iter().find(|s| s.mode == name)
    }

    /// Selective drill-down covers at least as much as both baselines and
    /// rewrites strictly less than rewrite-all.
    pub fn ordering_holds(&self) -> bool {
        match (self.mode("oracle"), self.mode("parent-only"), self.mode("rewrite-all")) {
            (Some(o), Some(p), Some(r)) => {
                o.mean_coverage >= p.mean_coverage
                    && o.mean_coverage >= r.mean_coverage
                    && o.total_rewrites < r.total_rewrites
            }
            _ => false,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::from("mode tasks mean_coverage total_rewrites mean_visited mean_tokens\n");
        for m in &self.summaries {
            let _ = writeln!(
                s,
                "{} {} {:.4} {} {:.2} {:.2}",
                m.mode, m.tasks, m.mean_coverage, m.total_rewrites, m.mean_visited, m.mean_tokens
            );
        }
        let _ = writeln!(s, "ordering holds: {}", self.ordering_holds());
        s
    }
}

const ABLATION_MODES: [VerifierMode; 3] = [VerifierMode::Oracle, VerifierMode::ParentOnly, VerifierMode::RewriteAll];

/// Oracle drill-down against the parent-only and rewrite-all strategies on
/// ten seeded libraries with `cfg.tasks` tasks each.
pub fn ablation(cfg: &SimConfig) -> Result<AblationReport, SimError> {
    cfg.validate()?;
    let emb = HashEmbedder::new(SIM_EMBEDDING_DIM);
    let adapt_cfg = AdaptationConfig::default();
    let suites: Vec<(SkillGraph, Vec<SyntheticTask>)> = (0..10u64)
        .map(|l| {
            let lib = SimConfig {
                seed: cfg.seed.wrapping_add(l),
                ..cfg.clone()
            };
            let graph = gen_synthetic_library(&lib, &emb);
            let tasks = gen_tasks(&graph, &lib, lib.seed ^ 0xab1a, cfg.tasks);
            (graph, tasks)
        })
        .collect();
    let jobs: Vec<(usize, &SyntheticTask)> = suites
        .iter()
        .enumerate()
        .flat_map(|(l, (_, tasks))| tasks.iter().map(move |t| (l, t)))
        .collect();
    let rows: Vec<Vec<AblationRow>> = jobs
        .par_iter()
        .map(|&(l, task)| {
            let graph = &suites[l].0;
            let stage = retrieval_stage(&task.query, graph, &emb, &adapt_cfg)
                .map_err(AdaptError::Retrieval)?;
            ABLATION_MODES
                .iter()
                .map(|&mode| {
                    let verifier = ScriptedVerifier::new(mode, task, graph, &stage);
                    let run = adapt(
                        &task.query,
                        graph,
                        &VerifierRegistry::default(),
                        Providers {
                            embedder: &emb,
                            confidence: &ZeroConfidence,
                            verifier: &verifier,
                            writer: &SubstitutionWriter,
                        },
                        &adapt_cfg,
                    )?;
                    Ok(AblationRow {
                        task: format!("lib{l}/{}", task.id),
                        mode: mode.name().to_string(),
                        coverage: context_coverage(task, &run.context, graph),
                        rewrites: run.trace.rewrites,
                        visited: run.trace.visited,
                        tokens: run.trace.token_cost,
                    })
                })
                .collect::<Result<Vec<_>, SimError>>()
        })
        .collect::<Result<_, SimError>>()?;
    let rows: Vec<AblationRow> = rows.into_iter().flatten().collect();
    let summaries = ABLATION_MODES
        .iter()
        .map(|m| {
            let mine: Vec<&AblationRow> = rows.iter().filter(|r| r.mode == m.name()).collect();
            let n = mine.len().max(1) as f64;
            AblationSummary {
                mode: m.name().to_string(),
                tasks: mine.len(),
                mean_coverage: mine.iter().map(|r| r.coverage).sum::<f64>() / n,
                total_rewrites: mine.iter().map(|r| r.rewrites).sum(),
                mean_visited: mine.iter().map(|r| r.visited as f64).sum::<f64>() / n,
                mean_tokens: mine.iter().map(|r| r.tokens as f64).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(AblationReport { rows, summaries })
}
