//! Dual-registry evolution: gap reports, single-operator candidates, the
//! induced agent registry and greedy commits with a do-nothing fallback.

mod mocks;
mod rules;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::{adapt, adaptation_cost, AdaptError, Adaptation, AdaptationConfig, Providers, Query, RoutingAction};
use crate::graph::{apply_edit, validate_graph, EditOperator, SkillGraph};
use crate::provider::{AgentProvider, EditWriter, MetricProvider};

pub use mocks::{ConcatAgent, MechanicalEditWriter, TokenRecallMetric};
pub use rules::{RoutingRule, RuleEdit, RuleMatch, VerifierRegistry};

/// One `(Q, Y)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub query: Query,
    pub ground_truth: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub required_tags: BTreeSet<String>,
}

impl Task {
    pub fn new(id: impl Into<String>, query: Query, ground_truth: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            query,
            ground_truth: ground_truth.into(),
            required_tags: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegistryPair {
    pub agent: SkillGraph,
    pub verifier: VerifierRegistry,
    #[serde(default)]
    pub version: u64,
}

impl RegistryPair {
    pub fn new(agent: SkillGraph, verifier: VerifierRegistry) -> Self {
        Self {
            agent,
            verifier,
            version: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let report = validate_graph(&self.agent);
        if !report.is_empty() {
            return Err(format!("agent registry: {report}"));
        }
        self.verifier.validate().map_err(|e| format!("verifier registry: {e}"))
    }

    /// Same registries, ignoring the version counter.
    pub fn same_registries(&self, other: &RegistryPair) -> bool {
        self.agent == other.agent && self.verifier == other.verifier
    }
}

/// Structured record of one failed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub task_id: String,
    pub error_type: String,
    pub query: Query,
    pub failed_output: String,
    pub ground_truth: String,
    /// Seed ids followed by the fully compatible ids.
    pub retrieved: Vec<String>,
    /// Visited units in traversal order; parallel to `actions`.
    pub path: Vec<String>,
    pub actions: Vec<RoutingAction>,
    /// Units whose content reached the context.
    pub invoked: Vec<String>,
    /// Rewritten unit ids with the content the writer produced.
    pub rewrites: BTreeMap<String, String>,
}

impl GapReport {
    pub fn action_of(&self, id: &str) -> Option<RoutingAction> {
        self.path.iter().position(|p| p == id).map(|i| self.actions[i])
    }

    /// Unit most directly implicated in the failure: the first retained unit
    /// on the path, else the first visited, else the first retrieved.
    pub fn target(&self) -> Option<&str> {
        self.path
            .iter()
            .zip(&self.actions)
            .find(|(_, a)| matches!(a, RoutingAction::Accept | RoutingAction::Rewrite))
            .map(|(p, _)| p)
            .or(self.path.first())
            .or(self.retrieved.first())
            .map(String::as_str)
    }
}

/// Report for a run scoring below 1, `None` otherwise.
pub fn build_gap_report(
    task: &Task,
    output: &str,
    run: &Adaptation,
    metric: &dyn MetricProvider,
) -> Option<GapReport> {
    if metric.score(&task.ground_truth, output) >= 1.0 {
        return None;
    }
    let trace = &run.trace;
    let error_type = if trace.triggered {
        metric.classify(&task.ground_truth, output)
    } else {
        "no-retrieval".to_string()
    };
    Some(GapReport {
        task_id: task.id.clone(),
        error_type,
        query: task.query.clone(),
        failed_output: output.to_string(),
        ground_truth: task.ground_truth.clone(),
        retrieved: trace.seeds.iter().chain(&trace.full).cloned().collect(),
        path: trace.steps.iter().map(|s| s.unit.clone()).collect(),
        actions: trace.steps.iter().map(|s| s.action).collect(),
        invoked: run.context.ids().map(str::to_string).collect(),
        rewrites: trace
            .steps
            .iter()
            .filter_map(|s| Some((s.unit.clone(), s.rewritten.clone()?)))
            .collect(),
    })
}

#[derive(Clone, Copy)]
pub struct EvolutionProviders<'a> {
    pub adapt: Providers<'a>,
    pub agent: &'a dyn AgentProvider,
    pub metric: &'a dyn MetricProvider,
    pub editor: &'a dyn EditWriter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// Candidate verifier registries per step, fallback included.
    pub candidate_budget: usize,
    pub max_iters: usize,
    /// Consecutive non-improving steps before stopping.
    pub patience: usize,
    /// Fraction of tasks in the evolution split.
    pub split_ratio: f64,
    pub adaptation: AdaptationConfig,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            candidate_budget: 16,
            max_iters: 20,
            patience: 3,
            split_ratio: 0.7,
            adaptation: AdaptationConfig::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.candidate_budget == 0 {
            return Err("candidate_budget must be at least 1".into());
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        if self.patience == 0 {
            return Err("patience must be at least 1".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(format!("split_ratio must lie in (0, 1), got {}", self.split_ratio));
        }
        self.adaptation.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task_id: String,
    pub metric: f64,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// `J = M̄ - C̄` with its per-task breakdown (in split order).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub j: f64,
    pub mean_metric: f64,
    pub mean_cost: f64,
    pub per_task: Vec<TaskScore>,
}

impl ObjectiveValue {
    fn from_scores(per_task: Vec<TaskScore>) -> Self {
        // sums over sorted values so task order cannot change the result
        let mean = |f: &dyn Fn(&TaskScore) -> f64| {
            let mut v: Vec<f64> = per_task.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let j = mean(&|t| t.metric - t.cost);
        let mean_metric = mean(&|t| t.metric);
        let mean_cost = mean(&|t| t.cost);
        Self {
            j,
            mean_metric,
            mean_cost,
            per_task,
        }
    }
}

/// Runs every task once under `pair`, returning the objective and the gap
/// reports of the failed tasks.
pub fn run_split(
    pair: &RegistryPair,
    split: &[Task],
    providers: EvolutionProviders<'_>,
    cfg: &AdaptationConfig,
) -> Result<(ObjectiveValue, Vec<GapReport>), AdaptError> {
    let mut scores = Vec::with_capacity(split.len());
    let mut reports = Vec::new();
    for task in split {
        let run = adapt(&task.query, &pair.agent, &pair.verifier, providers.adapt, cfg)?;
        let cost = adaptation_cost(&run.trace, &cfg.cost);
        let (output, flag) = match providers.agent.answer(&task.query, &run.context) {
            Ok(o) => (o, None),
            Err(e) => (String::new(), Some(format!("agent_failed: {e}"))),
        };
        let metric = if flag.is_some() {
            0.0
        } else {
            providers.metric.score(&task.ground_truth, &output).clamp(0.0, 1.0)
        };
        reports.extend(build_gap_report(task, &output, &run, providers.metric));
        scores.push(TaskScore {
            task_id: task.id.clone(),
            metric,
            cost,
            flag,
        });
    }
    Ok((ObjectiveValue::from_scores(scores), reports))
}

pub fn evaluate_objective(
    pair: &RegistryPair,
    split: &[Task],
    providers: EvolutionProviders<'_>,
    cfg: &AdaptationConfig,
) -> Result<ObjectiveValue, AdaptError> {
    Ok(run_split(pair, split, providers, cfg)?.0)
}

/// Candidate verifier registries, the current one first. Reports are visited
/// round-robin, one operator per report per round, until `budget` distinct
/// registries are collected.
pub fn propose_edits(
    reports: &[GapReport],
    editor: &dyn EditWriter,
    pair: &RegistryPair,
    budget: usize,
) -> Vec<VerifierRegistry> {
    let mut out = vec![pair.verifier.clone()];
    for op in EditOperator::ALL {
        for report in reports {
            if out.len() >= budget {
                return out;
            }
            let Some(target) = report.target() else { continue };
            let Ok(Some(edit)) = editor.propose_rule_edit(op, target, report, pair) else {
                continue;
            };
            if let Ok(next) = pair.verifier.apply(&edit) {
                if !out.contains(&next) {
                    out.push(next);
                }
            }
        }
    }
    out.truncate(budget.max(1));
    out
}

/// `Φ(S, S_V')`: replays the split under the candidate routing and applies the
/// agent-side edits the writer derives from the resulting failures. Edits
/// that do not apply are dropped; each unit is edited at most once.
pub fn induce_agent_registry(
    graph: &SkillGraph,
    candidate: &VerifierRegistry,
    split: &[Task],
    providers: EvolutionProviders<'_>,
    cfg: &AdaptationConfig,
) -> Result<SkillGraph, AdaptError> {
    let replay = RegistryPair::new(graph.clone(), candidate.clone());
    let (_, reports) = run_split(&replay, split, providers, cfg)?;
    let mut out = graph.clone();
    let mut touched: BTreeSet<String> = BTreeSet::new();
    for report in &reports {
        let Ok(edits) = providers.editor.propose_agent_edits(report, graph) else {
            continue;
        };
        for edit in edits {
            let key = edit_key(&edit);
            if touched.contains(&key) {
                continue;
            }
            if let Ok(next) = apply_edit(&out, &edit) {
                out = next;
                touched.insert(key);
            }
        }
    }
    if out != *graph {
        // a failed embedder leaves the embedding empty; edges still validate
        if let Ok(embedded) = out.embed_missing(providers.adapt.embedder) {
            out = embedded;
        }
    }
    Ok(out)
}

fn edit_key(edit: &crate::graph::AgentEdit) -> String {
    use crate::graph::AgentEdit::*;
    match edit {
        Add { unit, .. } => unit.id.clone(),
        Delete { id } | Update { id, .. } => id.clone(),
        Merge { a, b } => a.min(b).clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub pair: RegistryPair,
    pub objective: ObjectiveValue,
    /// Index into the candidate list; 0 is the fallback.
    pub committed: usize,
    pub candidates: usize,
    pub reports: usize,
}

/// One iteration: reports, candidates, `Φ`, evaluation, commit. The committed
/// pair never scores below the input; ties keep the fallback.
pub fn evolve_step(
    pair: &RegistryPair,
    split: &[Task],
    providers: EvolutionProviders<'_>,
    cfg: &EvolutionConfig,
) -> Result<StepOutcome, AdaptError> {
    let (current, reports) = run_split(pair, split, providers, &cfg.adaptation)?;
    if reports.is_empty() {
        return Ok(StepOutcome {
            pair: pair.clone(),
            objective: current,
            committed: 0,
            candidates: 1,
            reports: 0,
        });
    }
    let proposals = propose_edits(&reports, providers.editor, pair, cfg.candidate_budget);
    let evaluated: Vec<Option<(RegistryPair, ObjectiveValue)>> = proposals
        .par_iter()
        .map(|verifier| {
            let agent = induce_agent_registry(&pair.agent, verifier, split, providers, &cfg.adaptation).ok()?;
            let candidate = RegistryPair {
                agent,
                verifier: verifier.clone(),
                version: pair.version,
            };
            if candidate.same_registries(pair) || candidate.validate().is_err() {
                return None;
            }
            let j = evaluate_objective(&candidate, split, providers, &cfg.adaptation).ok()?;
            Some((candidate, j))
        })
        .collect();

    let mut best: Option<(usize, RegistryPair, ObjectiveValue)> = None;
    for (i, cand) in evaluated.into_iter().enumerate() {
        let Some((p, j)) = cand else { continue };
        let bar = best.as_ref().map_or(current.j, |(_, _, b)| b.j);
        if j.j > bar {
            best = Some((i + 1, p, j));
        }
    }
    Ok(match best {
        Some((index, mut p, j)) => {
            p.version = pair.version + 1;
            StepOutcome {
                pair: p,
                objective: j,
                committed: index,
                candidates: proposals.len() + 1,
                reports: reports.len(),
            }
        }
        None => StepOutcome {
            pair: pair.clone(),
            objective: current,
            committed: 0,
            candidates: proposals.len() + 1,
            reports: reports.len(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveResult {
    pub pair: RegistryPair,
    /// `J^(0), J^(1), ...`; non-decreasing.
    pub history: Vec<f64>,
    /// The pair held after each history entry.
    pub pairs: Vec<RegistryPair>,
    pub steps: Vec<StepOutcome>,
}

/// Iterates [`evolve_step`] up to `max_iters` times. Stops at once when the
/// split has no failures, and after `patience` steps without improvement.
pub fn evolve(
    pair: &RegistryPair,
    split: &[Task],
    providers: EvolutionProviders<'_>,
    cfg: &EvolutionConfig,
) -> Result<EvolveResult, AdaptError> {
    cfg.validate().map_err(AdaptError::Config)?;
    let mut current = pair.clone();
    let mut history = Vec::new();
    let mut pairs = Vec::new();
    let mut steps = Vec::new();
    let mut stalled = 0;
    for _ in 0..cfg.max_iters {
        let step = evolve_step(&current, split, providers, cfg)?;
        if history.is_empty() {
            history.push(if step.committed == 0 {
                step.objective.j
            } else {
                evaluate_objective(&current, split, providers, &cfg.adaptation)?.j
            });
            pairs.push(current.clone());
        }
        if step.reports == 0 {
            break;
        }
        let prev = *history.last().expect("history starts non-empty");
        stalled = if step.objective.j > prev { 0 } else { stalled + 1 };
        history.push(step.objective.j);
        current = step.pair.clone();
        pairs.push(current.clone());
        steps.push(step);
        if stalled >= cfg.patience {
            break;
        }
    }
    Ok(EvolveResult {
        pair: current,
        history,
        pairs,
        steps,
    })
}

/// Scores each distinct committed pair on `validation` and returns the best
/// one with its objective; earlier pairs win ties.
pub fn select_on_validation(
    result: &EvolveResult,
    validation: &[Task],
    providers: EvolutionProviders<'_>,
    cfg: &AdaptationConfig,
) -> Result<(RegistryPair, ObjectiveValue), AdaptError> {
    let mut best: Option<(RegistryPair, ObjectiveValue)> = None;
    for p in &result.pairs {
        if best.as_ref().is_some_and(|(b, _)| b.same_registries(p)) {
            continue;
        }
        let j = evaluate_objective(p, validation, providers, cfg)?;
        if best.as_ref().is_none_or(|(_, b)| j.j > b.j) {
            best = Some((p.clone(), j));
        }
    }
    Ok(best.unwrap_or_else(|| (result.pair.clone(), ObjectiveValue::default())))
}

/// Seeded shuffle, then the first `ratio` of tasks (rounded, at least one when
/// possible) form the evolution split and the rest the validation split.
pub fn split_tasks(tasks: &[Task], ratio: f64, seed: u64) -> (Vec<Task>, Vec<Task>) {
    let mut shuffled = tasks.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ((tasks.len() as f64 * ratio).round() as usize).clamp(tasks.len().min(1), tasks.len());
    let validation = shuffled.split_off(n);
    (shuffled, validation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{RuleVerifier, SubstitutionWriter};
    use crate::graph::{AgentEdit, GraphConfig, Layer, SkillUnit};
    use crate::provider::{ProviderError, ZeroConfidence};
    use crate::retrieval::HashEmbedder;
    use crate::text::Substitution;

    static EMB: HashEmbedder = HashEmbedder::new(64);

    fn providers<'a>(editor: &'a dyn EditWriter) -> EvolutionProviders<'a> {
        EvolutionProviders {
            adapt: Providers {
                embedder: &EMB,
                confidence: &ZeroConfidence,
                verifier: &RuleVerifier,
                writer: &SubstitutionWriter,
            },
            agent: &ConcatAgent,
            metric: &TokenRecallMetric,
            editor,
        }
    }

    fn library() -> SkillGraph {
        SkillGraph::from_units(
            [
                SkillUnit::new("s", Layer::STRATEGY, "heat food").with_children(["p"]),
                SkillUnit::new("p", Layer::PROCEDURE, "heat the soup"),
            ],
            GraphConfig::default(),
        )
        .unwrap()
        .embed_missing(&EMB)
        .unwrap()
    }

    fn pair() -> RegistryPair {
        RegistryPair::new(library(), VerifierRegistry::default())
    }

    fn free() -> AdaptationConfig {
        AdaptationConfig {
            cost: crate::adaptation::CostConfig {
                lambda: 0.0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn perfect_split_scores_one_and_has_no_reports() {
        let tasks = [Task::new("t", Query::new("heat the soup"), "heat")];
        let (j, reports) = run_split(&pair(), &tasks, providers(&MechanicalEditWriter), &free()).unwrap();
        assert_eq!(j.j, 1.0);
        assert!(reports.is_empty());
    }

    #[test]
    fn report_only_below_one() {
        let task = Task::new("t", Query::new("q"), "a b");
        let run = Adaptation::default();
        assert!(build_gap_report(&task, "a b", &run, &TokenRecallMetric).is_none());
        let r = build_gap_report(&task, "a", &run, &TokenRecallMetric).unwrap();
        assert_eq!(r.error_type, "no-retrieval");
        assert!(r.path.is_empty());
    }

    #[test]
    fn objective_arithmetic() {
        let v = ObjectiveValue::from_scores(vec![TaskScore {
            task_id: "t".into(),
            metric: 1.0,
            cost: 0.2,
            flag: None,
        }]);
        assert!((v.j - 0.8).abs() < 1e-15);
    }

    fn report(target: &str, action: RoutingAction) -> GapReport {
        GapReport {
            task_id: "t".into(),
            error_type: "wrong-output".into(),
            query: Query::new("q"),
            failed_output: String::new(),
            ground_truth: "x".into(),
            retrieved: vec![target.into()],
            path: vec![target.into()],
            actions: vec![action],
            invoked: vec![],
            rewrites: BTreeMap::new(),
        }
    }

    #[test]
    fn zero_reports_give_fallback_only() {
        let c = propose_edits(&[], &MechanicalEditWriter, &pair(), 16);
        assert_eq!(c, vec![VerifierRegistry::default()]);
    }

    #[test]
    fn one_report_gives_at_most_five() {
        let c = propose_edits(&[report("p", RoutingAction::Accept)], &MechanicalEditWriter, &pair(), 16);
        assert!(c.len() <= 5 && c.len() >= 2);
        assert_eq!(c[0], VerifierRegistry::default());
    }

    #[test]
    fn budget_caps_candidates() {
        let reports = [report("p", RoutingAction::Accept), report("s", RoutingAction::Skip)];
        let c = propose_edits(&reports, &MechanicalEditWriter, &pair(), 2);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], VerifierRegistry::default());
    }

    /// Proposes one fixed agent edit for every report.
    struct OneUpdate;

    impl EditWriter for OneUpdate {
        fn propose_rule_edit(
            &self,
            _: EditOperator,
            _: &str,
            _: &GapReport,
            _: &RegistryPair,
        ) -> Result<Option<RuleEdit>, ProviderError> {
            Ok(None)
        }
        fn propose_agent_edits(&self, _: &GapReport, _: &SkillGraph) -> Result<Vec<AgentEdit>, ProviderError> {
            Ok(vec![AgentEdit::Update {
                id: "p".into(),
                content: Some("reheat the soup".into()),
                tags: None,
                embedding: None,
            }])
        }
    }

    #[test]
    fn induced_registry_without_failures_is_unchanged() {
        let tasks = [Task::new("t", Query::new("heat the soup"), "heat")];
        let g = induce_agent_registry(&library(), &VerifierRegistry::default(), &tasks, providers(&OneUpdate), &free())
            .unwrap();
        assert_eq!(g, library());
    }

    #[test]
    fn induced_registry_applies_single_update() {
        let tasks = [Task::new("t", Query::new("heat the soup"), "missing")];
        let g = induce_agent_registry(&library(), &VerifierRegistry::default(), &tasks, providers(&OneUpdate), &free())
            .unwrap();
        assert_eq!(g.unit("p").unwrap().content, "reheat the soup");
        assert_eq!(g.unit("s").unwrap(), library().unit("s").unwrap());
    }

    #[test]
    fn unreachable_ground_truth_keeps_fallback() {
        let tasks = [Task::new("t", Query::new("heat the soup"), "zebra")];
        let cfg = EvolutionConfig {
            adaptation: free(),
            ..Default::default()
        };
        let out = evolve_step(&pair(), &tasks, providers(&MechanicalEditWriter), &cfg).unwrap();
        assert_eq!(out.committed, 0);
        assert_eq!(out.pair, pair());
    }

    #[test]
    fn failed_accept_flips_to_rewrite_rule() {
        let g = SkillGraph::from_units(
            [
                SkillUnit::new("s", Layer::STRATEGY, "prepare the soup for serving").with_children(["p", "r"]),
                SkillUnit::new("p", Layer::PROCEDURE, "heat the soup"),
                SkillUnit::new("r", Layer::PROCEDURE, "pour into a bowl"),
            ],
            GraphConfig::default(),
        )
        .unwrap()
        .embed_missing(&EMB)
        .unwrap();
        let q = Query::new("prepare the soup for serving cold")
            .with_substitutions(vec![Substitution::new("heat", "cool")]);
        let tasks = [Task::new("t", q, "cool soup")];
        // s lands in the full tier, p is a partial root the verifier accepts
        let mut adaptation = free();
        adaptation.partition.theta_full = 0.99;
        let cfg = EvolutionConfig {
            adaptation,
            max_iters: 5,
            ..Default::default()
        };
        let start = RegistryPair::new(g, VerifierRegistry::default());
        let res = evolve(&start, &tasks, providers(&MechanicalEditWriter), &cfg).unwrap();
        assert!(res.history.windows(2).all(|w| w[1] >= w[0]));
        assert!(res.history[0] < 1.0);
        assert_eq!(*res.history.last().unwrap(), 1.0);
        assert_eq!(res.pair.verifier.rules[0], RoutingRule::new(RuleMatch::unit("p"), RoutingAction::Rewrite));
        assert_eq!(res.pair.version, 1);
    }

    #[test]
    fn no_failures_gives_single_entry_history() {
        let tasks = [Task::new("t", Query::new("heat the soup"), "heat")];
        let res = evolve(&pair(), &tasks, providers(&MechanicalEditWriter), &EvolutionConfig::default()).unwrap();
        assert_eq!(res.history.len(), 1);
        assert_eq!(res.pair, pair());
    }

    #[test]
    fn split_is_seeded_and_seventy_thirty() {
        let tasks: Vec<Task> = (0..10)
            .map(|i| Task::new(format!("t{i}"), Query::new("q"), "y"))
            .collect();
        let (a, b) = split_tasks(&tasks, 0.7, 3);
        assert_eq!((a.len(), b.len()), (7, 3));
        assert_eq!(split_tasks(&tasks, 0.7, 3), (a, b));
    }
}
