//! Scripted verifiers: the coverage oracle and the strategies it is compared against.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::coverage::rewritten_tags;
use super::{SimError, SyntheticTask};
use crate::adaptation::{RetrievalStage, RouteRequest, RoutingAction};
use crate::graph::SkillGraph;
use crate::provider::{ProviderError, Verifier};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifierMode {
    /// Coverage-optimal plan computed from ground-truth tags.
    Oracle,
    /// Decompose with probability `rho`; otherwise rewrite or accept with
    /// equal odds.
    Bernoulli { rho: f64, seed: u64 },
    /// Rewrite every walk root; never descend.
    ParentOnly,
    /// Decompose every walk root and rewrite each child.
    RewriteAll,
}

impl VerifierMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Oracle => "oracle",
            Self::Bernoulli { .. } => "bernoulli",
            Self::ParentOnly => "parent-only",
            Self::RewriteAll => "rewrite-all",
        }
    }
}

/// Accepts `oracle`, `parent-only`, `rewrite-all` and `bernoulli:<rho>[:<seed>]`.
impl FromStr for VerifierMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SimError::UnknownMode(s.to_string());
        match s {
            "oracle" => return Ok(Self::Oracle),
            "parent-only" => return Ok(Self::ParentOnly),
            "rewrite-all" => return Ok(Self::RewriteAll),
            _ => {}
        }
        let mut parts = s.split(':');
        if parts.next() != Some("bernoulli") {
            return Err(unknown());
        }
        let rho: f64 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(unknown)?;
        let seed: u64 = match parts.next() {
            Some(p) => p.parse().map_err(|_| unknown())?,
            None => 0,
        };
        if parts.next().is_some() || !(0.0..=1.0).contains(&rho) {
            return Err(unknown());
        }
        Ok(Self::Bernoulli { rho, seed })
    }
}

enum Script {
    Oracle(BTreeMap<String, RoutingAction>),
    Bernoulli { rho: f64, rng: Mutex<ChaCha8Rng> },
    ParentOnly,
    RewriteAll,
}

pub struct ScriptedVerifier {
    script: Script,
}

impl ScriptedVerifier {
    /// `stage` must be the retrieval stage `adapt` will compute for `task`.
    pub fn new(mode: VerifierMode, task: &SyntheticTask, graph: &SkillGraph, stage: &RetrievalStage) -> Self {
        let script = match mode {
            VerifierMode::Oracle => Script::Oracle(oracle_plan(task, graph, &stage.roots, &stage.tiers.full)),
            VerifierMode::Bernoulli { rho, seed } => Script::Bernoulli {
                rho,
                rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            },
            VerifierMode::ParentOnly => Script::ParentOnly,
            VerifierMode::RewriteAll => Script::RewriteAll,
        };
        Self { script }
    }

    pub fn bernoulli(rho: f64, seed: u64) -> Self {
        Self {
            script: Script::Bernoulli {
                rho,
                rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            },
        }
    }

    /// The oracle's decision for `id`, if this is an oracle with a plan for it.
    pub fn planned(&self, id: &str) -> Option<RoutingAction> {
        match &self.script {
            Script::Oracle(plan) => plan.get(id).copied(),
            _ => None,
        }
    }
}

impl Verifier for ScriptedVerifier {
    fn route(&self, req: &RouteRequest<'_>) -> Result<RoutingAction, ProviderError> {
        Ok(match &self.script {
            Script::Oracle(plan) => plan.get(&req.unit.id).copied().unwrap_or(RoutingAction::Skip),
            Script::Bernoulli { rho, rng } => {
                let mut rng = rng.lock().expect("verifier rng poisoned");
                bernoulli_action(&mut *rng, *rho)
            }
            Script::ParentOnly => RoutingAction::Rewrite,
            Script::RewriteAll if req.depth == 0 && !req.unit.is_leaf() => RoutingAction::Decompose,
            Script::RewriteAll => RoutingAction::Rewrite,
        })
    }
}

pub(crate) fn bernoulli_action(rng: &mut impl Rng, rho: f64) -> RoutingAction {
    if rng.random_bool(rho) {
        RoutingAction::Decompose
    } else if rng.random_bool(0.5) {
        RoutingAction::Rewrite
    } else {
        RoutingAction::Accept
    }
}

/// Best plan per newly covered tag mask: fewest rewrites, then fewest visits.
#[derive(Debug, Clone)]
struct Entry {
    rewrites: u32,
    visits: u32,
    action: RoutingAction,
    /// For `Decompose`: the mask each child contributes, in child order.
    picks: Vec<(String, u64)>,
}

fn rank(a: RoutingAction) -> u8 {
    match a {
        RoutingAction::Skip => 0,
        RoutingAction::Accept => 1,
        RoutingAction::Rewrite => 2,
        RoutingAction::Decompose => 3,
    }
}

type Table = BTreeMap<u64, Entry>;

fn offer(table: &mut Table, mask: u64, e: Entry) {
    let better = table
        .get(&mask)
        .is_none_or(|old| (e.rewrites, e.visits, rank(e.action)) < (old.rewrites, old.visits, rank(old.action)));
    if better {
        table.insert(mask, e);
    }
}

struct Planner<'a> {
    graph: &'a SkillGraph,
    task: &'a SyntheticTask,
    bit: BTreeMap<&'a str, u64>,
    decided: BTreeSet<String>,
    tables: BTreeMap<String, Table>,
}

impl Planner<'_> {
    fn mask<'t>(&self, tags: impl IntoIterator<Item = &'t String>) -> u64 {
        tags.into_iter()
            .filter_map(|t| self.bit.get(t.as_str()))
            .fold(0, |m, b| m | b)
    }

    fn solve(&mut self, id: &str, base: u64) -> &Table {
        let graph = self.graph;
        let unit = graph.unit(id).expect("planner walks graph units");
        let mut table = Table::new();
        let leaf = |action| Entry {
            rewrites: 0,
            visits: 1,
            action,
            picks: Vec::new(),
        };
        offer(&mut table, 0, leaf(RoutingAction::Skip));
        offer(&mut table, self.mask(&unit.tags) & !base, leaf(RoutingAction::Accept));
        let subst = rewritten_tags(self.task, graph, id);
        if subst != unit.tags {
            let e = Entry {
                rewrites: 1,
                ..leaf(RoutingAction::Rewrite)
            };
            offer(&mut table, self.mask(&subst) & !base, e);
        }
        let children: Vec<String> = unit
            .children
            .iter()
            .filter(|c| !self.decided.contains(*c) && graph.contains(c))
            .cloned()
            .collect();
        if !children.is_empty() {
            let mut acc: BTreeMap<u64, (u32, u32, Vec<(String, u64)>)> = [(0, (0, 0, Vec::new()))].into();
            for c in &children {
                let child: Vec<(u64, u32, u32)> = self
                    .solve(c, base)
                    .iter()
                    .map(|(m, e)| (*m, e.rewrites, e.visits))
                    .collect();
                let mut next: BTreeMap<u64, (u32, u32, Vec<(String, u64)>)> = BTreeMap::new();
                for (m1, (r1, v1, p1)) in &acc {
                    for &(m2, r2, v2) in &child {
                        let key = (r1 + r2, v1 + v2);
                        let m = m1 | m2;
                        if next.get(&m).is_none_or(|(r, v, _)| key < (*r, *v)) {
                            let mut picks = p1.clone();
                            picks.push((c.clone(), m2));
                            next.insert(m, (key.0, key.1, picks));
                        }
                    }
                }
                acc = next;
            }
            for (m, (r, v, picks)) in acc {
                offer(
                    &mut table,
                    m,
                    Entry {
                        rewrites: r,
                        visits: v + 1,
                        action: RoutingAction::Decompose,
                        picks,
                    },
                );
            }
        }
        self.tables.insert(id.to_string(), table);
        &self.tables[id]
    }

    fn assign(&mut self, id: &str, mask: u64, out: &mut BTreeMap<String, RoutingAction>) {
        let entry = self.tables[id][&mask].clone();
        out.insert(id.to_string(), entry.action);
        self.decided.insert(id.to_string());
        for (child, m) in &entry.picks {
            self.assign(child, *m, out);
        }
    }
}

/// Decisions for every unit the walk will visit when roots are processed in
/// order: each root gets the plan maximizing newly covered required tags,
/// then minimizing rewrites, then visits. Tags covered by `full` or by an
/// earlier root's plan count as already covered.
pub fn oracle_plan(
    task: &SyntheticTask,
    graph: &SkillGraph,
    roots: &[String],
    full: &BTreeSet<String>,
) -> BTreeMap<String, RoutingAction> {
    let bit: BTreeMap<&str, u64> = task
        .required
        .iter()
        .take(64)
        .enumerate()
        .map(|(i, t)| (t.as_str(), 1u64 << i))
        .collect();
    let mut planner = Planner {
        graph,
        task,
        bit,
        decided: BTreeSet::new(),
        tables: BTreeMap::new(),
    };
    let mut base = planner.mask(full.iter().filter_map(|id| graph.unit(id)).flat_map(|u| u.tags.iter()));
    let mut out = BTreeMap::new();
    for root in roots {
        if planner.decided.contains(root) || !graph.contains(root) {
            continue;
        }
        planner.tables.clear();
        let table = planner.solve(root, base);
        let (&mask, _) = table
            .iter()
            .max_by(|(ma, a), (mb, b)| {
                ma.count_ones()
                    .cmp(&mb.count_ones())
                    .then((b.rewrites, b.visits, rank(b.action)).cmp(&(a.rewrites, a.visits, rank(a.action))))
                    .then(mb.cmp(ma))
            })
            .expect("every table offers Skip");
        planner.assign(root, mask, &mut out);
        base |= mask;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::Query;
    use crate::graph::{GraphConfig, Layer, SkillUnit};
    use crate::text::Substitution;

    fn task(required: &[&str], subs: Vec<Substitution>) -> SyntheticTask {
        SyntheticTask {
            id: "t".into(),
            query: Query::new("q").with_substitutions(subs),
            required: required.iter().map(|s| s.to_string()).collect(),
            ground_truth: String::new(),
        }
    }

    fn tree() -> SkillGraph {
        SkillGraph::from_units(
            [
                SkillUnit::new("r", Layer::STRATEGY, "").with_children(["a", "b"]).with_tags(["z"]),
                SkillUnit::new("a", Layer::PROCEDURE, "").with_tags(["x"]),
                SkillUnit::new("b", Layer::PROCEDURE, "").with_tags(["old"]),
            ],
            GraphConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn useless_subtree_is_skipped() {
        let plan = oracle_plan(&task(&["nothing"], vec![]), &tree(), &["r".into()], &BTreeSet::new());
        assert_eq!(plan["r"], RoutingAction::Skip);
        assert_eq!(plan.len(), 1);
    }

    #[test]
    fn drills_down_to_the_useful_child() {
        let plan = oracle_plan(&task(&["x"], vec![]), &tree(), &["r".into()], &BTreeSet::new());
        assert_eq!(plan["r"], RoutingAction::Decompose);
        assert_eq!(plan["a"], RoutingAction::Accept);
        assert_eq!(plan["b"], RoutingAction::Skip);
    }

    #[test]
    fn rewrites_only_where_it_gains() {
        let t = task(&["x", "new"], vec![Substitution::new("old", "new")]);
        let plan = oracle_plan(&t, &tree(), &["r".into()], &BTreeSet::new());
        assert_eq!(plan["a"], RoutingAction::Accept);
        assert_eq!(plan["b"], RoutingAction::Rewrite);
    }

    #[test]
    fn already_covered_tags_are_not_chased() {
        let full: BTreeSet<String> = ["a".to_string()].into();
        let plan = oracle_plan(&task(&["x"], vec![]), &tree(), &["r".into()], &full);
        assert_eq!(plan["r"], RoutingAction::Skip);
    }

    #[test]
    fn mode_names_parse() {
        assert_eq!("oracle".parse::<VerifierMode>().unwrap(), VerifierMode::Oracle);
        assert_eq!(
            "bernoulli:0.25:7".parse::<VerifierMode>().unwrap(),
            VerifierMode::Bernoulli { rho: 0.25, seed: 7 }
        );
        assert!("bernoulli:2".parse::<VerifierMode>().is_err());
        assert!("greedy".parse::<VerifierMode>().is_err());
    }

    #[test]
    fn bernoulli_zero_never_decomposes() {
        let v = ScriptedVerifier::bernoulli(0.0, 1);
        let g = tree();
        let q = Query::new("q");
        let rules = crate::evolution::VerifierRegistry::default();
        for _ in 0..100 {
            let req = RouteRequest {
                query: &q,
                unit: g.unit("r").unwrap(),
                score: 0.5,
                depth: 0,
                rules: &rules,
            };
            assert_ne!(v.route(&req).unwrap(), RoutingAction::Decompose);
        }
    }
}
