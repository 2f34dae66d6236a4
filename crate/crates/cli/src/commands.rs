//! Command bodies. Each returns what goes to stdout; errors carry an exit code.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use skilltree_core::adaptation::{adaptation_cost, AdaptError, Adaptation};
use skilltree_core::evolution::{select_on_validation, split_tasks, ObjectiveValue};
use skilltree_core::graph::{build_edges, decomposition_subtree, GraphError};
use skilltree_core::io::{
    load_registry, read_skills, read_split, save_registry, write_atomic, ConfigError, InputError, RegistryError,
    RunConfig,
};
use skilltree_core::provider::ProviderError;
use skilltree_core::retrieval::RetrievalError;
use skilltree_core::sim::{self, SimConfig, SimError};
use skilltree_core::text::Substitution;
use skilltree_core::{adapt, evolve, Query, RegistryPair, SkillGraph, VerifierRegistry};

use crate::providers::ProviderHost;

pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_DATA: u8 = 4;
pub const EXIT_PROVIDER: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Provider(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Data(_) => EXIT_DATA,
            Self::Provider(_) => EXIT_PROVIDER,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Data(m) => write!(f, "data error: {m}"),
            Self::Provider(m) => write!(f, "provider error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        Self::Provider(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Provider(p) => p.into(),
            GraphError::Config(m) => Self::Config(m),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<AdaptError> for CliError {
    fn from(e: AdaptError) -> Self {
        match e {
            AdaptError::Config(m) => Self::Config(m),
            AdaptError::Retrieval(RetrievalError::Provider(p)) => p.into(),
            AdaptError::Retrieval(RetrievalError::Config(m)) => Self::Config(m),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => Self::Config(m),
            SimError::Adapt(a) => a.into(),
            other => Self::Data(other.to_string()),
        }
    }
}

/// Loaded config plus the directory relative paths resolve against.
pub struct Context {
    pub cfg: RunConfig,
    pub base: PathBuf,
    pub out: Option<PathBuf>,
}

impl Context {
    pub fn registry_path(&self) -> PathBuf {
        self.base.join(&self.cfg.registry)
    }

    fn host(&self) -> Result<ProviderHost, CliError> {
        Ok(ProviderHost::new(&self.cfg.providers)?)
    }

    fn load_pair(&self) -> Result<RegistryPair, CliError> {
        Ok(load_registry(&self.registry_path())?)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("command output serializes");
    s.push('\n');
    s
}

pub const CONFIG_FILE: &str = "skilltree.toml";

/// Writes a default config and an empty registry into `dir`. Existing files
/// are kept unless `force` is set.
pub fn init(dir: &Path, force: bool) -> Result<String, CliError> {
    let cfg_path = dir.join(CONFIG_FILE);
    let cfg = RunConfig::default();
    let reg_path = dir.join(&cfg.registry);
    for p in [&cfg_path, &reg_path] {
        if p.exists() && !force {
            return Err(CliError::Data(format!("{} already exists (use --force to overwrite)", p.display())));
        }
    }
    write_atomic(&cfg_path, cfg.to_toml().as_bytes()).map_err(|e| CliError::Data(e.to_string()))?;
    let pair = RegistryPair::new(SkillGraph::empty(cfg.graph), VerifierRegistry::default());
    save_registry(&pair, &reg_path)?;
    Ok(to_json(&json!({
        "config": CONFIG_FILE,
        "registry": cfg.registry,
        "units": 0,
    })))
}

pub fn ingest(ctx: &Context, skills: &Path) -> Result<String, CliError> {
    let units = read_skills(skills)?;
    let host = ctx.host()?;
    let providers = host.providers();
    let graph = build_edges(units, providers.embedder(), ctx.cfg.graph)?;
    let pair = RegistryPair::new(graph, VerifierRegistry::default());
    let target = ctx.out.clone().unwrap_or_else(|| ctx.registry_path());
    save_registry(&pair, &target)?;
    Ok(to_json(&json!({
        "units": pair.agent.len(),
        "hierarchical_edges": pair.agent.hierarchical_edges().count(),
        "lateral_edges": pair.agent.lateral_edges().count(),
        "checksum": skilltree_core::io::checksum(&pair),
    })))
}

fn parse_substitution(s: &str) -> Result<Substitution, CliError> {
    match s.split_once('=') {
        Some((from, to)) if !from.is_empty() => Ok(Substitution::new(from, to)),
        _ => Err(CliError::Data(format!("substitution `{s}` is not FROM=TO"))),
    }
}

#[derive(Serialize)]
struct QueryOutput<'a> {
    query: &'a Query,
    cost: f64,
    rendered: String,
    #[serde(flatten)]
    adaptation: &'a Adaptation,
}

pub fn query(ctx: &Context, text: &str, subs: &[String]) -> Result<String, CliError> {
    let subs = subs.iter().map(|s| parse_substitution(s)).collect::<Result<_, _>>()?;
    let q = Query::new(text).with_substitutions(subs);
    let pair = ctx.load_pair()?;
    let host = ctx.host()?;
    let providers = host.providers();
    let run = adapt(&q, &pair.agent, &pair.verifier, providers.adapt(), &ctx.cfg.adaptation)?;
    Ok(to_json(&QueryOutput {
        query: &q,
        cost: adaptation_cost(&run.trace, &ctx.cfg.adaptation.cost),
        rendered: run.context.render(),
        adaptation: &run,
    }))
}

#[derive(Serialize)]
struct StepSummary {
    iteration: usize,
    j: f64,
    committed: usize,
    candidates: usize,
    reports: usize,
}

#[derive(Serialize)]
struct Validation {
    tasks: usize,
    selected_version: u64,
    objective: ObjectiveValue,
}

#[derive(Serialize)]
struct EvolveOutput {
    tasks: usize,
    history: Vec<f64>,
    steps: Vec<StepSummary>,
    version: u64,
    rules: usize,
    units: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<Validation>,
    saved: bool,
}

/// Runs evolution on the split and saves the resulting pair. With
/// `select_on_validation` the split is shuffled by `seed` into evolution and
/// validation parts and the validation-best committed pair is saved.
pub fn evolve_cmd(ctx: &Context, split: &Path, select: bool, seed: u64) -> Result<String, CliError> {
    let tasks = read_split(split)?;
    if tasks.is_empty() {
        return Err(CliError::Data("split file has no tasks".into()));
    }
    let pair = ctx.load_pair()?;
    let host = ctx.host()?;
    let providers = host.providers();
    let evo = ctx.cfg.evolution_config();
    let (train, validation) = if select {
        split_tasks(&tasks, evo.split_ratio, seed)
    } else {
        (tasks.clone(), Vec::new())
    };
    let result = evolve(&pair, &train, providers.evolution(), &evo)?;
    let (best, validation) = if select && !validation.is_empty() {
        let (best, objective) = select_on_validation(&result, &validation, providers.evolution(), &evo.adaptation)?;
        let v = Validation {
            tasks: validation.len(),
            selected_version: best.version,
            objective,
        };
        (best, Some(v))
    } else {
        (result.pair.clone(), None)
    };
    // A pair equal to the input leaves the file untouched.
    let changed = !(best.same_registries(&pair) && best.version == pair.version);
    let target = ctx.out.clone().unwrap_or_else(|| ctx.registry_path());
    let saved = changed || ctx.out.is_some();
    if saved {
        save_registry(&best, &target)?;
    }
    let steps = result
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| StepSummary {
            iteration: i + 1,
            j: s.objective.j,
            committed: s.committed,
            candidates: s.candidates,
            reports: s.reports,
        })
        .collect();
    Ok(to_json(&EvolveOutput {
        tasks: train.len(),
        history: result.history,
        steps,
        version: best.version,
        rules: best.verifier.rules.len(),
        units: best.agent.len(),
        validation,
        saved,
    }))
}

pub fn inspect(ctx: &Context, id: &str) -> Result<String, CliError> {
    let pair = ctx.load_pair()?;
    let g = &pair.agent;
    let unit = g
        .unit(id)
        .ok_or_else(|| CliError::Data(format!("no unit `{id}` in the registry")))?;
    let sub = decomposition_subtree(g, id)?;
    let mut layers: BTreeMap<String, usize> = BTreeMap::new();
    for u in sub.units.iter().filter_map(|u| g.unit(u)) {
        *layers.entry(u.layer.name().to_string()).or_default() += 1;
    }
    let leaves = sub
        .units
        .iter()
        .filter_map(|u| g.unit(u))
        .filter(|u| u.is_leaf())
        .count();
    let edges: Vec<_> = g
        .hierarchical_edges()
        .map(|e| ("hierarchical", e))
        .chain(g.lateral_edges().map(|e| ("lateral", e)))
        .filter(|(_, (a, b, _))| *a == id || *b == id)
        .map(|(kind, (a, b, w))| json!({"kind": kind, "from": a, "to": b, "weight": w}))
        .collect();
    Ok(to_json(&json!({
        "id": unit.id,
        "layer": unit.layer.0,
        "layer_name": unit.layer.name(),
        "content": unit.content,
        "tags": unit.tags,
        "children": unit.children,
        "parents": g.parents(id),
        "embedded": unit.embedding.is_some(),
        "edges": edges,
        "subtree": {
            "size": sub.size,
            "depth": sub.depth,
            "branching": sub.branching,
            "leaves": leaves,
            "layers": layers,
        },
        "verifier_rules": pair.verifier.rules.iter().filter(|r| r.when.unit.as_deref() == Some(id)).count(),
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Harness {
    Prop1,
    Prop2,
    Prop3,
    Ablation,
}

/// Named CSV tables plus a text summary.
pub struct SimOutput {
    pub tables: Vec<(String, String)>,
    pub summary: String,
}

pub fn simulate(cfg: &SimConfig, which: Harness) -> Result<SimOutput, CliError> {
    Ok(match which {
        Harness::Prop1 => {
            let r = sim::prop1(cfg)?;
            SimOutput {
                tables: vec![("prop1.csv".into(), sim::to_csv(&r.rows))],
                summary: r.summary(),
            }
        }
        Harness::Prop2 => {
            let r = sim::prop2(cfg)?;
            SimOutput {
                tables: vec![("prop2.csv".into(), sim::to_csv(&r.rows))],
                summary: r.summary(),
            }
        }
        Harness::Prop3 => {
            let r = sim::prop3(cfg)?;
            SimOutput {
                tables: vec![
                    ("prop3_greedy.csv".into(), sim::to_csv(&r.greedy)),
                    ("prop3_errors.csv".into(), sim::to_csv(&r.errors)),
                ],
                summary: r.summary(),
            }
        }
        Harness::Ablation => {
            let r = sim::ablation(cfg)?;
            SimOutput {
                tables: vec![("ablation.csv".into(), sim::to_csv(&r.rows))],
                summary: r.summary(),
            }
        }
    })
}
