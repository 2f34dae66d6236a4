//! Skill units and the four-layer skill graph.
//!
//! A [`SkillGraph`] is an immutable value. Hierarchical edges always mirror the
//! units' `children` lists; lateral edges join siblings that share a parent.
//! Edits go through [`apply_edit`] and return a new graph.

mod edit;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::{EmbeddingProvider, ProviderError};
use crate::retrieval::cosine;

pub use edit::{apply_edit, AgentEdit, EditError, EditOperation, EditOperator, TargetRegistry};
pub use validate::{validate_graph, ValidationReport, Violation};

/// Abstraction layer of a skill unit. Valid values are 1 through 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layer(pub u8);

impl Layer {
    pub const POLICY: Layer = Layer(1);
    pub const STRATEGY: Layer = Layer(2);
    pub const PROCEDURE: Layer = Layer(3);
    pub const PRIMITIVE: Layer = Layer(4);

    pub fn is_valid(self) -> bool {
        (1..=4).contains(&self.0)
    }

    pub fn is_primitive(self) -> bool {
        self == Self::PRIMITIVE
    }

    pub fn child(self) -> Option<Layer> {
        (self.is_valid() && !self.is_primitive()).then(|| Layer(self.0 + 1))
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "policy",
            2 => "strategy",
            3 => "procedure",
            4 => "primitive",
            _ => "invalid",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillUnit {
    pub id: String,
    pub layer: Layer,
    pub content: String,
    #[serde(default)]
    pub children: Vec<String>,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

impl SkillUnit {
    pub fn new(id: impl Into<String>, layer: Layer, content: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            layer,
            content: content.into(),
            children: Vec::new(),
            tags: BTreeSet::new(),
            embedding: None,
        }
    }

    pub fn with_children<I, S>(mut self, children: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.children = children.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags = tags.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_embedding(mut self, embedding: Vec<f64>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Structural edge weights `w_ij`, multiplied by the clamped cosine similarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub w_parent_child: f64,
    pub w_sibling: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            w_parent_child: 1.0,
            w_sibling: 0.5,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, w) in [
            ("w_parent_child", self.w_parent_child),
            ("w_sibling", self.w_sibling),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(format!("{name} must lie in [0, 1], got {w}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unit `{parent}` lists unknown child `{child}`")]
    MissingChild { parent: String, child: String },
    #[error("duplicate unit id `{0}`")]
    DuplicateId(String),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("graph violates structural invariants: {0}")]
    Invalid(ValidationReport),
    #[error("invalid graph config: {0}")]
    Config(String),
    #[error("embedding failed: {0}")]
    Provider(#[from] ProviderError),
}

/// Ordered pair key for an edge. Lateral keys are stored with `a < b`.
pub type EdgeKey = (String, String);

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "GraphRecord", into = "GraphRecord")]
pub struct SkillGraph {
    units: BTreeMap<String, SkillUnit>,
    hierarchical: BTreeMap<EdgeKey, f64>,
    lateral: BTreeMap<EdgeKey, f64>,
    config: GraphConfig,
}

/// Flat, canonically ordered form of a graph used for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    #[serde(default)]
    pub config: GraphConfig,
    pub units: Vec<SkillUnit>,
    #[serde(default)]
    pub hierarchical_edges: Vec<(String, String, f64)>,
    #[serde(default)]
    pub lateral_edges: Vec<(String, String, f64)>,
}

impl From<SkillGraph> for GraphRecord {
    fn from(g: SkillGraph) -> Self {
        Self {
            config: g.config,
            units: g.units.into_values().collect(),
            hierarchical_edges: g.hierarchical.into_iter().map(|((a, b), w)| (a, b, w)).collect(),
            lateral_edges: g.lateral.into_iter().map(|((a, b), w)| (a, b, w)).collect(),
        }
    }
}

impl From<GraphRecord> for SkillGraph {
    fn from(r: GraphRecord) -> Self {
        // Units are keyed by their own id; duplicates collapse to the last one,
        // which validation cannot observe, so keep the first instead.
        let mut units = BTreeMap::new();
        for u in r.units {
            units.entry(u.id.clone()).or_insert(u);
        }
        Self {
            units,
            hierarchical: r
                .hierarchical_edges
                .into_iter()
                .map(|(a, b, w)| ((a, b), w))
                .collect(),
            lateral: r
                .lateral_edges
                .into_iter()
                .map(|(a, b, w)| (lateral_key(&a, &b), w))
                .collect(),
            config: r.config,
        }
    }
}

fn lateral_key(a: &str, b: &str) -> EdgeKey {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SkillGraph {
    pub fn empty(config: GraphConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    /// Assembles a graph from raw parts without any checking. Intended for
    /// loaders and for exercising [`validate_graph`] on malformed input.
    pub fn from_parts(
        units: impl IntoIterator<Item = SkillUnit>,
        hierarchical: impl IntoIterator<Item = (String, String, f64)>,
        lateral: impl IntoIterator<Item = (String, String, f64)>,
        config: GraphConfig,
    ) -> Self {
        GraphRecord {
            config,
            units: units.into_iter().collect(),
            hierarchical_edges: hierarchical.into_iter().collect(),
            lateral_edges: lateral.into_iter().collect(),
        }
        .into()
    }

    /// Units plus edges derived from their children lists and stored embeddings.
    pub fn from_units(
        units: impl IntoIterator<Item = SkillUnit>,
        config: GraphConfig,
    ) -> Result<Self, GraphError> {
        let mut map = BTreeMap::new();
        for u in units {
            if map.contains_key(&u.id) {
                return Err(GraphError::DuplicateId(u.id));
            }
            map.insert(u.id.clone(), u);
        }
        for u in map.values() {
            if let Some(c) = u.children.iter().find(|c| !map.contains_key(*c)) {
                return Err(GraphError::MissingChild {
                    parent: u.id.clone(),
                    child: c.clone(),
                });
            }
        }
        let mut g = Self {
            units: map,
            hierarchical: BTreeMap::new(),
            lateral: BTreeMap::new(),
            config,
        };
        g.rebuild_edges();
        Ok(g)
    }

    pub fn config(&self) -> GraphConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn unit(&self, id: &str) -> Option<&SkillUnit> {
        self.units.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.units.contains_key(id)
    }

    /// Units in id order.
    pub fn units(&self) -> impl Iterator<Item = &SkillUnit> {
        self.units.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.units.keys().map(String::as_str)
    }

    pub fn hierarchical_edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.hierarchical
            .iter()
            .map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
    }

    pub fn lateral_edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.lateral
            .iter()
            .map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
    }

    /// Parents of `id`, in id order.
    pub fn parents(&self, id: &str) -> Vec<&str> {
        self.units
            .values()
            .filter(|u| u.children.iter().any(|c| c == id))
            .map(|u| u.id.as_str())
            .collect()
    }

    /// Every edge incident to `id` as `(neighbor, weight)`, hierarchical edges
    /// in both directions.
    pub fn neighbors(&self, id: &str) -> Vec<(&str, f64)> {
        let mut out = Vec::new();
        for ((a, b), w) in self.hierarchical.iter().chain(self.lateral.iter()) {
            if a == id {
                out.push((b.as_str(), *w));
            } else if b == id {
                out.push((a.as_str(), *w));
            }
        }
        out
    }

    /// Fills in embeddings for units that lack one and recomputes edge weights.
    pub fn embed_missing(&self, embedder: &dyn EmbeddingProvider) -> Result<Self, GraphError> {
        let mut g = self.clone();
        let mut changed = false;
        for u in g.units.values_mut() {
            if u.embedding.is_none() {
                u.embedding = Some(embedder.embed(&u.content)?.vector);
                changed = true;
            }
        }
        if changed {
            g.rebuild_edges();
        }
        Ok(g)
    }

    /// Recomputes both edge sets from children lists. A pair with a missing
    /// embedding on either side uses similarity 1 (structural weight only).
    pub(crate) fn rebuild_edges(&mut self) {
        let mut hierarchical = BTreeMap::new();
        let mut lateral = BTreeMap::new();
        for parent in self.units.values() {
            let kids: Vec<&SkillUnit> = parent
                .children
                .iter()
                .filter_map(|c| self.units.get(c))
                .collect();
            for child in &kids {
                let w = self.edge_weight(parent, child, self.config.w_parent_child);
                hierarchical.insert((parent.id.clone(), child.id.clone()), w);
            }
            for (i, a) in kids.iter().enumerate() {
                for b in &kids[i + 1..] {
                    if a.id == b.id || a.layer != b.layer {
                        continue;
                    }
                    let w = self.edge_weight(a, b, self.config.w_sibling);
                    lateral.insert(lateral_key(&a.id, &b.id), w);
                }
            }
        }
        self.hierarchical = hierarchical;
        self.lateral = lateral;
    }

    fn edge_weight(&self, a: &SkillUnit, b: &SkillUnit, structural: f64) -> f64 {
        let sim = match (&a.embedding, &b.embedding) {
            (Some(x), Some(y)) => cosine(x, y),
            _ => 1.0,
        };
        edge_weight(sim, structural)
    }
}

/// `e_ij = clamp(sim, 0, 1) * w_ij`.
pub fn edge_weight(similarity: f64, structural: f64) -> f64 {
    let sim = if similarity.is_nan() { 0.0 } else { similarity.clamp(0.0, 1.0) };
    sim * structural
}

/// Embeds every unit lacking an embedding, derives weighted edges and validates.
pub fn build_edges(
    units: impl IntoIterator<Item = SkillUnit>,
    embedder: &dyn EmbeddingProvider,
    cfg: GraphConfig,
) -> Result<SkillGraph, GraphError> {
    cfg.validate().map_err(GraphError::Config)?;
    let graph = SkillGraph::from_units(units, cfg)?.embed_missing(embedder)?;
    let report = validate_graph(&graph);
    if !report.is_empty() {
        return Err(GraphError::Invalid(report));
    }
    Ok(graph)
}

/// The decomposition subtree below a root: every unit reachable through
/// hierarchical edges, in depth-first document order, each listed once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subtree {
    pub root: String,
    pub units: Vec<String>,
    /// Number of distinct units `n`.
    pub size: usize,
    /// Maximum branching factor `b` inside the subtree.
    pub branching: usize,
    /// Longest root-to-leaf path in edges, `D`.
    pub depth: usize,
}

pub fn decomposition_subtree(graph: &SkillGraph, root: &str) -> Result<Subtree, GraphError> {
    if !graph.contains(root) {
        return Err(GraphError::UnknownUnit(root.to_string()));
    }
    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    let mut stack = vec![root];
    let mut branching = 0;
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        order.push(id.to_string());
        let Some(u) = graph.unit(id) else { continue };
        branching = branching.max(u.children.len());
        stack.extend(u.children.iter().rev().map(String::as_str));
    }

    let mut depth_memo: BTreeMap<&str, usize> = BTreeMap::new();
    let depth = subtree_depth(graph, root, &mut depth_memo, &mut BTreeSet::new());
    Ok(Subtree {
        root: root.to_string(),
        size: order.len(),
        units: order,
        branching,
        depth,
    })
}

fn subtree_depth<'g>(
    graph: &'g SkillGraph,
    id: &'g str,
    memo: &mut BTreeMap<&'g str, usize>,
    on_path: &mut BTreeSet<&'g str>,
) -> usize {
    if let Some(&d) = memo.get(id) {
        return d;
    }
    // cycles only exist in invalid graphs; cut them here
    if !on_path.insert(id) {
        return 0;
    }
    let d = graph
        .unit(id)
        .map(|u| {
            u.children
                .iter()
                .filter(|c| graph.contains(c))
                .map(|c| 1 + subtree_depth(graph, c, memo, on_path))
                .max()
                .unwrap_or(0)
        })
        .unwrap_or(0);
    on_path.remove(id);
    memo.insert(id, d);
    d
}
