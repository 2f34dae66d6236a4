use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{validate_graph, SkillGraph, SkillUnit, ValidationReport};
use crate::evolution::RuleEdit;

/// Separator inserted between the contents of merged units.
pub const MERGE_SEPARATOR: &str = "\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EditOperator {
    Add,
    Delete,
    Update,
    Merge,
}

impl EditOperator {
    pub const ALL: [EditOperator; 4] = [Self::Add, Self::Delete, Self::Update, Self::Merge];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRegistry {
    Agent,
    Verifier,
}

/// A single-operator edit against the agent registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AgentEdit {
    /// Insert `unit`, optionally appending it to `parent`'s children.
    Add {
        unit: SkillUnit,
        #[serde(default)]
        parent: Option<String>,
    },
    /// Remove a unit and prune descendants left without any parent.
    Delete { id: String },
    /// Replace content, tags or embedding in place. A content change without
    /// a new embedding clears the stale one.
    Update {
        id: String,
        #[serde(default)]
        content: Option<String>,
        #[serde(default)]
        tags: Option<BTreeSet<String>>,
        #[serde(default)]
        embedding: Option<Vec<f64>>,
    },
    /// Fold one unit into another; the lexicographically smaller id survives.
    Merge { a: String, b: String },
}

impl AgentEdit {
    pub fn operator(&self) -> EditOperator {
        match self {
            Self::Add { .. } => EditOperator::Add,
            Self::Delete { .. } => EditOperator::Delete,
            Self::Update { .. } => EditOperator::Update,
            Self::Merge { .. } => EditOperator::Merge,
        }
    }
}

/// An edit against either registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "registry", content = "edit", rename_all = "snake_case")]
pub enum EditOperation {
    Agent(AgentEdit),
    Verifier(RuleEdit),
}

impl EditOperation {
    pub fn target(&self) -> TargetRegistry {
        match self {
            Self::Agent(_) => TargetRegistry::Agent,
            Self::Verifier(_) => TargetRegistry::Verifier,
        }
    }

    pub fn operator(&self) -> EditOperator {
        match self {
            Self::Agent(e) => e.operator(),
            Self::Verifier(e) => e.operator(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("unit `{0}` already exists")]
    DuplicateId(String),
    #[error("invalid layer {layer} for unit `{id}`")]
    InvalidLayer { id: String, layer: u8 },
    #[error("layer adjacency violated between `{parent}` and `{child}`")]
    LayerAdjacency { parent: String, child: String },
    #[error("cannot merge `{a}` and `{b}` on different layers")]
    MergeAcrossLayers { a: String, b: String },
    #[error("cannot merge `{0}` with itself")]
    MergeSelf(String),
    #[error("rule index {index} out of range (len {len})")]
    RuleIndex { index: usize, len: usize },
    #[error("cannot merge rules with different actions")]
    RuleActionMismatch,
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("edit would leave an invalid graph: {0}")]
    Invalid(ValidationReport),
}

/// Applies one agent-side edit, returning a new graph. The input is untouched.
pub fn apply_edit(graph: &SkillGraph, edit: &AgentEdit) -> Result<SkillGraph, EditError> {
    let mut g = graph.clone();
    match edit {
        AgentEdit::Add { unit, parent } => add(&mut g, unit, parent.as_deref())?,
        AgentEdit::Delete { id } => delete(&mut g, id)?,
        AgentEdit::Update {
            id,
            content,
            tags,
            embedding,
        } => {
            let u = g
                .units
                .get_mut(id)
                .ok_or_else(|| EditError::UnknownUnit(id.clone()))?;
            if let Some(c) = content {
                if *c != u.content {
                    u.embedding = None;
                }
                u.content = c.clone();
            }
            if let Some(t) = tags {
                u.tags = t.clone();
            }
            if let Some(e) = embedding {
                u.embedding = Some(e.clone());
            }
        }
        AgentEdit::Merge { a, b } => merge(&mut g, a, b)?,
    }
    g.rebuild_edges();
    let report = validate_graph(&g);
    if !report.is_empty() {
        return Err(EditError::Invalid(report));
    }
    Ok(g)
}

fn add(g: &mut SkillGraph, unit: &SkillUnit, parent: Option<&str>) -> Result<(), EditError> {
    if g.units.contains_key(&unit.id) {
        return Err(EditError::DuplicateId(unit.id.clone()));
    }
    if !unit.layer.is_valid() {
        return Err(EditError::InvalidLayer {
            id: unit.id.clone(),
            layer: unit.layer.0,
        });
    }
    for c in &unit.children {
        let child = g
            .units
            .get(c)
            .ok_or_else(|| EditError::UnknownUnit(c.clone()))?;
        if unit.layer.child() != Some(child.layer) {
            return Err(EditError::LayerAdjacency {
                parent: unit.id.clone(),
                child: c.clone(),
            });
        }
    }
    if let Some(p) = parent {
        let pu = g
            .units
            .get_mut(p)
            .ok_or_else(|| EditError::UnknownUnit(p.to_string()))?;
        if pu.layer.child() != Some(unit.layer) {
            return Err(EditError::LayerAdjacency {
                parent: p.to_string(),
                child: unit.id.clone(),
            });
        }
        pu.children.push(unit.id.clone());
    }
    g.units.insert(unit.id.clone(), unit.clone());
    Ok(())
}

fn delete(g: &mut SkillGraph, id: &str) -> Result<(), EditError> {
    if !g.units.contains_key(id) {
        return Err(EditError::UnknownUnit(id.to_string()));
    }
    let mut pending = vec![id.to_string()];
    while let Some(victim) = pending.pop() {
        let Some(removed) = g.units.remove(&victim) else {
            continue;
        };
        for u in g.units.values_mut() {
            u.children.retain(|c| *c != victim);
        }
        for child in removed.children {
            let has_parent = g.units.values().any(|u| u.children.contains(&child));
            if !has_parent {
                pending.push(child);
            }
        }
    }
    Ok(())
}

fn merge(g: &mut SkillGraph, a: &str, b: &str) -> Result<(), EditError> {
    if a == b {
        return Err(EditError::MergeSelf(a.to_string()));
    }
    let ua = g.units.get(a).ok_or_else(|| EditError::UnknownUnit(a.into()))?;
    let ub = g.units.get(b).ok_or_else(|| EditError::UnknownUnit(b.into()))?;
    if ua.layer != ub.layer {
        return Err(EditError::MergeAcrossLayers {
            a: a.to_string(),
            b: b.to_string(),
        });
    }
    let (keep, drop) = if a < b { (a, b) } else { (b, a) };
    let dropped = g.units.remove(drop).expect("checked above");
    let kept = g.units.get_mut(keep).expect("checked above");
    for c in dropped.children {
        if !kept.children.contains(&c) {
            kept.children.push(c);
        }
    }
    kept.tags.extend(dropped.tags);
    if !dropped.content.is_empty() {
        if !kept.content.is_empty() {
            kept.content.push_str(MERGE_SEPARATOR);
        }
        kept.content.push_str(&dropped.content);
        kept.embedding = None;
    }
    // re-point incoming edges of the dropped unit
    for u in g.units.values_mut() {
        if !u.children.iter().any(|c| c == drop) {
            continue;
        }
        let has_keep = u.children.iter().any(|c| c == keep);
        if has_keep {
            u.children.retain(|c| c != drop);
        } else {
            for c in u.children.iter_mut().filter(|c| *c == drop) {
                *c = keep.to_string();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphConfig, Layer};

    fn chain() -> SkillGraph {
        SkillGraph::from_units(
            [
                SkillUnit::new("p", Layer::POLICY, "plan").with_children(["s"]),
                SkillUnit::new("s", Layer::STRATEGY, "strategy").with_children(["c"]),
                SkillUnit::new("c", Layer::PROCEDURE, "procedure").with_children(["x"]),
                SkillUnit::new("x", Layer::PRIMITIVE, "step"),
                SkillUnit::new("q", Layer::POLICY, "other"),
            ],
            GraphConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn delete_sole_parent_prunes_chain() {
        let g = apply_edit(&chain(), &AgentEdit::Delete { id: "p".into() }).unwrap();
        assert_eq!(g.ids().collect::<Vec<_>>(), ["q"]);
    }

    #[test]
    fn delete_keeps_children_with_another_parent() {
        let g = SkillGraph::from_units(
            [
                SkillUnit::new("a", Layer::POLICY, "").with_children(["x"]),
                SkillUnit::new("b", Layer::POLICY, "").with_children(["x"]),
                SkillUnit::new("x", Layer::STRATEGY, ""),
            ],
            GraphConfig::default(),
        )
        .unwrap();
        let g = apply_edit(&g, &AgentEdit::Delete { id: "a".into() }).unwrap();
        assert_eq!(g.ids().collect::<Vec<_>>(), ["b", "x"]);
    }

    #[test]
    fn merge_unions_children_and_keeps_smaller_id() {
        let g = SkillGraph::from_units(
            [
                SkillUnit::new("r", Layer::POLICY, "").with_children(["a", "b"]),
                SkillUnit::new("a", Layer::STRATEGY, "first")
                    .with_children(["c"])
                    .with_tags(["t1"]),
                SkillUnit::new("b", Layer::STRATEGY, "second")
                    .with_children(["d"])
                    .with_tags(["t2"]),
                SkillUnit::new("c", Layer::PROCEDURE, ""),
                SkillUnit::new("d", Layer::PROCEDURE, ""),
            ],
            GraphConfig::default(),
        )
        .unwrap();
        let m = apply_edit(
            &g,
            &AgentEdit::Merge {
                a: "b".into(),
                b: "a".into(),
            },
        )
        .unwrap();
        let a = m.unit("a").unwrap();
        assert!(m.unit("b").is_none());
        assert_eq!(a.children, ["c", "d"]);
        assert_eq!(a.tags.iter().collect::<Vec<_>>(), ["t1", "t2"]);
        assert_eq!(a.content, "first\nsecond");
        assert_eq!(m.unit("r").unwrap().children, ["a"]);
    }

    #[test]
    fn merge_across_layers_rejected() {
        let err = apply_edit(
            &chain(),
            &AgentEdit::Merge {
                a: "p".into(),
                b: "s".into(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, EditError::MergeAcrossLayers { .. }));
    }

    #[test]
    fn add_under_non_adjacent_parent_rejected() {
        let err = apply_edit(
            &chain(),
            &AgentEdit::Add {
                unit: SkillUnit::new("new", Layer::PROCEDURE, ""),
                parent: Some("p".into()),
            },
        )
        .unwrap_err();
        assert_eq!(
            err,
            EditError::LayerAdjacency {
                parent: "p".into(),
                child: "new".into()
            }
        );
    }

    #[test]
    fn add_attaches_under_parent() {
        let g = apply_edit(
            &chain(),
            &AgentEdit::Add {
                unit: SkillUnit::new("s2", Layer::STRATEGY, "alt"),
                parent: Some("p".into()),
            },
        )
        .unwrap();
        assert_eq!(g.unit("p").unwrap().children, ["s", "s2"]);
        assert!(g.lateral_edges().any(|(a, b, _)| (a, b) == ("s", "s2")));
    }

    #[test]
    fn update_content_clears_stale_embedding() {
        let g = SkillGraph::from_units(
            [SkillUnit::new("a", Layer::POLICY, "old").with_embedding(vec![1.0, 0.0])],
            GraphConfig::default(),
        )
        .unwrap();
        let u = apply_edit(
            &g,
            &AgentEdit::Update {
                id: "a".into(),
                content: Some("new".into()),
                tags: None,
                embedding: None,
            },
        )
        .unwrap();
        let a = u.unit("a").unwrap();
        assert_eq!(a.content, "new");
        assert!(a.embedding.is_none());
        assert_eq!(g.unit("a").unwrap().content, "old");
    }
}
