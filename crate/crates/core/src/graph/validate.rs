use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SkillGraph;

/// One violated structural invariant, naming the offending ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidLayer { id: String, layer: u8 },
    PrimitiveWithChildren { id: String },
    DanglingChild { parent: String, child: String },
    DuplicateChild { parent: String, child: String },
    LayerSkip { parent: String, child: String, parent_layer: u8, child_layer: u8 },
    MissingHierarchicalEdge { parent: String, child: String },
    OrphanHierarchicalEdge { parent: String, child: String },
    DanglingEdge { from: String, to: String },
    LateralLayerMismatch { a: String, b: String },
    WeightOutOfRange { from: String, to: String, weight: f64 },
    Cycle { path: Vec<String> },
    EmbeddingDimension { id: String, expected: usize, found: usize },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::InvalidLayer { .. } => "invalid_layer",
            Self::PrimitiveWithChildren { .. } => "primitive_with_children",
            Self::DanglingChild { .. } => "dangling_child",
            Self::DuplicateChild { .. } => "duplicate_child",
            Self::LayerSkip { .. } => "layer_skip",
            Self::MissingHierarchicalEdge { .. } => "missing_hierarchical_edge",
            Self::OrphanHierarchicalEdge { .. } => "orphan_hierarchical_edge",
            Self::DanglingEdge { .. } => "dangling_edge",
            Self::LateralLayerMismatch { .. } => "lateral_layer_mismatch",
            Self::WeightOutOfRange { .. } => "weight_out_of_range",
            Self::Cycle { .. } => "cycle",
            Self::EmbeddingDimension { .. } => "embedding_dimension",
        }
    }

    /// Ids named by this violation.
    pub fn ids(&self) -> Vec<&str> {
        match self {
            Self::InvalidLayer { id, .. }
            | Self::PrimitiveWithChildren { id }
            | Self::EmbeddingDimension { id, .. } => vec![id],
            Self::DanglingChild { parent, child }
            | Self::DuplicateChild { parent, child }
            | Self::LayerSkip { parent, child, .. }
            | Self::MissingHierarchicalEdge { parent, child }
            | Self::OrphanHierarchicalEdge { parent, child } => vec![parent, child],
            Self::DanglingEdge { from, to } | Self::WeightOutOfRange { from, to, .. } => {
                vec![from, to]
            }
            Self::LateralLayerMismatch { a, b } => vec![a, b],
            Self::Cycle { path } => path.iter().map(String::as_str).collect(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind(), self.ids().join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind() == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks every unit and graph invariant. Violations are data: the report is
/// empty iff the graph is valid.
pub fn validate_graph(graph: &SkillGraph) -> ValidationReport {
    let mut out = Vec::new();
    let units = &graph.units;

    let mut dim: Option<usize> = None;
    for u in units.values() {
        if !u.layer.is_valid() {
            out.push(Violation::InvalidLayer {
                id: u.id.clone(),
                layer: u.layer.0,
            });
        }
        if u.layer.is_primitive() && !u.children.is_empty() {
            out.push(Violation::PrimitiveWithChildren { id: u.id.clone() });
        }
        if let Some(e) = &u.embedding {
            match dim {
                None => dim = Some(e.len()),
                Some(d) if d != e.len() => out.push(Violation::EmbeddingDimension {
                    id: u.id.clone(),
                    expected: d,
                    found: e.len(),
                }),
                _ => {}
            }
        }
        let mut seen = BTreeSet::new();
        for c in &u.children {
            if !seen.insert(c) {
                out.push(Violation::DuplicateChild {
                    parent: u.id.clone(),
                    child: c.clone(),
                });
            }
            if !units.contains_key(c) {
                out.push(Violation::DanglingChild {
                    parent: u.id.clone(),
                    child: c.clone(),
                });
            } else if !graph.hierarchical.contains_key(&(u.id.clone(), c.clone())) {
                out.push(Violation::MissingHierarchicalEdge {
                    parent: u.id.clone(),
                    child: c.clone(),
                });
            }
        }
    }

    // adjacency over the union of children pairs and hierarchical edges
    let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
    for u in units.values() {
        pairs.extend(u.children.iter().map(|c| (u.id.as_str(), c.as_str())));
    }
    for ((a, b), w) in &graph.hierarchical {
        check_weight(&mut out, a, b, *w);
        if !units.contains_key(a) || !units.contains_key(b) {
            out.push(Violation::DanglingEdge {
                from: a.clone(),
                to: b.clone(),
            });
            continue;
        }
        if !units[a].children.contains(b) {
            out.push(Violation::OrphanHierarchicalEdge {
                parent: a.clone(),
                child: b.clone(),
            });
        }
        pairs.insert((a, b));
    }
    for (p, c) in pairs {
        let (Some(pu), Some(cu)) = (units.get(p), units.get(c)) else {
            continue;
        };
        // primitives and invalid layers are already reported on their own
        if !pu.layer.is_valid() || pu.layer.is_primitive() {
            continue;
        }
        if pu.layer.child() != Some(cu.layer) {
            out.push(Violation::LayerSkip {
                parent: p.to_string(),
                child: c.to_string(),
                parent_layer: pu.layer.0,
                child_layer: cu.layer.0,
            });
        }
    }

    for ((a, b), w) in &graph.lateral {
        check_weight(&mut out, a, b, *w);
        match (units.get(a), units.get(b)) {
            (Some(x), Some(y)) if x.layer != y.layer => out.push(Violation::LateralLayerMismatch {
                a: a.clone(),
                b: b.clone(),
            }),
            (Some(_), Some(_)) => {}
            _ => out.push(Violation::DanglingEdge {
                from: a.clone(),
                to: b.clone(),
            }),
        }
    }

    out.extend(find_cycles(graph).into_iter().map(|path| Violation::Cycle { path }));
    ValidationReport { violations: out }
}

fn check_weight(out: &mut Vec<Violation>, a: &str, b: &str, w: f64) {
    if !(0.0..=1.0).contains(&w) {
        out.push(Violation::WeightOutOfRange {
            from: a.to_string(),
            to: b.to_string(),
            weight: w,
        });
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    Open,
    Done,
}

/// Cycles in the children relation, one path per back edge found by an
/// id-ordered depth-first search.
fn find_cycles(graph: &SkillGraph) -> Vec<Vec<String>> {
    let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
    let mut cycles = Vec::new();
    for root in graph.units.keys() {
        if marks.contains_key(root.as_str()) {
            continue;
        }
        // (node, next child index)
        let mut stack: Vec<(&str, usize)> = vec![(root, 0)];
        marks.insert(root, Mark::Open);
        while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
            let children = &graph.units[node].children;
            if *idx >= children.len() {
                marks.insert(node, Mark::Done);
                stack.pop();
                continue;
            }
            let child = children[*idx].as_str();
            *idx += 1;
            if !graph.units.contains_key(child) {
                continue;
            }
            match marks.get(child) {
                Some(Mark::Open) => {
                    let start = stack.iter().position(|(n, _)| *n == child).unwrap_or(0);
                    let mut path: Vec<String> =
                        stack[start..].iter().map(|(n, _)| n.to_string()).collect();
                    path.push(child.to_string());
                    cycles.push(path);
                }
                Some(Mark::Done) => {}
                None => {
                    marks.insert(child, Mark::Open);
                    stack.push((child, 0));
                }
            }
        }
    }
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphConfig, Layer, SkillUnit};

    #[test]
    fn empty_graph_is_valid() {
        assert!(validate_graph(&SkillGraph::default()).is_empty());
    }

    #[test]
    fn layer_skip_names_both_ids() {
        let g = SkillGraph::from_units(
            [
                SkillUnit::new("top", Layer::POLICY, "").with_children(["deep"]),
                SkillUnit::new("deep", Layer::PROCEDURE, ""),
            ],
            GraphConfig::default(),
        )
        .unwrap();
        let r = validate_graph(&g);
        assert_eq!(r.violations.len(), 1, "{r}");
        assert_eq!(r.violations[0].kind(), "layer_skip");
        assert_eq!(r.violations[0].ids(), ["top", "deep"]);
    }

    #[test]
    fn primitive_with_child_is_one_violation() {
        let g = SkillGraph::from_units(
            [
                SkillUnit::new("leaf", Layer::PRIMITIVE, "").with_children(["other"]),
                SkillUnit::new("other", Layer::PRIMITIVE, ""),
            ],
            GraphConfig::default(),
        )
        .unwrap();
        let r = validate_graph(&g);
        assert_eq!(r.violations.len(), 1, "{r}");
        assert_eq!(r.violations[0].kind(), "primitive_with_children");
    }

    #[test]
    fn cycle_is_reported() {
        let g = SkillGraph::from_units(
            [
                SkillUnit::new("a", Layer::POLICY, "").with_children(["b"]),
                SkillUnit::new("b", Layer::STRATEGY, "").with_children(["a"]),
            ],
            GraphConfig::default(),
        )
        .unwrap();
        let r = validate_graph(&g);
        assert!(r.has("cycle"), "{r}");
        assert!(r.has("layer_skip"), "{r}");
    }
}
