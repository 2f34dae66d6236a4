//! Normalized tag coverage, the utility used by every synthetic oracle.

use std::collections::BTreeSet;

use super::SyntheticTask;
use crate::adaptation::SkillContext;
use crate::graph::SkillGraph;
use crate::text::substitute_tags;

/// `|covered ∩ required| / |required|`.
pub fn tag_coverage<'a>(required: &BTreeSet<String>, covered: impl IntoIterator<Item = &'a String>) -> f64 {
    if required.is_empty() {
        return 0.0;
    }
    let hit: BTreeSet<&String> = covered.into_iter().filter(|t| required.contains(*t)).collect();
    hit.len() as f64 / required.len() as f64
}

/// `F_Q(R)` over the original tags of the retained units. Unknown ids
/// contribute nothing.
pub fn coverage_utility<'a>(
    task: &SyntheticTask,
    retained: impl IntoIterator<Item = &'a str>,
    graph: &SkillGraph,
) -> f64 {
    let tags: Vec<&String> = retained
        .into_iter()
        .filter_map(|id| graph.unit(id))
        .flat_map(|u| u.tags.iter())
        .collect();
    tag_coverage(&task.required, tags)
}

/// Tags a unit carries after the task's substitutions are applied.
pub fn rewritten_tags(task: &SyntheticTask, graph: &SkillGraph, id: &str) -> BTreeSet<String> {
    graph
        .unit(id)
        .map(|u| substitute_tags(&u.tags, &task.query.substitutions))
        .unwrap_or_default()
}

/// Coverage of `retained`, with the units in `rewritten` carrying their
/// substituted tags.
pub fn coverage_with_rewrites(
    task: &SyntheticTask,
    retained: &BTreeSet<String>,
    rewritten: &BTreeSet<String>,
    graph: &SkillGraph,
) -> f64 {
    let mut tags = BTreeSet::new();
    for id in retained {
        if rewritten.contains(id) {
            tags.extend(rewritten_tags(task, graph, id));
        } else if let Some(u) = graph.unit(id) {
            tags.extend(u.tags.iter().cloned());
        }
    }
    tag_coverage(&task.required, &tags)
}

/// Coverage achieved by a composed context.
pub fn context_coverage(task: &SyntheticTask, context: &SkillContext, graph: &SkillGraph) -> f64 {
    let retained: BTreeSet<String> = context.ids().map(str::to_string).collect();
    let rewritten: BTreeSet<String> = context
        .entries
        .iter()
        .filter(|e| e.rewritten)
        .map(|e| e.id.clone())
        .collect();
    coverage_with_rewrites(task, &retained, &rewritten, graph)
}

/// `Δ^rw(u) = max(0, F({u'}) - F({u}))`.
pub fn rewrite_gain(task: &SyntheticTask, graph: &SkillGraph, id: &str) -> f64 {
    let before = coverage_utility(task, [id], graph);
    let after = tag_coverage(&task.required, &rewritten_tags(task, graph, id));
    (after - before).max(0.0)
}

/// `Û(R, B) = F(R) + Σ_{u ∈ B} Δ^rw(u)`.
pub fn surrogate_utility(
    task: &SyntheticTask,
    retained: &BTreeSet<String>,
    rewritten: &BTreeSet<String>,
    graph: &SkillGraph,
) -> f64 {
    coverage_utility(task, retained.iter().map(String::as_str), graph)
        + rewritten.iter().map(|id| rewrite_gain(task, graph, id)).sum::<f64>()
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

    fn abcd() -> SkillGraph {
        SkillGraph::from_units(
            [
                SkillUnit::new("u1", Layer::PRIMITIVE, "").with_tags(["a", "b"]),
                SkillUnit::new("u2", Layer::PRIMITIVE, "").with_tags(["b", "c"]),
                SkillUnit::new("u3", Layer::PRIMITIVE, "").with_tags(["d"]),
                SkillUnit::new("u4", Layer::PRIMITIVE, "").with_tags(["junk"]),
            ],
            GraphConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn submodularity_witness() {
        let t = task(&["a", "b", "c", "d"], vec![]);
        let g = abcd();
        assert_eq!(coverage_utility(&t, [], &g), 0.0);
        assert_eq!(coverage_utility(&t, ["u1"], &g), 0.5);
        assert_eq!(coverage_utility(&t, ["u1", "u2"], &g), 0.75);
        let marginal = coverage_utility(&t, ["u1", "u2"], &g) - coverage_utility(&t, ["u1"], &g);
        assert_eq!(marginal, 0.25);
        assert!(marginal < coverage_utility(&t, ["u2"], &g));
        assert_eq!(coverage_utility(&t, ["u1", "u2", "u3"], &g), 1.0);
    }

    #[test]
    fn rewrite_gain_cases() {
        let g = abcd();
        assert_eq!(rewrite_gain(&task(&["a", "b", "c", "d"], vec![]), &g, "u4"), 0.0);
        let t = task(&["a", "b", "c", "d"], vec![Substitution::new("junk", "c")]);
        assert_eq!(rewrite_gain(&t, &g, "u4"), 0.25);
    }
}
