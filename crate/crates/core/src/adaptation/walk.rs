//! Stack-based frontier walk shared by skill-graph traversal and the
//! visit-count simulator.

use std::collections::BTreeSet;

use super::RoutingAction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkBudget {
    pub max_visited: usize,
    pub max_rewrites: usize,
}

impl WalkBudget {
    pub const UNLIMITED: WalkBudget = WalkBudget {
        max_visited: usize::MAX,
        max_rewrites: usize::MAX,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkStep<N, P> {
    pub node: N,
    pub action: RoutingAction,
    /// The decomposed unit that pushed this node; `None` for roots.
    pub parent: Option<N>,
    /// Set on steps recorded as `Skip` because a budget ran out.
    pub budget_skip: bool,
    pub payload: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOutcome<N, P> {
    pub steps: Vec<WalkStep<N, P>>,
    pub budget_exhausted: bool,
}

impl<N, P> WalkOutcome<N, P> {
    pub fn visited(&self) -> usize {
        self.steps.len()
    }

    pub fn rewrites(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.action == RoutingAction::Rewrite)
            .count()
    }
}

/// Walks each root depth-first. `decide` returns the action for a node (and a
/// payload); `Decompose` pushes the node's children in reverse so they pop in
/// document order. A node decided once is never visited again. When a budget
/// runs out, everything still queued is recorded as a budget `Skip`.
pub fn frontier_walk<N, P, C, D>(
    roots: impl IntoIterator<Item = N>,
    mut children: C,
    mut decide: D,
    budget: WalkBudget,
) -> WalkOutcome<N, P>
where
    N: Clone + Ord,
    P: Default,
    C: FnMut(&N) -> Vec<N>,
    D: FnMut(&N, Option<&N>) -> (RoutingAction, P),
{
    let mut decided: BTreeSet<N> = BTreeSet::new();
    let mut steps = Vec::new();
    let mut rewrites = 0usize;
    let mut exhausted = false;

    let mut roots = roots.into_iter();
    let mut stack: Vec<(N, Option<N>)> = Vec::new();
    loop {
        let Some((node, parent)) = stack.pop().or_else(|| roots.next().map(|r| (r, None))) else {
            break;
        };
        if decided.contains(&node) {
            continue;
        }
        let out_of_budget = steps.len() >= budget.max_visited || rewrites >= budget.max_rewrites;
        if exhausted || out_of_budget {
            exhausted = true;
            decided.insert(node.clone());
            steps.push(WalkStep {
                node,
                action: RoutingAction::Skip,
                parent,
                budget_skip: true,
                payload: P::default(),
            });
            continue;
        }
        let (action, payload) = decide(&node, parent.as_ref());
        decided.insert(node.clone());
        match action {
            RoutingAction::Decompose => {
                for child in children(&node).into_iter().rev() {
                    if !decided.contains(&child) {
                        stack.push((child, Some(node.clone())));
                    }
                }
            }
            RoutingAction::Rewrite => rewrites += 1,
            RoutingAction::Accept | RoutingAction::Skip => {}
        }
        steps.push(WalkStep {
            node,
            action,
            parent,
            budget_skip: false,
            payload,
        });
    }
    WalkOutcome {
        steps,
        budget_exhausted: exhausted,
    }
}
