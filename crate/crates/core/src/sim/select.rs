//! Cardinality-constrained coverage selection: exhaustive optimum and greedy.

use std::collections::BTreeSet;

use super::coverage::tag_coverage;
use super::SimError;

/// Largest candidate pool `brute_force_select` enumerates.
pub const ENUMERATION_BOUND: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub id: String,
    pub tags: BTreeSet<String>,
}

impl Candidate {
    pub fn new<I, S>(id: impl Into<String>, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            tags: tags.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Picked ids: ascending for the optimum, in pick order for greedy.
    pub ids: Vec<String>,
    pub value: f64,
}

fn value_of(required: &BTreeSet<String>, picked: &[&Candidate]) -> f64 {
    tag_coverage(required, picked.iter().flat_map(|c| c.tags.iter()))
}

fn sorted(candidates: &[Candidate]) -> Vec<&Candidate> {
    let mut v: Vec<&Candidate> = candidates.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

/// Coverage-maximal subset of size at most `k`. Among optimal subsets the
/// lexicographically smallest ascending id sequence wins.
pub fn brute_force_select(
    required: &BTreeSet<String>,
    candidates: &[Candidate],
    k: usize,
) -> Result<Selection, SimError> {
    if candidates.len() > ENUMERATION_BOUND {
        return Err(SimError::TooManyCandidates {
            n: candidates.len(),
            max: ENUMERATION_BOUND,
        });
    }
    let pool = sorted(candidates);
    let mut best = Selection {
        ids: Vec::new(),
        value: 0.0,
    };
    for bits in 1u32..(1 << pool.len()) {
        if bits.count_ones() as usize > k {
            continue;
        }
        let picked: Vec<&Candidate> = (0..pool.len()).filter(|i| bits >> i & 1 == 1).map(|i| pool[i]).collect();
        let value = value_of(required, &picked);
        let ids: Vec<String> = picked.iter().map(|c| c.id.clone()).collect();
        if value > best.value || (value == best.value && ids < best.ids) {
            best = Selection { ids, value };
        }
    }
    Ok(best)
}

/// Greedy by estimated marginal gain; ties go to the smaller id. Stops after
/// `k` picks or when no estimate is positive. `estimate(picked, candidate)`
/// receives indices into `candidates`. The returned value is the true coverage.
pub fn greedy_select<E>(required: &BTreeSet<String>, candidates: &[Candidate], k: usize, mut estimate: E) -> Selection
where
    E: FnMut(&[usize], usize) -> f64,
{
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].id.cmp(&candidates[b].id));
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for &i in order.iter().filter(|i| !picked.contains(i)) {
            let g = estimate(&picked, i);
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((i, g));
            }
        }
        match best {
            Some((i, g)) if g > 0.0 => picked.push(i),
            _ => break,
        }
    }
    let chosen: Vec<&Candidate> = picked.iter().map(|&i| &candidates[i]).collect();
    Selection {
        ids: chosen.iter().map(|c| c.id.clone()).collect(),
        value: value_of(required, &chosen),
    }
}

/// Exact marginal coverage gain of `candidates[i]` given `picked`.
pub fn exact_gain(required: &BTreeSet<String>, candidates: &[Candidate], picked: &[usize], i: usize) -> f64 {
    let base: Vec<&Candidate> = picked.iter().map(|&p| &candidates[p]).collect();
    let mut with = base.clone();
    with.push(&candidates[i]);
    value_of(required, &with) - value_of(required, &base)
}
