//! HierRank on DAG hierarchies.
//!
//! Each object is ranked separately on tree reductions of the DAG (one parent
//! kept per multi-parent node), and the per-object rankings are merged by
//! block mean. Under `Or`, a class may follow any one of its parents; under
//! `And`, it must follow all of them.
//!
//! When the number of reductions fits the budget, every reduction is tried.
//! `And` additionally considers the min-parent reparenting reduction, which is
//! always feasible, and is the only path used when the budget is exceeded.

use serde::{Deserialize, Serialize};

use super::fast::{hier_rank_fast, Arena};
use super::ScoredForest;
use crate::error::{Error, Result};
use crate::hierarchy::{ClassHierarchy, HierarchyMode, Ranking};

pub const DEFAULT_REDUCTION_BUDGET: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DagConstraint {
    And,
    Or,
}

/// Number of single-parent reductions, saturating.
fn reduction_count(h: &ClassHierarchy) -> u128 {
    (0..h.node_count())
        .map(|v| h.parents(v).len().max(1) as u128)
        .fold(1u128, |a, b| a.saturating_mul(b))
}

fn all_reductions(h: &ClassHierarchy) -> Result<Vec<ClassHierarchy>> {
    let k = h.node_count();
    let mut choice = vec![0usize; k];
    let mut out = Vec::new();
    loop {
        let parents = (0..k)
            .map(|v| h.parents(v).get(choice[v]).map(|&p| vec![p]).unwrap_or_default())
            .collect();
        out.push(ClassHierarchy::from_parents(h.names().to_vec(), parents, HierarchyMode::Tree)?);
        // Odometer over parent choices.
        let mut v = 0;
        loop {
            if v == k {
                return Ok(out);
            }
            if choice[v] + 1 < h.parents(v).len() {
                choice[v] += 1;
                break;
            }
            choice[v] = 0;
            v += 1;
        }
    }
}

/// Drops parent edges implied by another path.
fn transitive_reduce(parents: &mut [Vec<usize>]) {
    let k = parents.len();
    for v in 0..k {
        let ps = parents[v].clone();
        let keep: Vec<usize> = ps
            .iter()
            .copied()
            .filter(|&p| !ps.iter().any(|&q| q != p && is_ancestor(parents, p, q)))
            .collect();
        parents[v] = keep;
    }
}

/// True if `a` is a proper ancestor of `b`.
fn is_ancestor(parents: &[Vec<usize>], a: usize, b: usize) -> bool {
    let mut seen = vec![false; parents.len()];
    let mut stack = parents[b].clone();
    while let Some(x) = stack.pop() {
        if x == a {
            return true;
        }
        if !std::mem::replace(&mut seen[x], true) {
            stack.extend_from_slice(&parents[x]);
        }
    }
    false
}

/// Min-parent reparenting: the multi-parent node whose weakest parent has
/// the lowest score keeps only that parent, which inherits the others.
/// Ancestor relations are preserved, so any topological ordering of the
/// result places every original parent first.
fn reparent(h: &ClassHierarchy, score: &[f64]) -> Result<ClassHierarchy> {
    let k = h.node_count();
    let mut parents: Vec<Vec<usize>> = h.parent_lists().to_vec();
    transitive_reduce(&mut parents);
    for _ in 0..=k * k {
        let pick = (0..k)
            .filter(|&v| parents[v].len() > 1)
            .map(|v| {
                let u = *parents[v]
                    .iter()
                    .min_by(|&&a, &&b| score[a].total_cmp(&score[b]).then(a.cmp(&b)))
                    .expect("non-empty");
                (score[u], v, u)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((_, v, u)) = pick else {
            return ClassHierarchy::from_parents(h.names().to_vec(), parents, HierarchyMode::Tree);
        };
        let moved: Vec<usize> = parents[v].iter().copied().filter(|&p| p != u).collect();
        for p in moved {
            if !parents[u].contains(&p) {
                parents[u].push(p);
            }
        }
        parents[v] = vec![u];
        transitive_reduce(&mut parents);
    }
    Err(Error::AndInfeasible)
}

/// True if every class with parents is preceded by at least one of them.
pub fn is_topological_or(r: &Ranking, h: &ClassHierarchy, objects: usize) -> Result<bool> {
    let k = h.node_count();
    let n = objects * k;
    if r.len() != n {
        return Err(Error::SizeMismatch { expected: n, actual: r.len() });
    }
    let pos = r.positions().ok_or(Error::NotAPermutation)?;
    Ok((0..n).all(|e| {
        let base = e - e % k;
        let ps = h.parents(e % k);
        ps.is_empty() || ps.iter().any(|&p| pos[base + p] < pos[e])
    }))
}

fn all_parents_first(order: &[usize], h: &ClassHierarchy) -> bool {
    let mut pos = vec![0; order.len()];
    for (i, &c) in order.iter().enumerate() {
        pos[c] = i;
    }
    h.edges().all(|(p, c)| pos[p] < pos[c])
}

fn object_catch(order: &[usize], score: &[f64]) -> f64 {
    let n = order.len();
    order.iter().enumerate().map(|(i, &c)| (n - i) as f64 * score[c]).sum()
}

/// Class order for one object on one tree reduction.
fn rank_object(tree: &ClassHierarchy, score: &[f64]) -> Result<Vec<usize>> {
    let f = ScoredForest::new(tree, score.to_vec())?;
    Ok(hier_rank_fast(&f)?.flat().collect())
}

pub fn hier_rank_dag(forest: &ScoredForest, constraint: DagConstraint, budget: u128) -> Result<Ranking> {
    let h = forest.hierarchy();
    if h.mode() != HierarchyMode::Dag {
        return Err(Error::NotADag);
    }
    let k = forest.num_classes();
    let count = reduction_count(h);
    let enumerate = count <= budget;
    if !enumerate && constraint == DagConstraint::Or {
        return Err(Error::OrNeedsEnumeration {
            reductions: count,
            budget,
        });
    }
    let reductions = if enumerate { all_reductions(h)? } else { Vec::new() };

    let mut arena = Arena::new(forest.scores());
    let mut chains = Vec::with_capacity(forest.objects());
    for m in 0..forest.objects() {
        let score = &forest.scores()[m * k..(m + 1) * k];
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut consider = |order: Vec<usize>| {
            let value = object_catch(&order, score);
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, order));
            }
        };
        for tree in &reductions {
            let order = rank_object(tree, score)?;
            if constraint == DagConstraint::Or || all_parents_first(&order, h) {
                consider(order);
            }
        }
        if constraint == DagConstraint::And {
            consider(rank_object(&reparent(h, score)?, score)?);
        }
        let (_, order) = best.ok_or(Error::AndInfeasible)?;
        let events: Vec<usize> = order.iter().map(|&c| m * k + c).collect();
        chains.push(arena.breaking_points(&events));
    }
    let merged = arena.kway(chains);
    Ok(Ranking::from_flat(arena.flatten(&merged), k))
}
