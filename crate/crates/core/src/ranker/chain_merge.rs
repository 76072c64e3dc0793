//! Chain-Merge and the reference (bottom-up) HierRank.

use std::collections::BinaryHeap;

use super::{Key, ScoredForest};
use crate::error::Result;
use crate::hierarchy::Ranking;

/// Longest prefix of `items` with maximal mean: `(length, sum)`.
fn best_prefix(items: &[usize], score: &[f64]) -> (usize, f64) {
    let mut sum = 0.0;
    let mut best = (0usize, 0.0f64);
    let mut best_mean = f64::NEG_INFINITY;
    for (i, &e) in items.iter().enumerate() {
        sum += score[e];
        let mean = sum / (i + 1) as f64;
        if mean >= best_mean {
            best_mean = mean;
            best = (i + 1, sum);
        }
    }
    best
}

/// Repeatedly moves the max-mean prefix among all chains to the output.
/// Items are ids into `score`; the head id breaks remaining ties.
pub(crate) fn merge_chains(chains: Vec<Vec<usize>>, score: &[f64]) -> Vec<usize> {
    let total = chains.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    let mut start = vec![0usize; chains.len()];
    let mut heap = BinaryHeap::with_capacity(chains.len());
    for (c, chain) in chains.iter().enumerate() {
        if !chain.is_empty() {
            let (len, sum) = best_prefix(chain, score);
            heap.push((Key::new(sum, len, chain[0]), c));
        }
    }
    while let Some((key, c)) = heap.pop() {
        let s = start[c];
        out.extend_from_slice(&chains[c][s..s + key.len]);
        start[c] += key.len;
        let rest = &chains[c][start[c]..];
        if !rest.is_empty() {
            let (len, sum) = best_prefix(rest, score);
            heap.push((Key::new(sum, len, rest[0]), c));
        }
    }
    out
}

/// Merges score chains into one, preserving each chain's internal order.
/// Returns `(chain, position)` pairs in merged order.
pub fn chain_merge(chains: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut owner = Vec::new();
    let mut score = Vec::new();
    let mut ids = Vec::with_capacity(chains.len());
    for (c, chain) in chains.iter().enumerate() {
        let mut v = Vec::with_capacity(chain.len());
        for (p, &s) in chain.iter().enumerate() {
            v.push(score.len());
            owner.push((c, p));
            score.push(s);
        }
        ids.push(v);
    }
    merge_chains(ids, &score).into_iter().map(|i| owner[i]).collect()
}

/// Bottom-up HierRank: each node's chain is the node followed by the merge of
/// its children's chains; root chains of all objects are merged last.
pub fn hier_rank_tree(forest: &ScoredForest) -> Result<Ranking> {
    let h = forest.hierarchy();
    h.require_tree()?;
    let k = forest.num_classes();
    let score = forest.scores();
    let mut roots = Vec::new();
    let mut chain: Vec<Vec<usize>> = vec![Vec::new(); k];
    for m in 0..forest.objects() {
        let base = m * k;
        for &v in h.topological_order().iter().rev() {
            let mut c = vec![base + v];
            match h.children(v) {
                [] => {}
                [only] => c.append(&mut chain[*only]),
                many => {
                    let subs = many.iter().map(|&x| std::mem::take(&mut chain[x])).collect();
                    c.extend(merge_chains(subs, score));
                }
            }
            chain[v] = c;
        }
        for r in h.roots() {
            roots.push(std::mem::take(&mut chain[r]));
        }
    }
    Ok(Ranking::from_flat(merge_chains(roots, score), k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{ClassHierarchy, HierarchyMode};
    use proptest::prelude::*;

    #[test]
    fn worked_merge_example() {
        // G -> H = (0.8, 0.1), I -> J = (0.3, 0.9).
        let out = chain_merge(&[vec![0.8, 0.1], vec![0.3, 0.9]]);
        assert_eq!(out, vec![(0, 0), (1, 0), (1, 1), (0, 1)]);
    }

    #[test]
    fn trivial_merges() {
        assert_eq!(chain_merge(&[vec![1.0, 5.0, 2.0]]), vec![(0, 0), (0, 1), (0, 2)]);
        assert_eq!(chain_merge(&[vec![5.0], vec![7.0]]), vec![(1, 0), (0, 0)]);
        assert!(chain_merge(&[]).is_empty());
    }

    #[test]
    fn worked_tree_example() {
        let h = ClassHierarchy::from_edges(&[("A", "B"), ("A", "C")], HierarchyMode::Tree).unwrap();
        let f = ScoredForest::new(&h, vec![3.0, 3.6, 4.0]).unwrap();
        let r = hier_rank_tree(&f).unwrap();
        let names: Vec<&str> = r.order.iter().map(|e| h.name(e.class)).collect();
        assert_eq!(names, vec!["A", "C", "B"]);
    }

    #[test]
    fn increasing_chain_keeps_order() {
        let h = ClassHierarchy::from_edges(&[("A", "B"), ("B", "C")], HierarchyMode::Tree).unwrap();
        let f = ScoredForest::new(&h, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(hier_rank_tree(&f).unwrap().flat().collect::<Vec<_>>(), vec![0, 1, 2]);
        let dag = ClassHierarchy::from_edges(&[("A", "B")], HierarchyMode::Dag).unwrap();
        let f = ScoredForest::new(&dag, vec![0.1, 0.2]).unwrap();
        assert!(hier_rank_tree(&f).is_err());
    }

    proptest! {
        #[test]
        fn merge_preserves_chain_order(chains in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 1..6), 1..5)) {
            let out = chain_merge(&chains);
            prop_assert_eq!(out.len(), chains.iter().map(Vec::len).sum::<usize>());
            for c in 0..chains.len() {
                let pos: Vec<usize> = out.iter().filter(|(x, _)| *x == c).map(|&(_, p)| p).collect();
                prop_assert_eq!(pos, (0..chains[c].len()).collect::<Vec<_>>());
            }
        }
    }
}
