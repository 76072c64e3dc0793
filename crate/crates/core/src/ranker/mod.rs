//! Rankings of all events that maximize the empirical CATCH
//! `Σ_i (n - i + 1) · value(π_i)` subject to ancestor-first ordering per object.
//!
//! Ties are broken the same way everywhere: larger mean first, then the longer
//! sub-chain, then the smaller head flat index.

mod chain_merge;
mod cssa;
mod dag;
mod fast;

use std::cmp::Ordering;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::hierarchy::{ClassHierarchy, Ranking};

pub use chain_merge::{chain_merge, hier_rank_tree};
pub use cssa::cssa_rank;
pub use dag::{hier_rank_dag, is_topological_or, DagConstraint, DEFAULT_REDUCTION_BUDGET};
pub use fast::{breaking_points, hier_rank_blocks, hier_rank_fast, Block, BlockChain};

/// Per-event scores over `M` copies of one hierarchy.
#[derive(Clone, Debug)]
pub struct ScoredForest<'a> {
    hierarchy: &'a ClassHierarchy,
    scores: Vec<f64>,
    objects: usize,
}

impl<'a> ScoredForest<'a> {
    /// `scores` is in flat event order, `m * K + k`.
    pub fn new(hierarchy: &'a ClassHierarchy, scores: Vec<f64>) -> Result<Self> {
        let k = hierarchy.node_count();
        if k == 0 || !scores.len().is_multiple_of(k) {
            return Err(Error::SizeMismatch {
                expected: k * (scores.len() / k.max(1)).max(1),
                actual: scores.len(),
            });
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite score {bad}")));
        }
        Ok(ScoredForest {
            hierarchy,
            objects: scores.len() / k,
            scores,
        })
    }

    pub fn from_matrix(hierarchy: &'a ClassHierarchy, scores: &Array2<f64>) -> Result<Self> {
        if scores.ncols() != hierarchy.node_count() {
            return Err(Error::SizeMismatch {
                expected: hierarchy.node_count(),
                actual: scores.ncols(),
            });
        }
        Self::new(hierarchy, scores.iter().copied().collect())
    }

    pub fn hierarchy(&self) -> &'a ClassHierarchy {
        self.hierarchy
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn num_classes(&self) -> usize {
        self.hierarchy.node_count()
    }

    pub fn n_events(&self) -> usize {
        self.scores.len()
    }

    /// Flat index of the parent event, for tree-mode hierarchies.
    pub(crate) fn parent_event(&self, flat: usize) -> Option<usize> {
        let k = self.num_classes();
        self.hierarchy
            .parents(flat % k)
            .first()
            .map(|&p| flat - flat % k + p)
    }
}

/// Priority of a sub-chain: greater is extracted first.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Key {
    pub mean: f64,
    pub len: usize,
    pub head: usize,
}

impl Key {
    pub fn new(sum: f64, len: usize, head: usize) -> Self {
        Key {
            mean: sum / len as f64,
            len,
            head,
        }
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mean
            .total_cmp(&other.mean)
            .then(self.len.cmp(&other.len))
            .then(other.head.cmp(&self.head))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

/// `Σ_i (n - i + 1) · values(π_i)` with 1-based rank `i`.
pub fn catch_empirical(r: &Ranking, values: &[f64]) -> Result<f64> {
    if r.len() != values.len() {
        return Err(Error::SizeMismatch {
            expected: values.len(),
            actual: r.len(),
        });
    }
    if !r.is_permutation() {
        return Err(Error::NotAPermutation);
    }
    let n = r.len();
    Ok(r.flat().enumerate().map(|(i, e)| (n - i) as f64 * values[e]).sum())
}

/// Unconstrained descending sort; ties keep ascending flat order.
pub fn naive_sort(forest: &ScoredForest) -> Ranking {
    naive_sort_values(forest.scores(), forest.num_classes())
}

pub fn naive_sort_values(values: &[f64], num_classes: usize) -> Ranking {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    Ranking::from_flat(idx, num_classes)
}

/// Largest event count accepted by [`brute_force_optimal`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Exhaustive search over all orderings that place every parent event before
/// its child events. Returns the first maximizer found and its CATCH.
pub fn brute_force_optimal(forest: &ScoredForest) -> Result<(Ranking, f64)> {
    let n = forest.n_events();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyEvents {
            limit: BRUTE_FORCE_LIMIT,
            actual: n,
        });
    }
    let h = forest.hierarchy();
    let k = forest.num_classes();
    let mut missing: Vec<usize> = (0..n).map(|e| h.parents(e % k).len()).collect();
    let mut state = Search {
        forest,
        order: Vec::with_capacity(n),
        best: Vec::new(),
        best_value: f64::NEG_INFINITY,
    };
    state.dfs(&mut missing, 0.0);
    Ok((Ranking::from_flat(state.best, k), state.best_value))
}

struct Search<'f, 'a> {
    forest: &'f ScoredForest<'a>,
    order: Vec<usize>,
    best: Vec<usize>,
    best_value: f64,
}

impl Search<'_, '_> {
    fn dfs(&mut self, missing: &mut [usize], value: f64) {
        let n = missing.len();
        if self.order.len() == n {
            if value > self.best_value {
                self.best_value = value;
                self.best = self.order.clone();
            }
            return;
        }
        let h = self.forest.hierarchy();
        let k = self.forest.num_classes();
        let weight = (n - self.order.len()) as f64;
        for e in 0..n {
            if missing[e] != 0 {
                continue;
            }
            missing[e] = usize::MAX;
            let base = e - e % k;
            for &c in h.children(e % k) {
                missing[base + c] -= 1;
            }
            self.order.push(e);
            self.dfs(missing, value + weight * self.forest.scores()[e]);
            self.order.pop();
            for &c in h.children(e % k) {
                missing[base + c] += 1;
            }
            missing[e] = 0;
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::hierarchy::{is_topological, HierarchyMode};
    use rand::{Rng, SeedableRng};

    pub(crate) fn abc() -> ClassHierarchy {
        ClassHierarchy::from_edges(&[("A", "B"), ("A", "C")], HierarchyMode::Tree).unwrap()
    }

    /// Random forest with `k` classes; each non-first node attaches to an
    /// earlier node with probability 0.85.
    pub(crate) fn random_forest(rng: &mut impl Rng, k: usize) -> ClassHierarchy {
        let names = (0..k).map(|i| format!("n{i}")).collect();
        let parents = (0..k)
            .map(|i| if i > 0 && rng.random_bool(0.85) { vec![rng.random_range(0..i)] } else { vec![] })
            .collect();
        ClassHierarchy::from_parents(names, parents, HierarchyMode::Tree).unwrap()
    }

    #[test]
    fn catch_direct_sum() {
        let r = Ranking::from_flat([0, 1, 2], 3);
        assert_eq!(catch_empirical(&r, &[1.0, 1.0, 0.0]).unwrap(), 5.0);
        assert_eq!(catch_empirical(&r, &[0.0; 3]).unwrap(), 0.0);
        assert!(matches!(catch_empirical(&r, &[0.0; 2]), Err(Error::SizeMismatch { .. })));
        let dup = Ranking::from_flat([0, 0, 2], 3);
        assert!(matches!(catch_empirical(&dup, &[0.0; 3]), Err(Error::NotAPermutation)));
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn descending_sort_maximizes_catch() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for n in 1..=6 {
            let v: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let sorted = catch_empirical(&naive_sort_values(&v, 1), &v).unwrap();
            let best = permutations(n)
                .into_iter()
                .map(|p| catch_empirical(&Ranking::from_flat(p, 1), &v).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((sorted - best).abs() < 1e-12);
        }
    }

    #[test]
    fn naive_sort_order_and_ties() {
        let h = ClassHierarchy::from_rows([(None, "X")], HierarchyMode::Tree).unwrap();
        let f = ScoredForest::new(&h, vec![0.2, 0.9, 0.5]).unwrap();
        assert_eq!(naive_sort(&f).flat().collect::<Vec<_>>(), vec![1, 2, 0]);
        let f = ScoredForest::new(&h, vec![0.4; 4]).unwrap();
        assert_eq!(naive_sort(&f).flat().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn brute_force_small_cases() {
        let chain = ClassHierarchy::from_edges(&[("A", "B"), ("B", "C")], HierarchyMode::Tree).unwrap();
        let f = ScoredForest::new(&chain, vec![0.1, 0.5, 0.9]).unwrap();
        let (r, v) = brute_force_optimal(&f).unwrap();
        assert_eq!(r.flat().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!((v - (0.3 + 1.0 + 0.9)).abs() < 1e-12);

        let two = ClassHierarchy::from_rows([(None, "X"), (None, "Y")], HierarchyMode::Tree).unwrap();
        let f = ScoredForest::new(&two, vec![3.0, 7.0]).unwrap();
        let (r, v) = brute_force_optimal(&f).unwrap();
        assert_eq!(r.flat().collect::<Vec<_>>(), vec![1, 0]);
        assert_eq!(v, 17.0);

        let h = abc();
        let f = ScoredForest::new(&h, vec![3.0, 3.6, 4.0]).unwrap();
        let (r, v) = brute_force_optimal(&f).unwrap();
        assert_eq!(r.flat().collect::<Vec<_>>(), vec![0, 2, 1]);
        assert!((v - 20.6).abs() < 1e-12);
        let tree = hier_rank_tree(&f).unwrap();
        assert!((catch_empirical(&tree, f.scores()).unwrap() - v).abs() < 1e-12);

        let big = ScoredForest::new(&h, vec![0.0; 12]).unwrap();
        assert!(matches!(brute_force_optimal(&big), Err(Error::TooManyEvents { .. })));
    }

    #[test]
    fn all_rankers_agree_with_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let k = rng.random_range(1..=5);
            let h = random_forest(&mut rng, k);
            let m = rng.random_range(1..=10 / k);
            let scores: Vec<f64> = (0..k * m).map(|_| rng.random()).collect();
            let f = ScoredForest::new(&h, scores).unwrap();
            let (_, best) = brute_force_optimal(&f).unwrap();
            for r in [hier_rank_tree(&f).unwrap(), hier_rank_fast(&f).unwrap(), cssa_rank(&f).unwrap()] {
                assert!(is_topological(&r, &h, m).unwrap());
                assert!((catch_empirical(&r, f.scores()).unwrap() - best).abs() < 1e-9);
            }
            let naive = naive_sort(&f);
            assert!(catch_empirical(&naive, f.scores()).unwrap() + 1e-9 >= best);
        }
    }
}
