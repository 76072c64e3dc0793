//! Block-level HierRank.
//!
//! Every single-child path is split once into breaking-point blocks (successive
//! longest max-mean prefixes). Blocks never split afterwards: at a junction the
//! children's block chains are k-way merged by block mean, and the path above
//! the junction absorbs leading downstream blocks while its last block's mean
//! does not exceed theirs. Block membership is a linked list, so absorbing is
//! constant time.

use std::collections::BinaryHeap;

use super::{Key, ScoredForest};
use crate::error::Result;
use crate::hierarchy::Ranking;

const NIL: usize = usize::MAX;

/// One block of a ranked chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    /// Flat event indices in ranked order.
    pub members: Vec<usize>,
    pub mean: f64,
}

impl Block {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// A ranked sequence of blocks.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BlockChain {
    pub blocks: Vec<Block>,
}

impl BlockChain {
    pub fn flat(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().flat_map(|b| b.members.iter().copied())
    }
}

pub(crate) struct Arena<'s> {
    score: &'s [f64],
    next: Vec<usize>,
    head: Vec<usize>,
    tail: Vec<usize>,
    size: Vec<usize>,
    sum: Vec<f64>,
}

impl<'s> Arena<'s> {
    pub fn new(score: &'s [f64]) -> Self {
        Arena {
            score,
            next: vec![NIL; score.len()],
            head: Vec::new(),
            tail: Vec::new(),
            size: Vec::new(),
            sum: Vec::new(),
        }
    }

    fn block(&mut self, e: usize) -> usize {
        self.head.push(e);
        self.tail.push(e);
        self.size.push(1);
        self.sum.push(self.score[e]);
        self.head.len() - 1
    }

    fn mean(&self, b: usize) -> f64 {
        self.sum[b] / self.size[b] as f64
    }

    fn key(&self, b: usize) -> Key {
        Key::new(self.sum[b], self.size[b], self.head[b])
    }

    /// Appends block `b`'s members to block `a`.
    fn absorb(&mut self, a: usize, b: usize) {
        self.next[self.tail[a]] = self.head[b];
        self.tail[a] = self.tail[b];
        self.size[a] += self.size[b];
        self.sum[a] += self.sum[b];
    }

    /// Pushes `b` and merges backwards while the previous block's mean does
    /// not exceed the top's.
    fn push_merge(&mut self, stack: &mut Vec<usize>, b: usize) {
        stack.push(b);
        while stack.len() >= 2 {
            let top = stack[stack.len() - 1];
            let prev = stack[stack.len() - 2];
            if self.mean(prev) > self.mean(top) {
                break;
            }
            stack.pop();
            self.absorb(prev, top);
        }
    }

    pub fn breaking_points(&mut self, path: &[usize]) -> Vec<usize> {
        let mut stack = Vec::with_capacity(path.len());
        for &e in path {
            let b = self.block(e);
            self.push_merge(&mut stack, b);
        }
        stack
    }

    /// Upstream blocks followed by a downstream chain, re-agglomerated.
    fn agglomerate(&mut self, mut upstream: Vec<usize>, downstream: Vec<usize>) -> Vec<usize> {
        for b in downstream {
            self.push_merge(&mut upstream, b);
        }
        upstream
    }

    /// Merges block chains by block priority.
    pub fn kway(&self, chains: Vec<Vec<usize>>) -> Vec<usize> {
        if chains.len() == 1 {
            return chains.into_iter().next().unwrap_or_default();
        }
        let total = chains.iter().map(Vec::len).sum();
        let mut out = Vec::with_capacity(total);
        let mut heap: BinaryHeap<(Key, usize, usize)> = chains
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(i, c)| (self.key(c[0]), i, 0))
            .collect();
        while let Some((_, i, p)) = heap.pop() {
            out.push(chains[i][p]);
            if let Some(&b) = chains[i].get(p + 1) {
                heap.push((self.key(b), i, p + 1));
            }
        }
        out
    }

    pub fn members(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        let tail = self.tail[b];
        let mut cur = self.head[b];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let e = cur;
            if e == tail {
                done = true;
            } else {
                cur = self.next[e];
            }
            Some(e)
        })
    }

    pub fn to_chain(&self, blocks: &[usize]) -> BlockChain {
        BlockChain {
            blocks: blocks
                .iter()
                .map(|&b| Block {
                    members: self.members(b).collect(),
                    mean: self.mean(b),
                })
                .collect(),
        }
    }

    pub fn flatten(&self, blocks: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.score.len());
        for &b in blocks {
            out.extend(self.members(b));
        }
        out
    }
}

/// Breaking-point partition of one chain of scores: `(start, len, mean)` per block.
pub fn breaking_points(chain: &[f64]) -> Vec<(usize, usize, f64)> {
    let ids: Vec<usize> = (0..chain.len()).collect();
    let mut arena = Arena::new(chain);
    let blocks = arena.breaking_points(&ids);
    blocks
        .iter()
        .map(|&b| (arena.head[b], arena.size[b], arena.mean(b)))
        .collect()
}

/// Segment structure of the class hierarchy, shared by all objects.
struct Segments {
    /// Segment tops in an order where every top follows the tops below it.
    tops: Vec<usize>,
    /// Classes on the single-child path starting at each top.
    path: Vec<Vec<usize>>,
    /// Children of the path's last node when it has two or more.
    junction: Vec<Vec<usize>>,
}

impl Segments {
    fn new(h: &crate::hierarchy::ClassHierarchy) -> Self {
        let k = h.node_count();
        let mut s = Segments {
            tops: Vec::new(),
            path: vec![Vec::new(); k],
            junction: vec![Vec::new(); k],
        };
        for &v in h.topological_order().iter().rev() {
            let is_top = match h.parents(v).first() {
                None => true,
                Some(&p) => h.children(p).len() != 1,
            };
            if !is_top {
                continue;
            }
            let mut w = v;
            s.path[v].push(w);
            while let [only] = h.children(w) {
                w = *only;
                s.path[v].push(w);
            }
            if h.children(w).len() >= 2 {
                s.junction[v] = h.children(w).to_vec();
            }
            s.tops.push(v);
        }
        s
    }
}

fn rank_blocks<'s>(forest: &'s ScoredForest) -> Result<(Arena<'s>, Vec<usize>)> {
    let h = forest.hierarchy();
    h.require_tree()?;
    let k = forest.num_classes();
    let seg = Segments::new(h);
    let mut arena = Arena::new(forest.scores());
    let mut chains: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut roots = Vec::new();
    let mut path = Vec::new();
    for m in 0..forest.objects() {
        let base = m * k;
        for &t in &seg.tops {
            path.clear();
            path.extend(seg.path[t].iter().map(|&c| base + c));
            let up = arena.breaking_points(&path);
            let chain = if seg.junction[t].is_empty() {
                up
            } else {
                let subs = seg.junction[t].iter().map(|&c| std::mem::take(&mut chains[c])).collect();
                let down = arena.kway(subs);
                arena.agglomerate(up, down)
            };
            chains[t] = chain;
        }
        for r in h.roots() {
            roots.push(std::mem::take(&mut chains[r]));
        }
    }
    let merged = arena.kway(roots);
    Ok((arena, merged))
}

/// Fast HierRank, returning the final block structure.
pub fn hier_rank_blocks(forest: &ScoredForest) -> Result<BlockChain> {
    let (arena, blocks) = rank_blocks(forest)?;
    Ok(arena.to_chain(&blocks))
}

/// Fast HierRank.
pub fn hier_rank_fast(forest: &ScoredForest) -> Result<Ranking> {
    let (arena, blocks) = rank_blocks(forest)?;
    Ok(Ranking::from_flat(arena.flatten(&blocks), forest.num_classes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{ClassHierarchy, HierarchyMode};
    use crate::ranker::tests::random_forest;
    use crate::ranker::{catch_empirical, hier_rank_tree};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Direct successive max-mean-prefix partition, longest prefix on ties.
    fn oracle(chain: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < chain.len() {
            let mut best = (0, f64::NEG_INFINITY);
            for end in start + 1..=chain.len() {
                let mean = chain[start..end].iter().sum::<f64>() / (end - start) as f64;
                if mean >= best.1 {
                    best = (end - start, mean);
                }
            }
            out.push((start, best.0, best.1));
            start += best.0;
        }
        out
    }

    #[test]
    fn breaking_points_example() {
        assert_eq!(breaking_points(&[2.0, 6.0, 1.0, 5.0]), vec![(0, 2, 4.0), (2, 2, 3.0)]);
        assert!(breaking_points(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn breaking_points_match_oracle(chain in proptest::collection::vec(0u8..20, 1..25)) {
            let chain: Vec<f64> = chain.into_iter().map(f64::from).collect();
            let got = breaking_points(&chain);
            let want = oracle(&chain);
            prop_assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                prop_assert_eq!((g.0, g.1), (w.0, w.1));
                prop_assert!((g.2 - w.2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn block_means_and_order() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let k = rng.random_range(1..30);
            let h = random_forest(&mut rng, k);
            let m = rng.random_range(1..5);
            let f = ScoredForest::new(&h, (0..k * m).map(|_| rng.random()).collect()).unwrap();
            let chain = hier_rank_blocks(&f).unwrap();
            for b in &chain.blocks {
                let mean = b.members.iter().map(|&e| f.scores()[e]).sum::<f64>() / b.size() as f64;
                assert!((mean - b.mean).abs() < 1e-12);
            }
            for w in chain.blocks.windows(2) {
                assert!(w[0].mean + 1e-12 >= w[1].mean);
            }
            // Re-partitioning the output never splits a block.
            let flat: Vec<usize> = chain.flat().collect();
            let seq: Vec<f64> = flat.iter().map(|&e| f.scores()[e]).collect();
            let mut bounds = std::collections::HashSet::new();
            for (start, _, _) in breaking_points(&seq) {
                bounds.insert(start);
            }
            let mut pos = 0;
            for b in &chain.blocks {
                for i in pos + 1..pos + b.size() {
                    assert!(!bounds.contains(&i));
                }
                pos += b.size();
            }
        }
    }

    #[test]
    fn matches_reference_on_tie_free_forests() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k = rng.random_range(1..40);
            let h = random_forest(&mut rng, k);
            let m = rng.random_range(1..6);
            let f = ScoredForest::new(&h, (0..k * m).map(|_| rng.random()).collect()).unwrap();
            let a = hier_rank_fast(&f).unwrap();
            let b = hier_rank_tree(&f).unwrap();
            assert_eq!(a, b);
            let ca = catch_empirical(&a, f.scores()).unwrap();
            let cb = catch_empirical(&b, f.scores()).unwrap();
            assert!((ca - cb).abs() < 1e-9);
        }
    }

    #[test]
    fn worked_example_and_dag_rejection() {
        let h = ClassHierarchy::from_edges(&[("A", "B"), ("A", "C")], HierarchyMode::Tree).unwrap();
        let f = ScoredForest::new(&h, vec![3.0, 3.6, 4.0]).unwrap();
        assert_eq!(hier_rank_fast(&f).unwrap().flat().collect::<Vec<_>>(), vec![0, 2, 1]);
        let dag = ClassHierarchy::from_edges(&[("A", "B")], HierarchyMode::Dag).unwrap();
        let f = ScoredForest::new(&dag, vec![0.1, 0.2]).unwrap();
        assert!(hier_rank_fast(&f).is_err());
    }
}
