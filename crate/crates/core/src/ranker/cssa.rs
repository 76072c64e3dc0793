//! Supernode condensation ranking.
//!
//! Every event starts as its own supernode. The supernode with the largest
//! mean is taken: if its top event has no parent, or the parent was already
//! output, it is appended to the ranking; otherwise it is condensed into the
//! parent's supernode, whose order becomes the parent's order followed by its own.

use std::collections::BinaryHeap;

use super::{Key, ScoredForest};
use crate::error::Result;
use crate::hierarchy::Ranking;

const NIL: usize = usize::MAX;

fn find(uf: &mut [usize], mut x: usize) -> usize {
    while uf[x] != x {
        uf[x] = uf[uf[x]];
        x = uf[x];
    }
    x
}

pub fn cssa_rank(forest: &ScoredForest) -> Result<Ranking> {
    forest.hierarchy().require_tree()?;
    let n = forest.n_events();
    let score = forest.scores();
    let mut uf: Vec<usize> = (0..n).collect();
    let mut next = vec![NIL; n];
    let mut tail: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut sum = score.to_vec();
    let mut version = vec![0u32; n];
    let mut taken = vec![false; n];
    let mut heap: BinaryHeap<(Key, usize, u32)> = (0..n).map(|e| (Key::new(score[e], 1, e), e, 0)).collect();
    let mut out = Vec::with_capacity(n);

    while let Some((_, s, ver)) = heap.pop() {
        if uf[s] != s || version[s] != ver {
            continue;
        }
        // The representative is always the supernode's top (head) event.
        match forest.parent_event(s).filter(|&p| !taken[p]) {
            None => {
                let mut e = s;
                while e != NIL {
                    out.push(e);
                    taken[e] = true;
                    e = next[e];
                }
            }
            Some(p) => {
                let t = find(&mut uf, p);
                next[tail[t]] = s;
                tail[t] = tail[s];
                size[t] += size[s];
                sum[t] += sum[s];
                uf[s] = t;
                version[t] += 1;
                heap.push((Key::new(sum[t], size[t], t), t, version[t]));
            }
        }
    }
    Ok(Ranking::from_flat(out, forest.num_classes()))
}
