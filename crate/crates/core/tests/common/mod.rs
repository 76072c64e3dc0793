//! Test-side oracles, written independently of the library algorithms.
#![allow(dead_code)]

use hmcrank::hierarchy::{ClassHierarchy, HierarchyMode};
use rand::Rng;

/// Forest with `k` classes; each later node hangs off a uniformly chosen
/// earlier node with probability 0.85.
pub fn random_tree(rng: &mut impl Rng, k: usize) -> ClassHierarchy {
    let names = (0..k).map(|i| format!("n{i}")).collect();
    let parents = (0..k)
        .map(|i| {
            if i > 0 && rng.random_bool(0.85) {
                vec![rng.random_range(0..i)]
            } else {
                vec![]
            }
        })
        .collect();
    ClassHierarchy::from_parents(names, parents, HierarchyMode::Tree).unwrap()
}

/// Parents of a flat event within its own object.
pub fn event_parents(h: &ClassHierarchy, e: usize) -> impl Iterator<Item = usize> + '_ {
    let k = h.node_count();
    let base = e / k * k;
    h.parents(e % k).iter().map(move |&p| base + p)
}

/// Best achievable `sum (n - i) * v` over all hierarchy-respecting orders, by
/// dynamic programming over placed sets. Needs `v.len() <= 20`.
pub fn optimal_catch(h: &ClassHierarchy, v: &[f64]) -> f64 {
    let n = v.len();
    assert!(n <= 20);
    let mut pmask = vec![0u32; n];
    for (e, m) in pmask.iter_mut().enumerate() {
        for p in event_parents(h, e) {
            *m |= 1 << p;
        }
    }
    let full = (1u32 << n) - 1;
    let mut best = vec![f64::NEG_INFINITY; 1 << n];
    best[full as usize] = 0.0;
    for mask in (0..full).rev() {
        let pos = mask.count_ones() as usize;
        let mut b = f64::NEG_INFINITY;
        for e in 0..n {
            if mask & (1 << e) == 0 && pmask[e] & !mask == 0 {
                let next = best[(mask | (1 << e)) as usize];
                if next > f64::NEG_INFINITY {
                    b = b.max((n - pos) as f64 * v[e] + next);
                }
            }
        }
        best[mask as usize] = b;
    }
    best[0]
}

/// `sum (n - i) * v[order[i]]`.
pub fn catch_of(order: &[usize], v: &[f64]) -> f64 {
    let n = order.len();
    order.iter().enumerate().map(|(i, &e)| (n - i) as f64 * v[e]).sum()
}

/// Every prefix of `order` is closed under taking parents.
pub fn prefixes_closed(h: &ClassHierarchy, order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    for &e in order {
        if e >= seen.len() || seen[e] || !event_parents(h, e).all(|p| seen[p]) {
            return false;
        }
        seen[e] = true;
    }
    true
}

/// A positive decision for a class implies positive decisions for its parents.
pub fn decisions_closed(h: &ClassHierarchy, d: &[bool]) -> bool {
    (0..d.len()).all(|e| !d[e] || event_parents(h, e).all(|p| d[p]))
}

/// Posterior marginals `P(Y_v = 1 | s)` by enumerating all `2^K` label
/// vectors of one object.
///
/// Roots contribute the LPR odds directly; a non-root contributes its
/// parent-conditional probability times the LPR likelihood ratio
/// `LPR / tau` (or `(1 - LPR) / (1 - tau)`), and is forced off when its parent is off.
pub fn enumerate_posterior(
    h: &ClassHierarchy,
    lpr: &[f64],
    tau: &[f64],
    theta: &[f64],
    clip: f64,
) -> Vec<f64> {
    let k = h.node_count();
    assert!(k <= 16);
    let mut num = vec![0.0; k];
    let mut z = 0.0;
    'configs: for y in 0u32..(1 << k) {
        let on = |v: usize| y & (1 << v) != 0;
        let mut w = 1.0;
        for v in 0..k {
            let l = lpr[v].clamp(1e-12, 1.0 - 1e-12);
            match h.parents(v).first() {
                None => w *= if on(v) { l } else { 1.0 - l },
                Some(&p) => {
                    if on(v) && !on(p) {
                        continue 'configs;
                    }
                    let prior = match (on(p), on(v)) {
                        (true, true) => theta[v],
                        (true, false) => 1.0 - theta[v],
                        _ => 1.0,
                    };
                    let like = if on(v) { l / tau[v].max(clip) } else { (1.0 - l) / (1.0 - tau[v]).max(clip) };
                    w *= prior * like;
                }
            }
        }
        z += w;
        for (v, x) in num.iter_mut().enumerate() {
            if on(v) {
                *x += w;
            }
        }
    }
    num.iter().map(|x| x / z).collect()
}
