//! Two-state sum-product on a tree/forest in log space.
//!
//! Each node carries a unary log-potential `node_log[v] = [ln ψ_v(0), ln ψ_v(1)]`
//! and a table `prior_log[v]`. For a root the table is a unary prior over `Y_v`;
//! for a non-root it is `ln P(Y_v = y | Y_pa = 1)`, while `Y_pa = 0` forces
//! `Y_v = 0` with weight one.

use crate::hierarchy::ClassHierarchy;

pub(crate) fn logsumexp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub(crate) fn ln_clamped(x: f64, floor: f64) -> f64 {
    x.max(floor).ln()
}

/// Probability of state 1 from a pair of unnormalized log weights.
pub(crate) fn softmax1(w: [f64; 2]) -> f64 {
    let m = w[0].max(w[1]);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    let a = (w[0] - m).exp();
    let b = (w[1] - m).exp();
    (b / (a + b)).clamp(0.0, 1.0)
}

#[derive(Clone, Debug)]
pub struct TreeInference<'a> {
    h: &'a ClassHierarchy,
    prior_log: Vec<[f64; 2]>,
}

#[derive(Default)]
struct Scratch {
    up: Vec<[f64; 2]>,
    msg: Vec<[f64; 2]>,
    down: Vec<[f64; 2]>,
    prefix: Vec<[f64; 2]>,
}

impl<'a> TreeInference<'a> {
    /// `h` must be tree-mode; callers check this.
    pub fn new(h: &'a ClassHierarchy, prior_log: Vec<[f64; 2]>) -> Self {
        debug_assert!(h.is_tree());
        debug_assert_eq!(prior_log.len(), h.node_count());
        TreeInference { h, prior_log }
    }

    /// Edge term `ln P(Y_v = y | Y_pa = yp)`.
    fn edge(&self, v: usize, yp: usize, y: usize) -> f64 {
        if yp == 1 {
            self.prior_log[v][y]
        } else if y == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Writes `P(Y_v = 1 | potentials)` for each node into `out`.
    pub fn marginals(&self, node_log: &[[f64; 2]], out: &mut [f64]) {
        let mut s = Scratch::default();
        self.marginals_with(node_log, out, &mut s);
    }

    fn marginals_with(&self, node_log: &[[f64; 2]], out: &mut [f64], s: &mut Scratch) {
        let h = self.h;
        let k = h.node_count();
        s.up.clear();
        s.up.resize(k, [0.0; 2]);
        s.msg.clear();
        s.msg.resize(k, [0.0; 2]);
        s.down.clear();
        s.down.resize(k, [0.0; 2]);

        // Upward: up[v] = local terms of v plus messages from its children.
        for &v in h.topological_order().iter().rev() {
            let mut b = node_log[v];
            if h.parents(v).is_empty() {
                b[0] += self.prior_log[v][0];
                b[1] += self.prior_log[v][1];
            }
            for &c in h.children(v) {
                b[0] += s.msg[c][0];
                b[1] += s.msg[c][1];
            }
            s.up[v] = b;
            if !h.parents(v).is_empty() {
                for yp in 0..2 {
                    s.msg[v][yp] = logsumexp2(self.edge(v, yp, 0) + b[0], self.edge(v, yp, 1) + b[1]);
                }
            }
        }

        // Downward: the message into child c excludes c's own upward message,
        // built from prefix/suffix sums over siblings.
        for &v in h.topological_order() {
            let ch = h.children(v);
            if ch.is_empty() {
                continue;
            }
            let mut base = node_log[v];
            if h.parents(v).is_empty() {
                base[0] += self.prior_log[v][0];
                base[1] += self.prior_log[v][1];
            }
            base[0] += s.down[v][0];
            base[1] += s.down[v][1];
            s.prefix.clear();
            let mut acc = [0.0f64; 2];
            for &c in ch {
                s.prefix.push(acc);
                acc[0] += s.msg[c][0];
                acc[1] += s.msg[c][1];
            }
            let mut suffix = [0.0f64; 2];
            for (j, &c) in ch.iter().enumerate().rev() {
                let outside = [
                    base[0] + s.prefix[j][0] + suffix[0],
                    base[1] + s.prefix[j][1] + suffix[1],
                ];
                for y in 0..2 {
                    s.down[c][y] = logsumexp2(outside[0] + self.edge(c, 0, y), outside[1] + self.edge(c, 1, y));
                }
                suffix[0] += s.msg[c][0];
                suffix[1] += s.msg[c][1];
            }
        }

        for v in 0..k {
            out[v] = softmax1([s.up[v][0] + s.down[v][0], s.up[v][1] + s.down[v][1]]);
        }
    }

    /// Runs inference for every row of a row-major `M × K` potential buffer.
    pub fn marginals_rows(&self, node_log: &[[f64; 2]], out: &mut [f64]) {
        use rayon::prelude::*;
        let k = self.h.node_count();
        if k == 0 {
            return;
        }
        out.par_chunks_mut(k)
            .zip(node_log.par_chunks(k))
            .for_each_init(Scratch::default, |s, (o, p)| self.marginals_with(p, o, s));
    }
}
