//! Estimation of per-event posteriors (mLPR) from scores.
//!
//! Variants:
//! - `indpt`: each class on its own, `mLPR = LPR`.
//! - `nbh`: local posterior over the class, its parent and its children.
//! - `full`: sum-product over the whole tree with LPR-based potentials.
//! - `gaussian`: same tree inference with moment-matched Gaussian class densities.

pub mod inference;
pub mod kde;
pub mod lpr;
pub mod tables;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{EventTable, GenerativeModel, ScoreDistribution};
use crate::hierarchy::ClassHierarchy;
use inference::{ln_clamped, softmax1, TreeInference};

pub use kde::{default_bandwidth, GaussianKde, Kernel};
pub use lpr::{default_clip_floor, fit_lpr, lpr_value, ClassLpr, LprModel, LprOptions, DENSITY_FLOOR};
pub use tables::{fit_prob_tables, ProbTables};

/// Largest local neighborhood enumerated by the `nbh` variant.
pub const NBH_LIMIT: usize = 20;
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlprVariant {
    Indpt,
    Nbh,
    Full,
    Gaussian,
    Exact,
}

impl MlprVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            MlprVariant::Indpt => "indpt",
            MlprVariant::Nbh => "nbh",
            MlprVariant::Full => "full",
            MlprVariant::Gaussian => "gaussian",
            MlprVariant::Exact => "exact",
        }
    }
}

impl std::fmt::Display for MlprVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MlprVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "indpt" => Ok(MlprVariant::Indpt),
            "nbh" => Ok(MlprVariant::Nbh),
            "full" => Ok(MlprVariant::Full),
            "gaussian" => Ok(MlprVariant::Gaussian),
            "exact" => Ok(MlprVariant::Exact),
            other => Err(Error::Parse(format!("unknown mLPR variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlprEstimate {
    pub values: Array2<f64>,
    pub variant: MlprVariant,
}

impl MlprEstimate {
    /// Values in flat event order.
    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }
}

fn check_cols(k: usize, scores: &Array2<f64>) -> Result<()> {
    if scores.ncols() == k {
        Ok(())
    } else {
        Err(Error::SizeMismatch {
            expected: k,
            actual: scores.ncols(),
        })
    }
}

fn check_tables(lpr: &LprModel, tables: &ProbTables, h: &ClassHierarchy) -> Result<()> {
    let k = h.node_count();
    for len in [lpr.num_classes(), tables.num_classes()] {
        if len != k {
            return Err(Error::SizeMismatch { expected: k, actual: len });
        }
    }
    Ok(())
}

/// `[ln(1 - LPR), ln LPR]` with both terms floored.
fn lpr_terms(l: f64) -> [f64; 2] {
    [ln_clamped(1.0 - l, DENSITY_FLOOR), ln_clamped(l, DENSITY_FLOOR)]
}

pub fn mlpr_indpt(lpr: &LprModel, scores: &Array2<f64>) -> Result<MlprEstimate> {
    Ok(MlprEstimate {
        values: lpr.values(scores)?,
        variant: MlprVariant::Indpt,
    })
}

/// Local nodes (`k` first, then its parent, then its children) and the label
/// configurations over them that respect the hierarchy, as bit masks.
pub fn nbh_configurations(h: &ClassHierarchy, k: usize) -> Result<(Vec<usize>, Vec<u32>)> {
    h.require_tree()?;
    let mut nodes = vec![k];
    nodes.extend_from_slice(h.parents(k));
    let first_child = nodes.len();
    nodes.extend_from_slice(h.children(k));
    if nodes.len() > NBH_LIMIT {
        return Err(Error::NeighborhoodTooLarge {
            class: h.name(k).to_string(),
            size: nodes.len(),
            limit: NBH_LIMIT,
        });
    }
    let has_parent = first_child == 2;
    let child_bits: u32 = ((1u32 << nodes.len()) - 1) & !((1u32 << first_child) - 1);
    let masks = (0u32..(1 << nodes.len()))
        .filter(|&m| {
            let yk = m & 1 == 1;
            let yp = !has_parent || (m >> 1) & 1 == 1;
            (!yk || yp) && (yk || m & child_bits == 0)
        })
        .collect();
    Ok((nodes, masks))
}

pub fn mlpr_nbh(lpr: &LprModel, tables: &ProbTables, h: &ClassHierarchy, scores: &Array2<f64>) -> Result<MlprEstimate> {
    h.require_tree()?;
    check_tables(lpr, tables, h)?;
    let k = h.node_count();
    check_cols(k, scores)?;
    let configs = (0..k).map(|v| nbh_configurations(h, v)).collect::<Result<Vec<_>>>()?;
    let lv = lpr.values(scores)?;
    let mut out = Array2::<f64>::zeros(scores.dim());
    if k == 0 {
        return Ok(MlprEstimate { values: out, variant: MlprVariant::Nbh });
    }
    let lv = lv.as_slice().expect("standard layout");
    out.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(k)
        .zip(lv.par_chunks(k))
        .for_each(|(row, l)| {
            let terms: Vec<[f64; 2]> = l.iter().map(|&x| lpr_terms(x)).collect();
            for v in 0..k {
                let (nodes, masks) = &configs[v];
                let has_parent = !h.parents(v).is_empty();
                let first_child = if has_parent { 2 } else { 1 };
                let mut acc = [f64::NEG_INFINITY; 2];
                for &m in masks {
                    let bit = |i: usize| (m >> i) & 1 == 1;
                    let yk = bit(0);
                    let mut w = terms[v][yk as usize];
                    if has_parent {
                        let yp = bit(1);
                        w += terms[nodes[1]][yp as usize] + tables.log_ratio(v, yk, yp);
                    }
                    for (i, &c) in nodes.iter().enumerate().skip(first_child) {
                        let yc = bit(i);
                        w += terms[c][yc as usize] + tables.log_ratio(c, yc, yk);
                    }
                    let slot = &mut acc[yk as usize];
                    *slot = inference::logsumexp2(*slot, w);
                }
                row[v] = softmax1(acc);
            }
        });
    Ok(MlprEstimate {
        values: out,
        variant: MlprVariant::Nbh,
    })
}

/// Node potentials and edge tables for the LPR-based factorization.
fn full_potentials(lv: &Array2<f64>, tables: &ProbTables, h: &ClassHierarchy) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let k = h.node_count();
    let prior: Vec<[f64; 2]> = (0..k)
        .map(|v| {
            if h.parents(v).is_empty() {
                [0.0, 0.0]
            } else {
                let t = tables.conditional[v];
                [(1.0 - t).ln(), t.ln()]
            }
        })
        .collect();
    let node: Vec<[f64; 2]> = lv
        .indexed_iter()
        .map(|((_, v), &l)| {
            let mut t = lpr_terms(l);
            if !h.parents(v).is_empty() {
                t[0] -= (1.0 - tables.prior[v]).max(tables.clip_floor).ln();
                t[1] -= tables.prior[v].max(tables.clip_floor).ln();
            }
            t
        })
        .collect();
    (prior, node)
}

pub fn mlpr_full(lpr: &LprModel, tables: &ProbTables, h: &ClassHierarchy, scores: &Array2<f64>) -> Result<MlprEstimate> {
    h.require_tree()?;
    check_tables(lpr, tables, h)?;
    check_cols(h.node_count(), scores)?;
    let lv = lpr.values(scores)?;
    Ok(MlprEstimate {
        values: full_from_lpr(&lv, tables, h),
        variant: MlprVariant::Full,
    })
}

/// Tree posterior from precomputed LPR values (tree mode assumed).
pub(crate) fn full_from_lpr(lv: &Array2<f64>, tables: &ProbTables, h: &ClassHierarchy) -> Array2<f64> {
    let (prior, node) = full_potentials(lv, tables, h);
    let mut out = Array2::<f64>::zeros(lv.dim());
    TreeInference::new(h, prior).marginals_rows(&node, out.as_slice_mut().expect("standard layout"));
    out
}

/// Moment-matched Gaussian class-conditional densities plus probability tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub null: Vec<ScoreDistribution>,
    pub alt: Vec<ScoreDistribution>,
    pub tables: ProbTables,
}

fn moments(xs: &[f64]) -> ScoreDistribution {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    ScoreDistribution::Gaussian {
        mean,
        sd: var.max(VARIANCE_FLOOR).sqrt(),
    }
}

pub fn fit_gaussian(train: &EventTable, h: &ClassHierarchy) -> Result<GaussianModel> {
    let k = h.node_count();
    check_cols(k, &train.scores)?;
    let labels = train.labels()?;
    let mut null = Vec::with_capacity(k);
    let mut alt = Vec::with_capacity(k);
    for v in 0..k {
        let (mut neg, mut pos) = (Vec::new(), Vec::new());
        for (&s, &y) in train.scores.column(v).iter().zip(labels.column(v)) {
            if y == 1 { pos.push(s) } else { neg.push(s) }
        }
        if neg.len() < 2 || pos.len() < 2 {
            return Err(Error::TooFewSamples {
                class: h.name(v).to_string(),
                needed: 2,
            });
        }
        null.push(moments(&neg));
        alt.push(moments(&pos));
    }
    let tables = fit_prob_tables(train, h, default_clip_floor(train.objects()))?;
    Ok(GaussianModel { null, alt, tables })
}

impl GaussianModel {
    pub fn mlpr(&self, h: &ClassHierarchy, scores: &Array2<f64>) -> Result<MlprEstimate> {
        h.require_tree()?;
        let k = h.node_count();
        check_cols(k, scores)?;
        if self.null.len() != k || self.tables.num_classes() != k {
            return Err(Error::SizeMismatch {
                expected: k,
                actual: self.null.len(),
            });
        }
        let prior: Vec<[f64; 2]> = (0..k)
            .map(|v| {
                let p = if h.parents(v).is_empty() { self.tables.prior[v] } else { self.tables.conditional[v] };
                [(1.0 - p).ln(), p.ln()]
            })
            .collect();
        let node: Vec<[f64; 2]> = scores
            .indexed_iter()
            .map(|((_, v), &s)| [self.null[v].ln_pdf(s), self.alt[v].ln_pdf(s)])
            .collect();
        let mut out = Array2::<f64>::zeros(scores.dim());
        TreeInference::new(h, prior).marginals_rows(&node, out.as_slice_mut().expect("standard layout"));
        Ok(MlprEstimate {
            values: out,
            variant: MlprVariant::Gaussian,
        })
    }
}

pub fn mlpr_gaussian(train: &EventTable, h: &ClassHierarchy, scores: &Array2<f64>) -> Result<MlprEstimate> {
    fit_gaussian(train, h)?.mlpr(h, scores)
}

/// Exact posterior under a known generative model.
pub fn mlpr_exact(model: &GenerativeModel, scores: &Array2<f64>) -> Result<MlprEstimate> {
    Ok(MlprEstimate {
        values: crate::generator::exact_mlpr(model, scores)?,
        variant: MlprVariant::Exact,
    })
}
