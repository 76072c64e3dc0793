//! Empirical class prevalences and parent-conditional activation rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::EventTable;
use crate::hierarchy::ClassHierarchy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbTables {
    /// `P̂(Y_k = 1)`.
    pub prior: Vec<f64>,
    /// `P̂(Y_k = 1 | all parents = 1)`; equals `prior` for roots.
    pub conditional: Vec<f64>,
    pub clip_floor: f64,
}

pub fn fit_prob_tables(train: &EventTable, h: &ClassHierarchy, clip_floor: f64) -> Result<ProbTables> {
    let k = h.node_count();
    if train.classes() != k {
        return Err(Error::SizeMismatch {
            expected: k,
            actual: train.classes(),
        });
    }
    if !(clip_floor > 0.0 && clip_floor <= 1.0) {
        return Err(Error::InvalidArgument(format!("clip floor must be in (0, 1], got {clip_floor}")));
    }
    let labels = train.labels()?;
    let m = train.objects().max(1) as f64;
    let clip = |p: f64| p.clamp(clip_floor, 1.0);
    let mut prior = vec![0.0; k];
    let mut conditional = vec![0.0; k];
    for v in 0..k {
        let col = labels.column(v);
        prior[v] = clip(col.iter().filter(|&&y| y == 1).count() as f64 / m);
        let parents = h.parents(v);
        if parents.is_empty() {
            conditional[v] = prior[v];
            continue;
        }
        let (mut active, mut hits) = (0usize, 0usize);
        for row in labels.rows() {
            if parents.iter().all(|&p| row[p] == 1) {
                active += 1;
                hits += (row[v] == 1) as usize;
            }
        }
        conditional[v] = if active == 0 {
            log::warn!("class `{}`: no training row has all parents positive", h.name(v));
            clip_floor
        } else {
            clip(hits as f64 / active as f64)
        };
    }
    Ok(ProbTables {
        prior,
        conditional,
        clip_floor,
    })
}

impl ProbTables {
    pub fn num_classes(&self) -> usize {
        self.prior.len()
    }

    /// `ln P(Y_k = y | parents = yp) - ln P(Y_k = y)` with clipped denominators.
    /// `yp = 0, y = 1` is structurally impossible.
    pub fn log_ratio(&self, k: usize, y: bool, parents_on: bool) -> f64 {
        let tau = self.prior[k];
        let theta = self.conditional[k];
        match (parents_on, y) {
            (true, true) => theta.ln() - tau.max(self.clip_floor).ln(),
            (true, false) => (1.0 - theta).ln() - (1.0 - tau).max(self.clip_floor).ln(),
            (false, false) => -(1.0 - tau).max(self.clip_floor).ln(),
            (false, true) => f64::NEG_INFINITY,
        }
    }
}
