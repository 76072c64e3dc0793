//! Hit curves, precision/recall, FDP/F1 and validation-based cutoff selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::Ranking;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitCurve {
    /// `(discoveries, hits)` for every prefix length `1..=n`.
    pub points: Vec<(usize, usize)>,
    pub auc: f64,
}

fn ranked_labels(r: &Ranking, labels: &[bool]) -> Result<Vec<bool>> {
    if r.len() != labels.len() {
        return Err(Error::SizeMismatch {
            expected: labels.len(),
            actual: r.len(),
        });
    }
    if !r.is_permutation() {
        return Err(Error::NotAPermutation);
    }
    Ok(r.flat().map(|e| labels[e]).collect())
}

pub fn hit_curve(r: &Ranking, labels: &[bool]) -> Result<HitCurve> {
    let y = ranked_labels(r, labels)?;
    let n = y.len();
    let mut hits = 0;
    let mut auc = 0.0;
    let mut points = Vec::with_capacity(n);
    for (i, &pos) in y.iter().enumerate() {
        if pos {
            hits += 1;
            auc += (n - i) as f64;
        }
        points.push((i + 1, hits));
    }
    Ok(HitCurve { points, auc })
}

/// Number of top events taken as discoveries for proportion `kappa`.
pub fn discoveries_for(kappa: f64, n: usize) -> usize {
    ((kappa * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Recall and precision when the top `ceil(kappa * n)` events are discoveries.
pub fn precision_recall_at(r: &Ranking, labels: &[bool], kappa: f64) -> Result<(f64, f64)> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must be in (0, 1], got {kappa}")));
    }
    let y = ranked_labels(r, labels)?;
    let total = y.iter().filter(|&&v| v).count();
    if total == 0 {
        return Err(Error::NoPositiveLabels);
    }
    let d = discoveries_for(kappa, y.len());
    let hits = y[..d].iter().filter(|&&v| v).count();
    let precision = if d == 0 { 0.0 } else { hits as f64 / d as f64 };
    Ok((hits as f64 / total as f64, precision))
}

/// `(recall, precision)` for every prefix length `1..=n`.
pub fn pr_curve(r: &Ranking, labels: &[bool]) -> Result<Vec<(f64, f64)>> {
    let y = ranked_labels(r, labels)?;
    let total = y.iter().filter(|&&v| v).count();
    if total == 0 {
        return Err(Error::NoPositiveLabels);
    }
    let mut hits = 0usize;
    Ok(y.iter()
        .enumerate()
        .map(|(i, &pos)| {
            hits += pos as usize;
            (hits as f64 / total as f64, hits as f64 / (i + 1) as f64)
        })
        .collect())
}

fn fdp_f1(hits: usize, d: usize, total: usize) -> (f64, f64) {
    let fdp = if d == 0 { 0.0 } else { (d - hits) as f64 / d as f64 };
    let f1 = if d == 0 || total == 0 || hits == 0 {
        0.0
    } else {
        2.0 * hits as f64 / (d + total) as f64
    };
    (fdp, f1)
}

/// FDP and F1 when the top `cutoff` events are discoveries.
pub fn fdp_f1_at(r: &Ranking, labels: &[bool], cutoff: usize) -> Result<(f64, f64)> {
    let y = ranked_labels(r, labels)?;
    if cutoff > y.len() {
        return Err(Error::InvalidArgument(format!("cutoff {cutoff} exceeds {} events", y.len())));
    }
    let total = y.iter().filter(|&&v| v).count();
    let hits = y[..cutoff].iter().filter(|&&v| v).count();
    Ok(fdp_f1(hits, cutoff, total))
}

/// FDP and F1 for every cutoff `0..=n`.
pub fn fdp_f1_scan(r: &Ranking, labels: &[bool]) -> Result<Vec<(f64, f64)>> {
    let y = ranked_labels(r, labels)?;
    let total = y.iter().filter(|&&v| v).count();
    let mut out = Vec::with_capacity(y.len() + 1);
    out.push(fdp_f1(0, 0, total));
    let mut hits = 0;
    for (i, &pos) in y.iter().enumerate() {
        hits += pos as usize;
        out.push(fdp_f1(hits, i + 1, total));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffObjective {
    TargetFdr { alpha: f64 },
    MaxF1,
}

impl std::str::FromStr for CutoffObjective {
    type Err = Error;

    /// `fdr:0.05` or `max-f1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "max-f1" || s == "max_f1" || s == "f1" {
            return Ok(CutoffObjective::MaxF1);
        }
        if let Some(a) = s.strip_prefix("fdr:") {
            let alpha: f64 = a.parse().map_err(|_| Error::Parse(format!("bad alpha `{a}`")))?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::InvalidArgument(format!("alpha must be in [0, 1], got {alpha}")));
            }
            return Ok(CutoffObjective::TargetFdr { alpha });
        }
        Err(Error::Parse(format!("unknown cutoff objective `{s}` (use fdr:<alpha> or max-f1)")))
    }
}

impl std::fmt::Display for CutoffObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CutoffObjective::TargetFdr { alpha } => write!(f, "fdr:{alpha}"),
            CutoffObjective::MaxF1 => f.write_str("max-f1"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffDecision {
    pub cutoff_rank: usize,
    pub objective: CutoffObjective,
    /// Validation FDP for a target-FDR objective, validation F1 for max-F1.
    pub achieved_on_validation: f64,
    pub n_validation: usize,
    /// How the cutoff carries over to a ranking of another size.
    pub transfer: String,
}

impl CutoffDecision {
    /// Cutoff scaled to a ranking of `n` events by rank proportion.
    pub fn scaled_cutoff(&self, n: usize) -> usize {
        if self.n_validation == 0 {
            return 0;
        }
        let c = (self.cutoff_rank as f64 * n as f64 / self.n_validation as f64).round() as usize;
        c.min(n)
    }
}

pub fn select_cutoff(r: &Ranking, labels: &[bool], objective: CutoffObjective) -> Result<CutoffDecision> {
    let scan = fdp_f1_scan(r, labels)?;
    let (cutoff_rank, achieved) = match objective {
        CutoffObjective::TargetFdr { alpha } => {
            match (1..scan.len()).rev().find(|&c| scan[c].0 <= alpha) {
                Some(c) => (c, scan[c].0),
                None => {
                    log::warn!("no cutoff reaches validation FDP <= {alpha}; selecting 0");
                    (0, 0.0)
                }
            }
        }
        CutoffObjective::MaxF1 => {
            let mut best = 0;
            for c in 1..scan.len() {
                if scan[c].1 > scan[best].1 {
                    best = c;
                }
            }
            (best, scan[best].1)
        }
    };
    Ok(CutoffDecision {
        cutoff_rank,
        objective,
        achieved_on_validation: achieved,
        n_validation: r.len(),
        transfer: "rank_proportion".into(),
    })
}

/// Marks the top events of `r` positive; the result is indexed by flat event.
pub fn apply_cutoff(r: &Ranking, decision: &CutoffDecision) -> Vec<bool> {
    let n = r.len();
    let c = decision.scaled_cutoff(n);
    let mut out = vec![false; n];
    for e in r.flat().take(c) {
        if e < n {
            out[e] = true;
        }
    }
    out
}

/// Recall/precision rows for a list of proportions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub kappa: f64,
    pub discoveries: usize,
    pub recall: f64,
    pub precision: f64,
}

pub fn kappa_table(r: &Ranking, labels: &[bool], kappas: &[f64]) -> Result<Vec<KappaRow>> {
    kappas
        .iter()
        .map(|&kappa| {
            let (recall, precision) = precision_recall_at(r, labels, kappa)?;
            Ok(KappaRow {
                kappa,
                discoveries: discoveries_for(kappa, r.len()),
                recall,
                precision,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranker::catch_empirical;
    use rand::{Rng, SeedableRng};

    fn ident(n: usize) -> Ranking {
        Ranking::from_flat(0..n, 1)
    }

    #[test]
    fn hit_curve_examples() {
        assert_eq!(hit_curve(&ident(3), &[true; 3]).unwrap().auc, 6.0);
        assert_eq!(hit_curve(&ident(3), &[false; 3]).unwrap().auc, 0.0);
        let c = hit_curve(&ident(3), &[true, false, true]).unwrap();
        assert_eq!(c.auc, 4.0);
        assert_eq!(c.points, vec![(1, 1), (2, 1), (3, 2)]);
        assert!(hit_curve(&ident(2), &[true; 3]).is_err());
    }

    #[test]
    fn auc_equals_catch_of_indicators() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let n = rng.random_range(1..60);
            let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let r = Ranking::from_flat(order, 1);
            let values: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();
            assert_eq!(hit_curve(&r, &labels).unwrap().auc, catch_empirical(&r, &values).unwrap());
            let curve = hit_curve(&r, &labels).unwrap();
            let pr = pr_curve(&r, &labels).ok();
            for (i, w) in curve.points.windows(2).enumerate() {
                assert!(w[1].1 >= w[0].1 && w[1].1 <= w[1].0);
                if let Some(pr) = &pr {
                    // precision at i+2 times discoveries equals hits.
                    assert!((pr[i + 1].1 * w[1].0 as f64 - w[1].1 as f64).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn precision_recall_examples() {
        let labels = [true, true, false, false, false, false, false, false, false, false];
        let (rec, prec) = precision_recall_at(&ident(10), &labels, 0.2).unwrap();
        assert_eq!((rec, prec), (1.0, 1.0));
        let (rec, prec) = precision_recall_at(&ident(10), &labels, 1.0).unwrap();
        assert_eq!((rec, prec), (1.0, 0.2));
        assert!(matches!(precision_recall_at(&ident(3), &[false; 3], 0.5), Err(Error::NoPositiveLabels)));
        assert_eq!(discoveries_for(0.05, 250_000), 12_500);
        assert_eq!(discoveries_for(0.3, 10), 3);
    }

    #[test]
    fn pr_curve_shapes() {
        let pr = pr_curve(&ident(4), &[true, true, false, false]).unwrap();
        assert_eq!(pr[0], (0.5, 1.0));
        assert_eq!(pr[1], (1.0, 1.0));
        let rev = Ranking::from_flat([3, 2, 1, 0], 1);
        let pr = pr_curve(&rev, &[true, true, false, false]).unwrap();
        assert_eq!(pr[0].1, 0.0);
        assert_eq!(pr[1].1, 0.0);
    }

    #[test]
    fn fdp_f1_examples() {
        assert_eq!(fdp_f1_at(&ident(2), &[true, false], 0).unwrap(), (0.0, 0.0));
        assert_eq!(fdp_f1_at(&ident(2), &[true, false], 2).unwrap().0, 0.5);
        let labels = [true, true, true, false];
        let (fdp, f1) = fdp_f1_at(&ident(4), &labels, 2).unwrap();
        let recall = 2.0 / 3.0;
        assert_eq!(fdp, 0.0);
        assert!((f1 - 2.0 * recall / (1.0 + recall)).abs() < 1e-12);
        assert!(fdp_f1_at(&ident(4), &labels, 5).is_err());
    }

    #[test]
    fn cutoff_selection() {
        let labels = [true, true, true, false, false, true, false];
        let d = select_cutoff(&ident(7), &labels, CutoffObjective::TargetFdr { alpha: 0.05 }).unwrap();
        assert_eq!(d.cutoff_rank, 3);
        let d = select_cutoff(&ident(7), &labels, CutoffObjective::TargetFdr { alpha: 0.34 }).unwrap();
        assert_eq!(d.cutoff_rank, 6);
        assert!(d.achieved_on_validation <= 0.34);
        let d = select_cutoff(&ident(3), &[false, true, true], CutoffObjective::TargetFdr { alpha: 0.0 }).unwrap();
        assert_eq!(d.cutoff_rank, 0);
        let d = select_cutoff(&ident(7), &labels, CutoffObjective::MaxF1).unwrap();
        assert_eq!(d.cutoff_rank, 3);
        // Ties on F1 keep the smallest cutoff.
        let d = select_cutoff(&ident(4), &[true, false, false, true], CutoffObjective::MaxF1).unwrap();
        assert_eq!(d.cutoff_rank, 1);
    }

    #[test]
    fn apply_scales_by_rank_proportion() {
        let d = CutoffDecision {
            cutoff_rank: 3,
            objective: CutoffObjective::MaxF1,
            achieved_on_validation: 0.0,
            n_validation: 10,
            transfer: "rank_proportion".into(),
        };
        let r = Ranking::from_flat([4, 0, 2, 1, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19], 1);
        let out = apply_cutoff(&r, &d);
        assert_eq!(out.iter().filter(|&&b| b).count(), 6);
        assert!(out[4] && out[0] && out[5] && !out[6]);
        let zero = CutoffDecision { cutoff_rank: 0, ..d.clone() };
        assert!(apply_cutoff(&r, &zero).iter().all(|&b| !b));
        let all = CutoffDecision { cutoff_rank: 10, ..d };
        assert!(apply_cutoff(&r, &all).iter().all(|&b| b));
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("fdr:0.1".parse::<CutoffObjective>().unwrap(), CutoffObjective::TargetFdr { alpha: 0.1 });
        assert_eq!("max-f1".parse::<CutoffObjective>().unwrap(), CutoffObjective::MaxF1);
        assert!("fdr:2".parse::<CutoffObjective>().is_err());
        assert!("other".parse::<CutoffObjective>().is_err());
    }
}
