//! Per-class local precision rate `LPR_k(s) = 1 - (1 - τ_k) f0_k(s) / f_k(s)`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kde::{default_bandwidth, GaussianKde, Kernel};
use crate::error::{Error, Result};
use crate::generator::EventTable;

/// Floor applied to densities before taking their ratio.
pub const DENSITY_FLOOR: f64 = 1e-12;
pub const MIN_OBJECTS: usize = 10;

/// Default probability floor `max(1/M, 1e-6)`.
pub fn default_clip_floor(m: usize) -> f64 {
    (1.0 / m.max(1) as f64).max(1e-6)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassLpr {
    /// `f0` is estimated from negatives; the marginal is the mixture
    /// `(1 - τ) f0 + τ f1`, identical to a KDE over all samples.
    Kde {
        tau: f64,
        null: GaussianKde,
        alt: GaussianKde,
    },
    Constant {
        tau: f64,
        value: f64,
    },
}

impl ClassLpr {
    pub fn from_samples(negatives: Vec<f64>, positives: Vec<f64>, bandwidth: f64) -> Result<Self> {
        let n = negatives.len() + positives.len();
        if n == 0 {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        let tau = positives.len() as f64 / n as f64;
        if negatives.is_empty() {
            return Ok(ClassLpr::Constant { tau, value: 1.0 });
        }
        if positives.is_empty() {
            return Err(Error::InvalidArgument("no positive samples".into()));
        }
        Ok(ClassLpr::Kde {
            tau,
            null: GaussianKde::new(negatives, bandwidth)?,
            alt: GaussianKde::new(positives, bandwidth)?,
        })
    }

    pub fn tau(&self) -> f64 {
        match self {
            ClassLpr::Kde { tau, .. } | ClassLpr::Constant { tau, .. } => *tau,
        }
    }

    pub fn null_density(&self, s: f64) -> Option<f64> {
        match self {
            ClassLpr::Kde { null, .. } => Some(null.density(s)),
            ClassLpr::Constant { .. } => None,
        }
    }

    pub fn marginal_density(&self, s: f64) -> Option<f64> {
        match self {
            ClassLpr::Kde { tau, null, alt } => Some((1.0 - tau) * null.density(s) + tau * alt.density(s)),
            ClassLpr::Constant { .. } => None,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            ClassLpr::Constant { value, .. } => *value,
            ClassLpr::Kde { tau, null, alt } => {
                let f0 = null.density(s);
                let f = (1.0 - tau) * f0 + tau * alt.density(s);
                let r = f0.max(DENSITY_FLOOR) / f.max(DENSITY_FLOOR);
                (1.0 - (1.0 - tau) * r).clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LprOptions {
    pub bandwidth: Option<f64>,
    pub kernel: Kernel,
    /// Substitute `LPR ≡ clip_floor` for classes without positives instead of failing.
    pub allow_degenerate: bool,
}

impl Default for LprOptions {
    fn default() -> Self {
        LprOptions {
            bandwidth: None,
            kernel: Kernel::Gaussian,
            allow_degenerate: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LprModel {
    pub kernel: Kernel,
    pub bandwidth: f64,
    pub objects: usize,
    pub class_names: Vec<String>,
    pub classes: Vec<ClassLpr>,
}

/// Fits one LPR per class from labelled training data.
pub fn fit_lpr(train: &EventTable, class_names: &[String], opts: &LprOptions) -> Result<LprModel> {
    let m = train.objects();
    let k = train.classes();
    if class_names.len() != k {
        return Err(Error::SizeMismatch {
            expected: k,
            actual: class_names.len(),
        });
    }
    if m < MIN_OBJECTS {
        return Err(Error::TooFewObjects {
            needed: MIN_OBJECTS,
            actual: m,
        });
    }
    let labels = train.labels()?;
    let bandwidth = opts.bandwidth.unwrap_or_else(|| default_bandwidth(m));
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let floor = default_clip_floor(m);
    let classes = (0..k)
        .into_par_iter()
        .map(|c| {
            let mut neg = Vec::new();
            let mut pos = Vec::new();
            for (&s, &y) in train.scores.column(c).iter().zip(labels.column(c)) {
                if y == 1 {
                    pos.push(s);
                } else {
                    neg.push(s);
                }
            }
            if pos.is_empty() {
                if opts.allow_degenerate {
                    log::warn!("class `{}` has no positives; using constant LPR {floor}", class_names[c]);
                    return Ok(ClassLpr::Constant { tau: 0.0, value: floor });
                }
                return Err(Error::NoPositives(class_names[c].clone()));
            }
            ClassLpr::from_samples(neg, pos, bandwidth)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LprModel {
        kernel: opts.kernel,
        bandwidth,
        objects: m,
        class_names: class_names.to_vec(),
        classes,
    })
}

impl LprModel {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn value(&self, k: usize, s: f64) -> f64 {
        self.classes[k].value(s)
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.classes[k].tau()
    }

    /// LPR for every entry of an `M × K` score matrix.
    pub fn values(&self, scores: &Array2<f64>) -> Result<Array2<f64>> {
        let k = self.num_classes();
        if scores.ncols() != k {
            return Err(Error::SizeMismatch {
                expected: k,
                actual: scores.ncols(),
            });
        }
        let mut out = scores.as_standard_layout().into_owned();
        out.as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(k.max(1))
            .for_each(|row| {
                for (c, s) in row.iter_mut().enumerate() {
                    *s = self.value(c, *s);
                }
            });
        Ok(out)
    }
}

/// `LPR_k(s)` for a fitted model.
pub fn lpr_value(model: &LprModel, k: usize, s: f64) -> f64 {
    model.value(k, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{sample_table, GenerativeModel, Quality};
    use crate::hierarchy::{ClassHierarchy, HierarchyMode};

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn separated_scores_give_high_lpr() {
        let m = 400;
        let scores = Array2::from_shape_fn((m, 1), |(i, _)| {
            if i % 2 == 0 {
                0.05 + 0.3 * (i as f64 / m as f64)
            } else {
                0.65 + 0.3 * (i as f64 / m as f64)
            }
        });
        let labels = Array2::from_shape_fn((m, 1), |(i, _)| (i % 2) as u8);
        let t = EventTable::new(scores, Some(labels)).unwrap();
        let model = fit_lpr(&t, &names(1), &LprOptions { bandwidth: Some(0.05), ..Default::default() }).unwrap();
        assert!(model.value(0, 0.9) >= 0.99);
        assert!(model.value(0, 0.1) <= 0.01);
        assert_eq!(model.tau(0), 0.5);
    }

    #[test]
    fn tau_is_empirical_and_bandwidth_defaults() {
        let scores = Array2::from_shape_fn((1000, 1), |(i, _)| (i as f64 * 0.618).fract());
        let labels = Array2::from_shape_fn((1000, 1), |(i, _)| (i % 4 == 0) as u8);
        let t = EventTable::new(scores, Some(labels)).unwrap();
        let model = fit_lpr(&t, &names(1), &LprOptions::default()).unwrap();
        assert_eq!(model.tau(0), 0.25);
        assert!((model.bandwidth - 0.1905).abs() < 5e-4);
    }

    #[test]
    fn constant_and_equal_density_cases() {
        let all_pos = ClassLpr::from_samples(vec![], vec![0.2, 0.4], 0.1).unwrap();
        assert_eq!(all_pos.tau(), 1.0);
        assert_eq!(all_pos.value(0.0), 1.0);
        assert_eq!(all_pos.value(0.7), 1.0);

        let same = vec![0.1, 0.5, 0.9];
        let c = ClassLpr::from_samples(same.clone(), same, 0.1).unwrap();
        for s in [0.1, 0.3, 0.77] {
            assert!((c.value(s) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_class_errors_unless_allowed() {
        let scores = Array2::from_shape_fn((20, 2), |(i, j)| (i + j) as f64 / 30.0);
        let labels = Array2::from_shape_fn((20, 2), |(i, j)| (j == 0 && i % 2 == 0) as u8);
        let t = EventTable::new(scores, Some(labels)).unwrap();
        match fit_lpr(&t, &names(2), &LprOptions::default()) {
            Err(Error::NoPositives(c)) => assert_eq!(c, "c1"),
            other => panic!("unexpected {other:?}"),
        }
        let opts = LprOptions { allow_degenerate: true, ..Default::default() };
        let model = fit_lpr(&t, &names(2), &opts).unwrap();
        assert_eq!(model.value(1, 0.5), 0.05);
        assert!(matches!(
            fit_lpr(&t.select_rows(&[0, 1, 2]), &names(2), &opts),
            Err(Error::TooFewObjects { .. })
        ));
    }

    #[test]
    fn matches_beta_posterior_at_large_m() {
        let h = ClassHierarchy::from_rows([(None, "X")], HierarchyMode::Tree).unwrap();
        let g = GenerativeModel::with_qualities(h, vec![0.3], vec![Quality::High]).unwrap();
        let t = sample_table(&g, 50_000, 1, 2).unwrap();
        let model = fit_lpr(&t, &names(1), &LprOptions::default()).unwrap();
        // Oracle: both true densities convolved with the same Gaussian kernel.
        let h = model.bandwidth;
        let smooth = |d: &crate::generator::ScoreDistribution, s: f64| {
            let n = 20_000;
            (0..=n)
                .map(|i| {
                    let x = i as f64 / n as f64;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    let z = (s - x) / h;
                    w * d.pdf(x) * (-0.5 * z * z).exp() / (h * (2.0 * std::f64::consts::PI).sqrt())
                })
                .sum::<f64>()
                / n as f64
        };
        for s in [0.3, 0.5, 0.7, 0.85] {
            let a = 0.3 * smooth(&g.alt_dists[0], s);
            let b = 0.7 * smooth(&g.null_dists[0], s);
            let truth = a / (a + b);
            assert!((model.value(0, s) - truth).abs() < 0.025, "{s}: {} vs {truth}", model.value(0, s));
        }
    }

    #[test]
    fn json_roundtrip() {
        let c = ClassLpr::from_samples(vec![0.1, 0.2], vec![0.8], 0.1).unwrap();
        let model = LprModel {
            kernel: Kernel::Gaussian,
            bandwidth: 0.1,
            objects: 3,
            class_names: names(1),
            classes: vec![c],
        };
        let back: LprModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.value(0, 0.5), model.value(0, 0.5));
    }
}
