//! The generative model: labels are drawn top-down through the hierarchy and
//! scores from per-class null/alternative distributions given the labels.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::inference::TreeInference;
use crate::hierarchy::{ClassHierarchy, HierarchyMode};

const BENCHMARK_HIERARCHY: &str = include_str!("../data/synthetic_hierarchy.csv");
const BENCHMARK_QUALITY: &str = include_str!("../data/synthetic_quality.csv");

/// Training size and prevalence floor used when drawing the synthetic model.
pub const BENCHMARK_TRAIN: usize = 50_000;
pub const BENCHMARK_TEST: usize = 10_000;
pub const BENCHMARK_MIN_PREVALENCE: f64 = 0.003;
pub const REJECTION_BUDGET: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ScoreDistribution {
    Beta { alpha: f64, beta: f64 },
    Gaussian { mean: f64, sd: f64 },
}

impl ScoreDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScoreDistribution::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite(),
            ScoreDistribution::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid score distribution {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScoreDistribution::Beta { alpha, beta } => alpha / (alpha + beta),
            ScoreDistribution::Gaussian { mean, .. } => mean,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            ScoreDistribution::Beta { alpha, beta } => {
                let x = x.clamp(1e-12, 1.0 - 1e-12);
                use statrs::function::gamma::ln_gamma;
                (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() + ln_gamma(alpha + beta)
                    - ln_gamma(alpha)
                    - ln_gamma(beta)
            }
            ScoreDistribution::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    fn sampler(&self) -> Sampler {
        match *self {
            ScoreDistribution::Beta { alpha, beta } => {
                Sampler::Beta(rand_distr::Beta::new(alpha, beta).expect("validated beta parameters"))
            }
            ScoreDistribution::Gaussian { mean, sd } => {
                Sampler::Normal(rand_distr::Normal::new(mean, sd).expect("validated normal parameters"))
            }
        }
    }
}

enum Sampler {
    Beta(rand_distr::Beta<f64>),
    Normal(rand_distr::Normal<f64>),
}

impl Sampler {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Beta(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
        }
    }
}

/// Node quality of the synthetic experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    High,
    Medium,
    Low,
}

impl Quality {
    pub fn eta(self) -> f64 {
        match self {
            Quality::High => 2.0,
            Quality::Medium => 5.5,
            Quality::Low => 4.0,
        }
    }

    /// Negatives follow Beta(η, 3.5).
    pub fn null_dist(self) -> ScoreDistribution {
        ScoreDistribution::Beta { alpha: self.eta(), beta: 3.5 }
    }

    /// Positives follow Beta(3.5, η).
    pub fn alt_dist(self) -> ScoreDistribution {
        ScoreDistribution::Beta { alpha: 3.5, beta: self.eta() }
    }
}

impl std::str::FromStr for Quality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Quality::High),
            "medium" => Ok(Quality::Medium),
            "low" => Ok(Quality::Low),
            other => Err(Error::Parse(format!("unknown quality `{other}`"))),
        }
    }
}

/// The exact data-generating model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerativeModel {
    pub hierarchy: ClassHierarchy,
    /// For a root, `P(Y_k = 1)`; otherwise `P(Y_k = 1 | all parents = 1)`.
    pub activation: Vec<f64>,
    pub null_dists: Vec<ScoreDistribution>,
    pub alt_dists: Vec<ScoreDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<Vec<Quality>>,
}

impl GenerativeModel {
    pub fn new(
        hierarchy: ClassHierarchy,
        activation: Vec<f64>,
        null_dists: Vec<ScoreDistribution>,
        alt_dists: Vec<ScoreDistribution>,
    ) -> Result<Self> {
        let m = GenerativeModel {
            hierarchy,
            activation,
            null_dists,
            alt_dists,
            quality: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// Model whose class distributions follow the given qualities.
    pub fn with_qualities(hierarchy: ClassHierarchy, activation: Vec<f64>, quality: Vec<Quality>) -> Result<Self> {
        let m = GenerativeModel {
            null_dists: quality.iter().map(|q| q.null_dist()).collect(),
            alt_dists: quality.iter().map(|q| q.alt_dist()).collect(),
            hierarchy,
            activation,
            quality: Some(quality),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.hierarchy.node_count();
        for len in [self.activation.len(), self.null_dists.len(), self.alt_dists.len()] {
            if len != k {
                return Err(Error::SizeMismatch { expected: k, actual: len });
            }
        }
        if let Some(q) = &self.quality {
            if q.len() != k {
                return Err(Error::SizeMismatch { expected: k, actual: q.len() });
            }
        }
        if let Some(p) = self.activation.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
        for d in self.null_dists.iter().chain(&self.alt_dists) {
            d.validate()?;
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.hierarchy.node_count()
    }

    /// `P(Y_k = 1)` for a root class, `None` otherwise.
    pub fn root_prob(&self, k: usize) -> Option<f64> {
        self.hierarchy.parents(k).is_empty().then(|| self.activation[k])
    }

    /// `P(Y_k = 1 | all parents = 1)` for a non-root class, `None` for roots.
    pub fn cond_prob(&self, k: usize) -> Option<f64> {
        (!self.hierarchy.parents(k).is_empty()).then(|| self.activation[k])
    }

    /// Marginal `P(Y_k = 1)` for tree-mode models (product along the root path).
    pub fn marginal_prevalence(&self) -> Result<Vec<f64>> {
        self.hierarchy.require_tree()?;
        let mut out = vec![0.0; self.num_classes()];
        for &k in self.hierarchy.topological_order() {
            out[k] = match self.hierarchy.parents(k).first() {
                None => self.activation[k],
                Some(&p) => out[p] * self.activation[k],
            };
        }
        Ok(out)
    }
}

/// Scores and optional labels for `M` objects over `K` classes.
#[derive(Clone, Debug, PartialEq)]
pub struct EventTable {
    pub scores: Array2<f64>,
    pub labels: Option<Array2<u8>>,
}

impl EventTable {
    pub fn new(scores: Array2<f64>, labels: Option<Array2<u8>>) -> Result<Self> {
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite score {bad}")));
        }
        if let Some(l) = &labels {
            if l.dim() != scores.dim() {
                return Err(Error::SizeMismatch {
                    expected: scores.len(),
                    actual: l.len(),
                });
            }
            if l.iter().any(|&y| y > 1) {
                return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
            }
        }
        Ok(EventTable { scores, labels })
    }

    pub fn objects(&self) -> usize {
        self.scores.nrows()
    }

    pub fn classes(&self) -> usize {
        self.scores.ncols()
    }

    pub fn n_events(&self) -> usize {
        self.scores.len()
    }

    pub fn labels(&self) -> Result<&Array2<u8>> {
        self.labels
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("labels required".into()))
    }

    /// Scores in flat event order (`m * K + k`).
    pub fn flat_scores(&self) -> Vec<f64> {
        self.scores.iter().copied().collect()
    }

    pub fn flat_labels(&self) -> Result<Vec<bool>> {
        Ok(self.labels()?.iter().map(|&y| y == 1).collect())
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> EventTable {
        let axis = ndarray::Axis(0);
        EventTable {
            scores: self.scores.select(axis, rows),
            labels: self.labels.as_ref().map(|l| l.select(axis, rows)),
        }
    }

    /// True if every positive label has all parent labels positive.
    pub fn labels_consistent(&self, h: &ClassHierarchy) -> bool {
        match &self.labels {
            None => true,
            Some(l) => l.rows().into_iter().all(|row| {
                h.edges().all(|(p, c)| row[c] == 0 || row[p] == 1)
            }),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for a named stage from a root seed.
pub fn derive_seed(seed: u64, stage: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stage.wrapping_add(0xA5A5_A5A5)))
}

fn object_rng(seed: u64, m: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64);
    rng
}

/// Seeds for each stage of a simulation, all derived from one root seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationSeeds {
    pub root: u64,
    pub model: u64,
    pub train_labels: u64,
    pub train_scores: u64,
    pub test_labels: u64,
    pub test_scores: u64,
}

impl SimulationSeeds {
    pub fn new(root: u64) -> Self {
        SimulationSeeds {
            root,
            model: derive_seed(root, 1),
            train_labels: derive_seed(root, 2),
            train_scores: derive_seed(root, 3),
            test_labels: derive_seed(root, 4),
            test_scores: derive_seed(root, 5),
        }
    }
}

/// Top-down ancestral sampling. Each object uses its own RNG stream, so the
/// result does not depend on scheduling.
pub fn sample_labels(model: &GenerativeModel, objects: usize, seed: u64) -> Array2<u8> {
    let h = &model.hierarchy;
    let k = h.node_count();
    let mut out = Array2::<u8>::zeros((objects, k));
    if k == 0 {
        return out;
    }
    out.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(m, row)| {
            let mut rng = object_rng(seed, m);
            for &v in h.topological_order() {
                let u: f64 = rng.random();
                let parents_on = h.parents(v).iter().all(|&p| row[p] == 1);
                row[v] = (parents_on && u < model.activation[v]) as u8;
            }
        });
    out
}

/// Draws each score from the null or alternative distribution of its class.
pub fn sample_scores(labels: &Array2<u8>, model: &GenerativeModel, seed: u64) -> Result<Array2<f64>> {
    let k = model.num_classes();
    if labels.ncols() != k {
        return Err(Error::SizeMismatch {
            expected: k,
            actual: labels.ncols(),
        });
    }
    let null: Vec<Sampler> = model.null_dists.iter().map(|d| d.sampler()).collect();
    let alt: Vec<Sampler> = model.alt_dists.iter().map(|d| d.sampler()).collect();
    let labels = labels.as_standard_layout();
    let labels = labels.as_slice().expect("standard layout");
    let mut out = Array2::<f64>::zeros((labels.len() / k.max(1), k));
    if k == 0 {
        return Ok(out);
    }
    out.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(k)
        .zip(labels.par_chunks(k))
        .enumerate()
        .for_each(|(m, (row, y))| {
            let mut rng = object_rng(seed, m);
            for v in 0..k {
                row[v] = if y[v] == 1 { alt[v].sample(&mut rng) } else { null[v].sample(&mut rng) };
            }
        });
    Ok(out)
}

/// Labels then scores, as an [`EventTable`].
pub fn sample_table(model: &GenerativeModel, objects: usize, label_seed: u64, score_seed: u64) -> Result<EventTable> {
    let labels = sample_labels(model, objects, label_seed);
    let scores = sample_scores(&labels, model, score_seed)?;
    EventTable::new(scores, Some(labels))
}

/// The 25-class hierarchy of the synthetic experiment.
pub fn benchmark_hierarchy() -> ClassHierarchy {
    ClassHierarchy::from_csv_reader(BENCHMARK_HIERARCHY.as_bytes(), HierarchyMode::Tree)
        .expect("bundled hierarchy is valid")
}

/// Node qualities of the synthetic experiment, indexed like [`benchmark_hierarchy`].
pub fn benchmark_qualities(h: &ClassHierarchy) -> Result<Vec<Quality>> {
    let mut rdr = csv::Reader::from_reader(BENCHMARK_QUALITY.as_bytes());
    let mut out = vec![None; h.node_count()];
    for rec in rdr.records() {
        let rec = rec?;
        let name = rec.get(0).unwrap_or("");
        let k = h.id(name).ok_or_else(|| Error::UnknownClass(name.to_string()))?;
        out[k] = Some(rec.get(1).unwrap_or("").parse()?);
    }
    out.into_iter()
        .enumerate()
        .map(|(k, q)| q.ok_or_else(|| Error::UnknownClass(h.name(k).to_string())))
        .collect()
}

/// Draws probabilities uniformly on (0, 1) and rejects until every class has
/// expected prevalence at least `min_prevalence` and the training draw (with
/// the label seed derived from `seed`) has at least `ceil(min_prevalence * n_train)`
/// positives per class.
pub fn random_model(
    h: &ClassHierarchy,
    quality: &[Quality],
    seed: u64,
    n_train: usize,
    min_prevalence: f64,
) -> Result<GenerativeModel> {
    let seeds = SimulationSeeds::new(seed);
    let need = (min_prevalence * n_train as f64).ceil() as usize;
    for attempt in 0..REJECTION_BUDGET {
        let mut rng = object_rng(seeds.model, attempt);
        let activation: Vec<f64> = (0..h.node_count()).map(|_| rng.random::<f64>()).collect();
        let model = GenerativeModel::with_qualities(h.clone(), activation, quality.to_vec())?;
        if h.is_tree() && model.marginal_prevalence()?.iter().any(|&p| p < min_prevalence) {
            continue;
        }
        let labels = sample_labels(&model, n_train, seeds.train_labels);
        let enough = labels
            .columns()
            .into_iter()
            .all(|c| c.iter().filter(|&&y| y == 1).count() >= need);
        if enough {
            log::debug!("model accepted after {} attempts", attempt + 1);
            return Ok(model);
        }
    }
    Err(Error::RejectionBudget(REJECTION_BUDGET))
}

/// The synthetic experiment's model for a given seed.
pub fn benchmark_model(seed: u64) -> Result<GenerativeModel> {
    let h = benchmark_hierarchy();
    let q = benchmark_qualities(&h)?;
    random_model(&h, &q, seed, BENCHMARK_TRAIN, BENCHMARK_MIN_PREVALENCE)
}

/// Train/test tables drawn from a model with the stage seeds of `seed`.
#[derive(Clone, Debug)]
pub struct SimulatedData {
    pub model: GenerativeModel,
    pub seeds: SimulationSeeds,
    pub train: EventTable,
    pub test: EventTable,
}

pub fn simulate(model: GenerativeModel, seed: u64, n_train: usize, n_test: usize) -> Result<SimulatedData> {
    let seeds = SimulationSeeds::new(seed);
    let train = sample_table(&model, n_train, seeds.train_labels, seeds.train_scores)?;
    let test = sample_table(&model, n_test, seeds.test_labels, seeds.test_scores)?;
    Ok(SimulatedData { model, seeds, train, test })
}

/// The full synthetic experiment: 50,000 training and 10,000 test objects.
pub fn simulate_benchmark(seed: u64) -> Result<SimulatedData> {
    simulate(benchmark_model(seed)?, seed, BENCHMARK_TRAIN, BENCHMARK_TEST)
}

/// Exact `P(Y_k = 1 | all scores of the object)` under the model.
pub fn exact_mlpr(model: &GenerativeModel, scores: &Array2<f64>) -> Result<Array2<f64>> {
    let h = &model.hierarchy;
    h.require_tree()?;
    let k = h.node_count();
    if scores.ncols() != k {
        return Err(Error::SizeMismatch {
            expected: k,
            actual: scores.ncols(),
        });
    }
    let prior: Vec<[f64; 2]> = model.activation.iter().map(|&p| [(1.0 - p).ln(), p.ln()]).collect();
    let node_log: Vec<[f64; 2]> = scores
        .indexed_iter()
        .map(|((_, v), &s)| [model.null_dists[v].ln_pdf(s), model.alt_dists[v].ln_pdf(s)])
        .collect();
    let mut out = Array2::<f64>::zeros(scores.dim());
    TreeInference::new(h, prior).marginals_rows(&node_log, out.as_slice_mut().expect("standard layout"));
    Ok(out)
}
