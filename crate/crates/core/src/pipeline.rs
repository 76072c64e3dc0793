//! Command implementations behind the `hmcrank` binary: simulate, fit, rank,
//! evaluate and the end-to-end pipeline. All of them are deterministic given
//! their inputs and seed.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    default_clip_floor, fit_gaussian, fit_lpr, fit_prob_tables, mlpr_full, mlpr_indpt, mlpr_nbh, GaussianModel,
    LprModel, LprOptions, ProbTables,
};
use crate::evaluator::{
    apply_cutoff, fdp_f1_at, fdp_f1_scan, hit_curve, kappa_table, pr_curve, select_cutoff, CutoffDecision,
    CutoffObjective, KappaRow,
};
use crate::generator::{
    derive_seed, benchmark_hierarchy, benchmark_qualities, random_model, simulate, EventTable, GenerativeModel, Quality,
    SimulatedData, SimulationSeeds, BENCHMARK_MIN_PREVALENCE, BENCHMARK_TEST, BENCHMARK_TRAIN,
};
use crate::hierarchy::{is_topological, ClassHierarchy, HierarchyMode, Ranking};
use crate::io;
use crate::ranker::{
    catch_empirical, cssa_rank, hier_rank_dag, hier_rank_fast, hier_rank_tree, naive_sort, DagConstraint,
    ScoredForest, DEFAULT_REDUCTION_BUDGET,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_KAPPAS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Naive,
    Hierrank,
    HierrankFast,
    Cssa,
    DagAnd,
    DagOr,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Algorithm::Naive),
            "hierrank" => Ok(Algorithm::Hierrank),
            "hierrank-fast" => Ok(Algorithm::HierrankFast),
            "cssa" => Ok(Algorithm::Cssa),
            "dag-and" => Ok(Algorithm::DagAnd),
            "dag-or" => Ok(Algorithm::DagOr),
            other => Err(Error::Parse(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// The per-event statistic that gets ranked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Raw,
    Indpt,
    Nbh,
    Full,
    Gaussian,
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Statistic::Raw),
            "indpt" => Ok(Statistic::Indpt),
            "nbh" => Ok(Statistic::Nbh),
            "full" => Ok(Statistic::Full),
            "gaussian" => Ok(Statistic::Gaussian),
            other => Err(Error::Parse(format!("unknown variant `{other}`"))),
        }
    }
}

/// Which class hierarchy to simulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassesSpec {
    /// The 25-class synthetic hierarchy.
    Benchmark,
    /// A single chain of `n` classes.
    Chain(usize),
}

impl std::str::FromStr for ClassesSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "benchmark" {
            return Ok(ClassesSpec::Benchmark);
        }
        if let Some(n) = s.strip_prefix("chain:") {
            let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad chain length `{n}`")))?;
            if n == 0 {
                return Err(Error::InvalidArgument("chain needs at least one class".into()));
            }
            return Ok(ClassesSpec::Chain(n));
        }
        Err(Error::Parse(format!("unknown classes spec `{s}` (use benchmark or chain:<n>)")))
    }
}

impl ClassesSpec {
    pub fn hierarchy_and_quality(self) -> Result<(ClassHierarchy, Vec<Quality>)> {
        match self {
            ClassesSpec::Benchmark => {
                let h = benchmark_hierarchy();
                let q = benchmark_qualities(&h)?;
                Ok((h, q))
            }
            ClassesSpec::Chain(n) => {
                let names: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
                let parents = (0..n).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect();
                let h = ClassHierarchy::from_parents(names, parents, HierarchyMode::Tree)?;
                let cycle = [Quality::High, Quality::Medium, Quality::Low];
                Ok((h, (0..n).map(|i| cycle[i % 3]).collect()))
            }
        }
    }

    /// Draws the model, rejecting until the training draw meets the prevalence floor.
    pub fn model(self, seed: u64, n_train: usize) -> Result<GenerativeModel> {
        let (h, q) = self.hierarchy_and_quality()?;
        random_model(&h, &q, seed, n_train, BENCHMARK_MIN_PREVALENCE)
    }
}

#[derive(Clone, Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    seeds: Option<SimulationSeeds>,
    config: &'a C,
    files: Vec<String>,
}

fn write_manifest<C: Serialize>(
    dir: &Path,
    command: &'static str,
    seed: Option<u64>,
    config: &C,
    files: Vec<String>,
) -> Result<()> {
    let manifest = Manifest {
        tool: "hmcrank",
        version: VERSION,
        command,
        seed,
        seeds: seed.map(SimulationSeeds::new),
        config,
        files,
    };
    io::write_json(&dir.join("manifest.json"), &manifest)
}

fn write_table(dir: &Path, h: &ClassHierarchy, t: &EventTable) -> Result<()> {
    io::write_matrix(&dir.join("scores.csv"), h.names(), &t.scores)?;
    if let Some(l) = &t.labels {
        io::write_matrix(&dir.join("labels.csv"), h.names(), l)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- simulate

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulateArgs {
    pub out: PathBuf,
    pub seed: u64,
    pub classes: ClassesSpec,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for SimulateArgs {
    fn default() -> Self {
        SimulateArgs {
            out: PathBuf::from("sim"),
            seed: 0,
            classes: ClassesSpec::Benchmark,
            n_train: BENCHMARK_TRAIN,
            n_test: BENCHMARK_TEST,
        }
    }
}

/// Writes `hierarchy.csv`, `model.json`, `train/` and `test/` score and
/// label files, and `manifest.json`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulatedData> {
    let model = args.classes.model(args.seed, args.n_train)?;
    let data = simulate(model, args.seed, args.n_train, args.n_test)?;
    let h = &data.model.hierarchy;
    io::write_hierarchy(&args.out.join("hierarchy.csv"), h)?;
    io::write_json(&args.out.join("model.json"), &data.model)?;
    write_table(&args.out.join("train"), h, &data.train)?;
    write_table(&args.out.join("test"), h, &data.test)?;
    let files = ["hierarchy.csv", "model.json", "train/scores.csv", "train/labels.csv", "test/scores.csv", "test/labels.csv"];
    write_manifest(&args.out, "simulate", Some(args.seed), args, files.map(String::from).to_vec())?;
    Ok(data)
}

// ---------------------------------------------------------------- fit

/// Everything needed to turn scores into mLPR estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub version: String,
    pub hierarchy: ClassHierarchy,
    pub lpr: LprModel,
    pub tables: ProbTables,
    #[serde(default)]
    pub gaussian: Option<GaussianModel>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bandwidth: Option<f64>,
    pub allow_degenerate: bool,
    pub clip_floor: Option<f64>,
}

pub fn fit_models(train: &EventTable, h: &ClassHierarchy, opts: &FitOptions) -> Result<FittedModel> {
    let lpr_opts = LprOptions {
        bandwidth: opts.bandwidth,
        allow_degenerate: opts.allow_degenerate,
        ..Default::default()
    };
    let lpr = fit_lpr(train, h.names(), &lpr_opts)?;
    let clip = opts.clip_floor.unwrap_or_else(|| default_clip_floor(train.objects()));
    let tables = fit_prob_tables(train, h, clip)?;
    let gaussian = if h.is_tree() {
        fit_gaussian(train, h)
            .map_err(|e| log::info!("gaussian variant unavailable: {e}"))
            .ok()
    } else {
        None
    };
    Ok(FittedModel {
        version: VERSION.to_string(),
        hierarchy: h.clone(),
        lpr,
        tables,
        gaussian,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitArgs {
    pub hierarchy: PathBuf,
    pub mode: HierarchyMode,
    pub scores: PathBuf,
    pub labels: PathBuf,
    pub options: FitOptions,
    /// Output model file.
    pub out: PathBuf,
}

pub fn load_table(h: &ClassHierarchy, scores: &Path, labels: Option<&Path>) -> Result<EventTable> {
    let s = io::read_scores(scores, h)?;
    let l = labels.map(|p| io::read_labels(p, h)).transpose()?;
    EventTable::new(s, l)
}

pub fn cmd_fit(args: &FitArgs) -> Result<FittedModel> {
    let h = ClassHierarchy::from_csv_path(&args.hierarchy, args.mode)?;
    let train = load_table(&h, &args.scores, Some(&args.labels))?;
    if !train.labels_consistent(&h) {
        log::warn!("training labels violate the hierarchy");
    }
    let model = fit_models(&train, &h, &args.options)?;
    io::write_atomic(&args.out, |w| Ok(serde_json::to_writer(w, &model)?))?;
    Ok(model)
}

// ---------------------------------------------------------------- rank

/// The ranked statistic for each event.
pub fn estimate(model: Option<&FittedModel>, h: &ClassHierarchy, stat: Statistic, scores: &Array2<f64>) -> Result<Array2<f64>> {
    if stat == Statistic::Raw {
        return Ok(scores.clone());
    }
    let model = model.ok_or_else(|| Error::InvalidArgument(format!("variant {stat:?} needs a fitted model")))?;
    if model.hierarchy.names() != h.names() {
        return Err(Error::InvalidArgument("model was fitted on a different hierarchy".into()));
    }
    let est = match stat {
        Statistic::Indpt => mlpr_indpt(&model.lpr, scores)?,
        Statistic::Nbh => mlpr_nbh(&model.lpr, &model.tables, h, scores)?,
        Statistic::Full => mlpr_full(&model.lpr, &model.tables, h, scores)?,
        Statistic::Gaussian => model
            .gaussian
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("model has no gaussian fit".into()))?
            .mlpr(h, scores)?,
        Statistic::Raw => unreachable!(),
    };
    Ok(est.values)
}

pub fn rank_values(h: &ClassHierarchy, values: &Array2<f64>, algo: Algorithm, budget: u128) -> Result<Ranking> {
    let forest = ScoredForest::from_matrix(h, values)?;
    match algo {
        Algorithm::Naive => Ok(naive_sort(&forest)),
        Algorithm::Hierrank => hier_rank_tree(&forest),
        Algorithm::HierrankFast => hier_rank_fast(&forest),
        Algorithm::Cssa => cssa_rank(&forest),
        Algorithm::DagAnd => hier_rank_dag(&forest, DagConstraint::And, budget),
        Algorithm::DagOr => hier_rank_dag(&forest, DagConstraint::Or, budget),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub variant: Statistic,
    pub algorithm: Algorithm,
    pub objects: usize,
    pub n_events: usize,
    /// Empirical CATCH of the ranking with the ranked statistic as values.
    pub catch: f64,
    /// Every parent event precedes its children.
    pub topological: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankArgs {
    pub hierarchy: PathBuf,
    pub mode: HierarchyMode,
    pub scores: PathBuf,
    pub model: Option<PathBuf>,
    pub variant: Statistic,
    pub algorithm: Algorithm,
    pub budget: u128,
    /// Output directory for `ranking.csv` and `summary.json`.
    pub out: PathBuf,
}

pub struct RankOutput {
    pub ranking: Ranking,
    pub values: Array2<f64>,
    pub summary: RankSummary,
}

pub fn rank_table(
    h: &ClassHierarchy,
    model: Option<&FittedModel>,
    scores: &Array2<f64>,
    variant: Statistic,
    algorithm: Algorithm,
    budget: u128,
) -> Result<RankOutput> {
    let values = estimate(model, h, variant, scores)?;
    let ranking = rank_values(h, &values, algorithm, budget)?;
    let flat: Vec<f64> = values.iter().copied().collect();
    let summary = RankSummary {
        variant,
        algorithm,
        objects: values.nrows(),
        n_events: flat.len(),
        catch: catch_empirical(&ranking, &flat)?,
        topological: is_topological(&ranking, h, values.nrows())?,
    };
    Ok(RankOutput { ranking, values, summary })
}

fn write_rank_output(dir: &Path, h: &ClassHierarchy, scores: &Array2<f64>, out: &RankOutput) -> Result<()> {
    let s: Vec<f64> = scores.iter().copied().collect();
    let v: Vec<f64> = out.values.iter().copied().collect();
    io::write_ranking(&dir.join("ranking.csv"), &out.ranking, h, &s, &v)?;
    io::write_json(&dir.join("summary.json"), &out.summary)
}

pub fn cmd_rank(args: &RankArgs) -> Result<RankOutput> {
    let h = ClassHierarchy::from_csv_path(&args.hierarchy, args.mode)?;
    let scores = io::read_scores(&args.scores, &h)?;
    let model: Option<FittedModel> = args.model.as_deref().map(io::read_json).transpose()?;
    let out = rank_table(&h, model.as_ref(), &scores, args.variant, args.algorithm, args.budget)?;
    write_rank_output(&args.out, &h, &scores, &out)?;
    Ok(out)
}

// ---------------------------------------------------------------- evaluate

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub decision: CutoffDecision,
    pub test_cutoff: usize,
    pub discovery_proportion: f64,
    pub fdp: f64,
    pub f1: f64,
    /// Largest F1 over all cutoffs of the same ranking.
    pub max_f1: f64,
    pub max_f1_cutoff: usize,
    /// The positive decisions respect the hierarchy.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_events: usize,
    pub positives: usize,
    pub auc: f64,
    pub kappa: Vec<KappaRow>,
    pub cutoffs: Vec<CutoffReport>,
}

fn decisions_consistent(decisions: &[bool], h: &ClassHierarchy) -> bool {
    let k = h.node_count();
    decisions
        .chunks(k)
        .all(|row| h.edges().all(|(p, c)| !row[c] || row[p]))
}

pub fn cutoff_report(
    decision: CutoffDecision,
    test: &Ranking,
    test_labels: &[bool],
    h: &ClassHierarchy,
) -> Result<CutoffReport> {
    let n = test.len();
    let decisions = apply_cutoff(test, &decision);
    let c = decision.scaled_cutoff(n);
    let (fdp, f1) = fdp_f1_at(test, test_labels, c)?;
    let scan = fdp_f1_scan(test, test_labels)?;
    let (max_f1_cutoff, max_f1) = scan
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &(_, f))| if f > acc.1 { (i, f) } else { acc });
    Ok(CutoffReport {
        decision,
        test_cutoff: c,
        discovery_proportion: c as f64 / n.max(1) as f64,
        fdp,
        f1,
        max_f1,
        max_f1_cutoff,
        consistent: decisions_consistent(&decisions, h),
    })
}

/// Metrics of a test ranking, plus cutoffs chosen on a validation ranking.
pub fn evaluate(
    h: &ClassHierarchy,
    test: &Ranking,
    test_labels: &[bool],
    kappas: &[f64],
    cutoffs: &[CutoffObjective],
    validation: Option<(&Ranking, &[bool])>,
) -> Result<Metrics> {
    let curve = hit_curve(test, test_labels)?;
    let positives = test_labels.iter().filter(|&&y| y).count();
    let kappa = if kappas.is_empty() { Vec::new() } else { kappa_table(test, test_labels, kappas)? };
    let mut reports = Vec::new();
    if !cutoffs.is_empty() {
        let (vr, vl) = validation
            .ok_or_else(|| Error::InvalidArgument("cutoff selection needs a validation ranking and labels".into()))?;
        for &obj in cutoffs {
            reports.push(cutoff_report(select_cutoff(vr, vl, obj)?, test, test_labels, h)?);
        }
    }
    Ok(Metrics {
        n_events: test.len(),
        positives,
        auc: curve.auc,
        kappa,
        cutoffs: reports,
    })
}

fn write_curves(dir: &Path, r: &Ranking, labels: &[bool]) -> Result<()> {
    let curve = hit_curve(r, labels)?;
    io::write_rows(
        &dir.join("hit_curve.csv"),
        &["discoveries", "hits"],
        curve.points.iter().map(|&(d, h)| vec![d.to_string(), h.to_string()]),
    )?;
    if let Ok(pr) = pr_curve(r, labels) {
        io::write_rows(
            &dir.join("pr_curve.csv"),
            &["recall", "precision"],
            pr.iter().map(|&(a, b)| vec![a.to_string(), b.to_string()]),
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluateArgs {
    pub hierarchy: PathBuf,
    pub mode: HierarchyMode,
    pub ranking: PathBuf,
    pub labels: PathBuf,
    pub kappas: Vec<f64>,
    pub cutoffs: Vec<CutoffObjective>,
    pub validation_ranking: Option<PathBuf>,
    pub validation_labels: Option<PathBuf>,
    /// Output directory for `metrics.json` and curve CSVs.
    pub out: PathBuf,
}

fn flat_labels(labels: &Array2<u8>) -> Vec<bool> {
    labels.iter().map(|&y| y == 1).collect()
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Metrics> {
    let h = ClassHierarchy::from_csv_path(&args.hierarchy, args.mode)?;
    let (test, _) = io::read_ranking(&args.ranking, &h)?;
    let labels = flat_labels(&io::read_labels(&args.labels, &h)?);
    let validation = match (&args.validation_ranking, &args.validation_labels) {
        (Some(r), Some(l)) => Some((io::read_ranking(r, &h)?.0, flat_labels(&io::read_labels(l, &h)?))),
        (None, None) => None,
        _ => return Err(Error::InvalidArgument("validation ranking and labels go together".into())),
    };
    let metrics = evaluate(
        &h,
        &test,
        &labels,
        &args.kappas,
        &args.cutoffs,
        validation.as_ref().map(|(r, l)| (r, l.as_slice())),
    )?;
    io::write_json(&args.out.join("metrics.json"), &metrics)?;
    write_curves(&args.out, &test, &labels)?;
    Ok(metrics)
}

// ---------------------------------------------------------------- pipeline

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    /// Simulate `objects` objects; the training split is drawn first.
    Simulate { classes: ClassesSpec, objects: usize },
    Files {
        hierarchy: PathBuf,
        mode: HierarchyMode,
        scores: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub source: DataSource,
    /// Train, validation and test fractions.
    pub splits: [f64; 3],
    pub variant: Statistic,
    pub algorithm: Algorithm,
    pub objectives: Vec<CutoffObjective>,
    pub kappas: Vec<f64>,
    pub fit: FitOptions,
    pub budget: u128,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source: DataSource::Simulate {
                classes: ClassesSpec::Benchmark,
                objects: BENCHMARK_TRAIN + BENCHMARK_TEST,
            },
            splits: [5.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0],
            variant: Statistic::Full,
            algorithm: Algorithm::HierrankFast,
            objectives: vec![
                CutoffObjective::TargetFdr { alpha: 0.05 },
                CutoffObjective::TargetFdr { alpha: 0.10 },
                CutoffObjective::MaxF1,
            ],
            kappas: DEFAULT_KAPPAS.to_vec(),
            fit: FitOptions::default(),
            budget: DEFAULT_REDUCTION_BUDGET,
            seed: 0,
            out: PathBuf::from("pipeline"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let s = self.splits;
        if s.iter().any(|&f| !f.is_finite() || f <= 0.0) || (s.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split fractions must be positive and sum to 1, got {s:?}")));
        }
        Ok(())
    }

    /// Split sizes for `n` objects; validation and test get at least one each.
    pub fn split_sizes(&self, n: usize) -> Result<[usize; 3]> {
        let train = (self.splits[0] * n as f64).round() as usize;
        let val = (self.splits[1] * n as f64).round() as usize;
        if train == 0 || val == 0 || train + val >= n {
            return Err(Error::TooFewObjects { needed: 3, actual: n });
        }
        Ok([train, val, n - train - val])
    }
}

/// In-memory results of a pipeline run.
pub struct PipelineRun {
    pub hierarchy: ClassHierarchy,
    pub generator: Option<GenerativeModel>,
    pub train: EventTable,
    pub validation: EventTable,
    pub test: EventTable,
    pub model: Option<FittedModel>,
    pub validation_rank: RankOutput,
    pub test_rank: RankOutput,
    pub metrics: Metrics,
}

fn stack(a: &EventTable, b: &EventTable) -> Result<EventTable> {
    let axis = ndarray::Axis(0);
    let scores = ndarray::concatenate(axis, &[a.scores.view(), b.scores.view()]).map_err(|e| Error::Parse(e.to_string()))?;
    let labels = match (&a.labels, &b.labels) {
        (Some(x), Some(y)) => Some(ndarray::concatenate(axis, &[x.view(), y.view()]).map_err(|e| Error::Parse(e.to_string()))?),
        _ => None,
    };
    EventTable::new(scores, labels)
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    let (hierarchy, generator, pooled, sizes) = match &config.source {
        DataSource::Simulate { classes, objects } => {
            let sizes = config.split_sizes(*objects)?;
            let model = classes.model(config.seed, sizes[0])?;
            let data = simulate(model, config.seed, sizes[0], objects - sizes[0])?;
            let pooled = stack(&data.train, &data.test)?;
            (data.model.hierarchy.clone(), Some(data.model), pooled, sizes)
        }
        DataSource::Files { hierarchy, mode, scores, labels } => {
            let h = ClassHierarchy::from_csv_path(hierarchy, *mode)?;
            let t = load_table(&h, scores, Some(labels))?;
            let mut idx: Vec<usize> = (0..t.objects()).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 100));
            idx.shuffle(&mut rng);
            let sizes = config.split_sizes(t.objects())?;
            (h, None, t.select_rows(&idx), sizes)
        }
    };
    let rows = |a: usize, b: usize| pooled.select_rows(&(a..b).collect::<Vec<_>>());
    let train = rows(0, sizes[0]);
    let validation = rows(sizes[0], sizes[0] + sizes[1]);
    let test = rows(sizes[0] + sizes[1], pooled.objects());

    let model = if config.variant == Statistic::Raw {
        None
    } else {
        Some(fit_models(&train, &hierarchy, &config.fit)?)
    };
    let rank = |t: &EventTable| rank_table(&hierarchy, model.as_ref(), &t.scores, config.variant, config.algorithm, config.budget);
    let validation_rank = rank(&validation)?;
    let test_rank = rank(&test)?;
    let metrics = evaluate(
        &hierarchy,
        &test_rank.ranking,
        &test.flat_labels()?,
        &config.kappas,
        &config.objectives,
        Some((&validation_rank.ranking, &validation.flat_labels()?)),
    )?;
    Ok(PipelineRun {
        hierarchy,
        generator,
        train,
        validation,
        test,
        model,
        validation_rank,
        test_rank,
        metrics,
    })
}

/// Runs the pipeline and writes every intermediate under `config.out`.
pub fn cmd_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    let run = run_pipeline(config)?;
    let out = &config.out;
    let h = &run.hierarchy;
    let mut files = vec!["hierarchy.csv".to_string()];
    io::write_hierarchy(&out.join("hierarchy.csv"), h)?;
    if let Some(g) = &run.generator {
        io::write_json(&out.join("generator.json"), g)?;
        files.push("generator.json".into());
    }
    for (name, t) in [("train", &run.train), ("validation", &run.validation), ("test", &run.test)] {
        write_table(&out.join("data").join(name), h, t)?;
        files.push(format!("data/{name}/scores.csv"));
        files.push(format!("data/{name}/labels.csv"));
    }
    if let Some(m) = &run.model {
        io::write_atomic(&out.join("fit/model.json"), |w| Ok(serde_json::to_writer(w, m)?))?;
        files.push("fit/model.json".into());
    }
    for (name, t, r) in [("validation", &run.validation, &run.validation_rank), ("test", &run.test, &run.test_rank)] {
        let dir = out.join(name);
        io::write_matrix(&dir.join("values.csv"), h.names(), &r.values)?;
        write_rank_output(&dir, h, &t.scores, r)?;
        files.extend(["values.csv", "ranking.csv", "summary.json"].map(|f| format!("{name}/{f}")));
    }
    write_curves(&out.join("test"), &run.test_rank.ranking, &run.test.flat_labels()?)?;
    io::write_json(&out.join("metrics.json"), &run.metrics)?;
    files.extend(["test/hit_curve.csv", "test/pr_curve.csv", "metrics.json"].map(String::from));
    write_manifest(out, "pipeline", Some(config.seed), config, files)?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(out: &Path) -> PipelineConfig {
        PipelineConfig {
            source: DataSource::Simulate {
                classes: ClassesSpec::Chain(3),
                objects: 200,
            },
            seed: 9,
            out: out.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn parsing() {
        assert_eq!("chain:3".parse::<ClassesSpec>().unwrap(), ClassesSpec::Chain(3));
        assert_eq!("benchmark".parse::<ClassesSpec>().unwrap(), ClassesSpec::Benchmark);
        assert!("chain:0".parse::<ClassesSpec>().is_err());
        assert_eq!("hierrank-fast".parse::<Algorithm>().unwrap(), Algorithm::HierrankFast);
        assert_eq!("raw".parse::<Statistic>().unwrap(), Statistic::Raw);
    }

    #[test]
    fn split_validation() {
        let mut c = PipelineConfig::default();
        assert_eq!(c.split_sizes(60_000).unwrap(), [50_000, 5_000, 5_000]);
        c.splits = [0.5, 0.5, 0.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn toy_pipeline_runs_and_checks_hold() {
        let dir = tempfile::tempdir().unwrap();
        let run = cmd_pipeline(&toy(dir.path())).unwrap();
        assert!(run.test_rank.summary.topological);
        assert!(run.metrics.cutoffs.iter().all(|c| c.consistent));
        assert_eq!(run.train.objects() + run.validation.objects() + run.test.objects(), 200);
        for f in ["manifest.json", "metrics.json", "fit/model.json", "test/ranking.csv", "data/train/labels.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }

    #[test]
    fn simulate_is_byte_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for d in [&a, &b] {
            let args = SimulateArgs {
                out: d.path().to_path_buf(),
                seed: 4,
                classes: ClassesSpec::Chain(3),
                n_train: 300,
                n_test: 100,
            };
            cmd_simulate(&args).unwrap();
        }
        for f in ["train/scores.csv", "test/labels.csv", "model.json"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
        let header = std::fs::read_to_string(a.path().join("train/scores.csv")).unwrap();
        assert_eq!(header.lines().next().unwrap(), "c1,c2,c3");
    }
}
