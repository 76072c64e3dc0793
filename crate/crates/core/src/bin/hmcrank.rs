use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use hmcrank::evaluator::CutoffObjective;
use hmcrank::hierarchy::HierarchyMode;
use hmcrank::pipeline::{
    cmd_evaluate, cmd_fit, cmd_pipeline, cmd_rank, cmd_simulate, Algorithm, ClassesSpec, DataSource, EvaluateArgs,
    FitArgs, FitOptions, PipelineConfig, RankArgs, SimulateArgs, Statistic, DEFAULT_KAPPAS,
};
use hmcrank::ranker::DEFAULT_REDUCTION_BUDGET;
use hmcrank::Error;

#[derive(Parser)]
#[command(name = "hmcrank", version, about = "Hierarchy-consistent ranking for multi-label classifiers")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct HierarchyArgs {
    /// Hierarchy CSV with `parent,child` rows.
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long, default_value = "tree")]
    mode: HierarchyMode,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic data set.
    Simulate {
        /// `benchmark` or `chain:<n>`.
        #[arg(long, default_value = "benchmark")]
        classes: ClassesSpec,
        #[arg(long, default_value_t = 50_000)]
        n_train: usize,
        #[arg(long, default_value_t = 10_000)]
        n_test: usize,
    },
    /// Fit LPR densities and probability tables on training data.
    Fit {
        #[command(flatten)]
        hierarchy: HierarchyArgs,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long)]
        clip_floor: Option<f64>,
        /// Fit classes without positives as constant LPR instead of failing.
        #[arg(long)]
        allow_degenerate: bool,
    },
    /// Estimate mLPR and rank all events.
    Rank {
        #[command(flatten)]
        hierarchy: HierarchyArgs,
        #[arg(long)]
        scores: PathBuf,
        /// Model JSON from `fit`; not needed for `--variant raw`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// raw, indpt, nbh, full or gaussian.
        #[arg(long, default_value = "full")]
        variant: Statistic,
        /// naive, hierrank, hierrank-fast, cssa, dag-and or dag-or.
        #[arg(long, default_value = "hierrank-fast")]
        algo: Algorithm,
        #[arg(long, default_value_t = DEFAULT_REDUCTION_BUDGET)]
        budget: u128,
    },
    /// Score a ranking against labels.
    Evaluate {
        #[command(flatten)]
        hierarchy: HierarchyArgs,
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KAPPAS)]
        kappa: Vec<f64>,
        /// `fdr:<alpha>` or `max-f1`; repeatable.
        #[arg(long)]
        cutoff: Vec<CutoffObjective>,
        #[arg(long)]
        validation_ranking: Option<PathBuf>,
        #[arg(long)]
        validation_labels: Option<PathBuf>,
    },
    /// Split, fit, estimate, rank, choose cutoffs and evaluate in one go.
    Pipeline {
        /// Simulate this hierarchy (`benchmark` or `chain:<n>`) unless input files are given.
        #[arg(long, default_value = "benchmark")]
        classes: ClassesSpec,
        #[arg(long, default_value_t = 60_000)]
        objects: usize,
        #[arg(long, requires_all = ["scores", "labels"])]
        hierarchy: Option<PathBuf>,
        #[arg(long, default_value = "tree")]
        mode: HierarchyMode,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Train, validation and test fractions.
        #[arg(long, value_delimiter = ',')]
        splits: Option<Vec<f64>>,
        #[arg(long, default_value = "full")]
        variant: Statistic,
        #[arg(long, default_value = "hierrank-fast")]
        algo: Algorithm,
        #[arg(long)]
        cutoff: Vec<CutoffObjective>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KAPPAS)]
        kappa: Vec<f64>,
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_REDUCTION_BUDGET)]
        budget: u128,
    },
}

fn run(cli: Cli) -> hmcrank::Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let out = cli.out;
    match cli.command {
        Command::Simulate { classes, n_train, n_test } => {
            cmd_simulate(&SimulateArgs {
                out,
                seed: cli.seed,
                classes,
                n_train,
                n_test,
            })?;
        }
        Command::Fit {
            hierarchy,
            scores,
            labels,
            bandwidth,
            clip_floor,
            allow_degenerate,
        } => {
            cmd_fit(&FitArgs {
                hierarchy: hierarchy.hierarchy,
                mode: hierarchy.mode,
                scores,
                labels,
                options: FitOptions {
                    bandwidth,
                    allow_degenerate,
                    clip_floor,
                },
                out,
            })?;
        }
        Command::Rank {
            hierarchy,
            scores,
            model,
            variant,
            algo,
            budget,
        } => {
            let r = cmd_rank(&RankArgs {
                hierarchy: hierarchy.hierarchy,
                mode: hierarchy.mode,
                scores,
                model,
                variant,
                algorithm: algo,
                budget,
                out,
            })?;
            println!("{}", serde_json::to_string(&r.summary)?);
        }
        Command::Evaluate {
            hierarchy,
            ranking,
            labels,
            kappa,
            cutoff,
            validation_ranking,
            validation_labels,
        } => {
            let m = cmd_evaluate(&EvaluateArgs {
                hierarchy: hierarchy.hierarchy,
                mode: hierarchy.mode,
                ranking,
                labels,
                kappas: kappa,
                cutoffs: cutoff,
                validation_ranking,
                validation_labels,
                out,
            })?;
            println!("{}", serde_json::to_string(&m)?);
        }
        Command::Pipeline {
            classes,
            objects,
            hierarchy,
            mode,
            scores,
            labels,
            splits,
            variant,
            algo,
            cutoff,
            kappa,
            bandwidth,
            budget,
        } => {
            let source = match (hierarchy, scores, labels) {
                (Some(hierarchy), Some(scores), Some(labels)) => DataSource::Files {
                    hierarchy,
                    mode,
                    scores,
                    labels,
                },
                (None, None, None) => DataSource::Simulate { classes, objects },
                _ => return Err(Error::InvalidArgument("--hierarchy, --scores and --labels go together".into())),
            };
            let mut config = PipelineConfig {
                source,
                variant,
                algorithm: algo,
                kappas: kappa,
                budget,
                seed: cli.seed,
                out,
                ..Default::default()
            };
            config.fit.bandwidth = bandwidth;
            if let Some(s) = splits {
                config.splits = s
                    .try_into()
                    .map_err(|s: Vec<f64>| Error::InvalidArgument(format!("--splits needs 3 fractions, got {}", s.len())))?;
            }
            if !cutoff.is_empty() {
                config.objectives = cutoff;
            }
            let run = cmd_pipeline(&config)?;
            println!("{}", serde_json::to_string(&run.metrics)?);
        }
    }
    Ok(())
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let msg = serde_json::json!({ "error": kind, "message": message.trim_end() });
    eprintln!("{msg}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", &e.to_string()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
