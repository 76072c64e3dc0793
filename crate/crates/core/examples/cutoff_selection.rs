//! Picks cutoffs on a validation ranking and carries them to a test ranking.

use hmcrank::evaluator::{apply_cutoff, fdp_f1_at, select_cutoff, CutoffObjective};
use hmcrank::generator::{benchmark_model, sample_table, simulate};
use hmcrank::pipeline::{estimate, fit_models, rank_values, Algorithm, FitOptions, Statistic};

fn main() -> hmcrank::Result<()> {
    let data = simulate(benchmark_model(4)?, 4, 50_000, 5_000)?;
    let h = &data.model.hierarchy;
    let validation = sample_table(&data.model, 5_000, 901, 902)?;
    let fitted = fit_models(&data.train, h, &FitOptions::default())?;

    let rank = |t: &hmcrank::EventTable| -> hmcrank::Result<_> {
        let v = estimate(Some(&fitted), h, Statistic::Full, &t.scores)?;
        rank_values(h, &v, Algorithm::HierrankFast, 0)
    };
    let (rv, rt) = (rank(&validation)?, rank(&data.test)?);
    let (lv, lt) = (validation.flat_labels()?, data.test.flat_labels()?);

    for obj in [CutoffObjective::TargetFdr { alpha: 0.05 }, CutoffObjective::TargetFdr { alpha: 0.1 }, CutoffObjective::MaxF1] {
        let d = select_cutoff(&rv, &lv, obj)?;
        let positives = apply_cutoff(&rt, &d).iter().filter(|&&x| x).count();
        let (fdp, f1) = fdp_f1_at(&rt, &lt, d.scaled_cutoff(rt.len()))?;
        println!(
            "{obj}: validation cutoff {} -> {positives} test positives, FDP {:.1}%, F1 {:.1}%",
            d.cutoff_rank,
            100.0 * fdp,
            100.0 * f1
        );
    }
    Ok(())
}
