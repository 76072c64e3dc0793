//! Fits the estimators on simulated data and compares every mLPR variant with
//! the exact posterior of the generating model.

use hmcrank::estimators::{default_clip_floor, fit_gaussian, fit_lpr, fit_prob_tables, mlpr_full, mlpr_indpt, mlpr_nbh, LprOptions};
use hmcrank::generator::{exact_mlpr, benchmark_model, sample_table, SimulationSeeds};

fn main() -> hmcrank::Result<()> {
    let seeds = SimulationSeeds::new(11);
    let model = benchmark_model(seeds.root)?;
    let h = &model.hierarchy;
    let train = sample_table(&model, 20_000, seeds.train_labels, seeds.train_scores)?;
    let test = sample_table(&model, 2_000, seeds.test_labels, seeds.test_scores)?;

    let lpr = fit_lpr(&train, h.names(), &LprOptions::default())?;
    let tables = fit_prob_tables(&train, h, default_clip_floor(train.objects()))?;
    let gaussian = fit_gaussian(&train, h)?;
    println!("bandwidth {:.4}, clip floor {:.2e}", lpr.bandwidth, tables.clip_floor);

    let exact = exact_mlpr(&model, &test.scores)?;
    let variants = [
        ("indpt", mlpr_indpt(&lpr, &test.scores)?),
        ("nbh", mlpr_nbh(&lpr, &tables, h, &test.scores)?),
        ("full", mlpr_full(&lpr, &tables, h, &test.scores)?),
        ("gaussian", gaussian.mlpr(h, &test.scores)?),
    ];
    for (name, est) in variants {
        let err: f64 = est.values.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>() / exact.len() as f64;
        println!("{name:>9}: mean |estimate - exact| = {err:.4}");
    }
    Ok(())
}
