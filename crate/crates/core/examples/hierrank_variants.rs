//! Compares the ranking algorithms on a random forest: CATCH and run time.

use std::time::Instant;

use hmcrank::hierarchy::{is_topological, ClassHierarchy, HierarchyMode};
use hmcrank::ranker::{catch_empirical, cssa_rank, hier_rank_fast, hier_rank_tree, naive_sort, ScoredForest};
use rand::{Rng, SeedableRng};

fn main() -> hmcrank::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let k = 300;
    let names = (0..k).map(|i| format!("c{i}")).collect();
    let parents = (0..k).map(|i| if i == 0 { vec![] } else { vec![rng.random_range(0..i)] }).collect();
    let h = ClassHierarchy::from_parents(names, parents, HierarchyMode::Tree)?;
    let m = 2_000;
    let scores: Vec<f64> = (0..k * m).map(|_| rng.random::<f64>()).collect();
    let f = ScoredForest::new(&h, scores)?;
    println!("{} events over {m} objects", f.n_events());

    let algos: [(&str, fn(&ScoredForest) -> hmcrank::Result<hmcrank::Ranking>); 4] = [
        ("naive", |f| Ok(naive_sort(f))),
        ("hierrank", hier_rank_tree),
        ("hierrank-fast", hier_rank_fast),
        ("cssa", cssa_rank),
    ];
    for (name, algo) in algos {
        let t = Instant::now();
        let r = algo(&f)?;
        let dt = t.elapsed();
        println!(
            "{name:>14}: CATCH {:.6e}  topological {}  {:.1} ms",
            catch_empirical(&r, f.scores())?,
            is_topological(&r, &h, m)?,
            dt.as_secs_f64() * 1e3
        );
    }
    Ok(())
}
