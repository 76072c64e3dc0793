//! Merging chains by their best-mean prefixes, then ranking a small tree.

use hmcrank::hierarchy::{ClassHierarchy, HierarchyMode};
use hmcrank::ranker::{breaking_points, catch_empirical, chain_merge, cssa_rank, hier_rank_tree, ScoredForest};

fn main() -> hmcrank::Result<()> {
    // Two chains G -> H and I -> J.
    let chains = vec![vec![0.8, 0.1], vec![0.3, 0.9]];
    let labels = [["G", "H"], ["I", "J"]];
    let merged: Vec<&str> = chain_merge(&chains).into_iter().map(|(c, i)| labels[c][i]).collect();
    println!("chain merge: {}", merged.join(" -> "));

    // Blocks of a single chain: maximal prefixes with non-increasing means.
    for (start, len, mean) in breaking_points(&[0.3, 0.9, 0.2, 0.5, 0.1]) {
        println!("  block at {start} (len {len}) mean {mean:.3}");
    }

    // B <- A -> C with S_A = 3, S_B = 3.6, S_C = 4.
    let h = ClassHierarchy::from_edges(&[("A", "B"), ("A", "C")], HierarchyMode::Tree)?;
    let f = ScoredForest::new(&h, vec![3.0, 3.6, 4.0])?;
    for (name, r) in [("hierrank", hier_rank_tree(&f)?), ("cssa", cssa_rank(&f)?)] {
        let order: Vec<&str> = r.order.iter().map(|e| h.name(e.class)).collect();
        println!("{name:>8}: {} (CATCH {:.1})", order.join(" -> "), catch_empirical(&r, f.scores())?);
    }
    Ok(())
}
