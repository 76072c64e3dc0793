//! Ranking on a DAG under the AND constraint (all parents first) and the OR
//! constraint (at least one parent first).

use hmcrank::hierarchy::{is_topological, ClassHierarchy, HierarchyMode};
use hmcrank::ranker::{catch_empirical, hier_rank_dag, is_topological_or, DagConstraint, ScoredForest, DEFAULT_REDUCTION_BUDGET};

fn main() -> hmcrank::Result<()> {
    // Diamond: R -> A, R -> B, A -> D, B -> D, plus a lone class E.
    let h = ClassHierarchy::from_rows(
        [(None, "R"), (Some("R"), "A"), (Some("R"), "B"), (Some("A"), "D"), (Some("B"), "D"), (None, "E")],
        HierarchyMode::Dag,
    )?;
    let scores = vec![0.2, 0.1, 0.6, 0.9, 0.5];
    let f = ScoredForest::new(&h, scores.clone())?;
    for c in [DagConstraint::And, DagConstraint::Or] {
        let r = hier_rank_dag(&f, c, DEFAULT_REDUCTION_BUDGET)?;
        let order: Vec<&str> = r.order.iter().map(|e| h.name(e.class)).collect();
        println!(
            "{c:?}: {}  CATCH {:.2}  all-parents {}  some-parent {}",
            order.join(" "),
            catch_empirical(&r, &scores)?,
            is_topological(&r, &h, 1)?,
            is_topological_or(&r, &h, 1)?
        );
    }
    Ok(())
}
