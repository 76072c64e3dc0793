//! Loads the bundled 25-class hierarchy and queries its structure.

use hmcrank::hierarchy::{classify_p_sets, ClassHierarchy, HierarchyMode};

fn main() -> hmcrank::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_hierarchy.csv");
    let h = ClassHierarchy::from_csv_path(path, HierarchyMode::Tree)?;
    let names = |set: &std::collections::BTreeSet<usize>| set.iter().map(|&v| h.name(v)).collect::<Vec<_>>().join(" ");

    println!("{} classes, roots: {}", h.node_count(), h.roots().map(|r| h.name(r)).collect::<Vec<_>>().join(" "));
    let depths = h.depths();
    println!("max depth {}", depths.iter().max().unwrap());

    for class in ["A1", "B5", "D3"] {
        let k = h.id(class).expect("class exists");
        println!("{class}:");
        println!("  ancestors    {}", names(&h.ancestors(k)?));
        println!("  descendants  {}", names(&h.descendants(k)?));
        println!("  neighborhood {}", names(&h.neighborhood(k)?));
    }

    let p = classify_p_sets(&h)?;
    println!("single-child branch nodes: {}", names(&p.p1));
    println!("junction nodes:            {}", names(&p.p2));
    println!("above junctions:           {}", names(&p.p3));
    Ok(())
}
