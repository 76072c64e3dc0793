//! Class hierarchy (tree, forest, or DAG), event indexing and rankings.
//!
//! Node ids are dense and 0-based, assigned in order of first appearance when a
//! hierarchy is loaded from named edge rows. Events are `(object, class)` pairs
//! flattened as `flat = object * K + class`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyMode {
    Tree,
    Dag,
}

impl std::str::FromStr for HierarchyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tree" | "forest" => Ok(HierarchyMode::Tree),
            "dag" => Ok(HierarchyMode::Dag),
            other => Err(Error::Parse(format!("unknown hierarchy mode `{other}`"))),
        }
    }
}

/// Serialized form: node names plus named edges.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct HierarchyRepr {
    mode: HierarchyMode,
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

/// An immutable class hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HierarchyRepr", into = "HierarchyRepr")]
pub struct ClassHierarchy {
    mode: HierarchyMode,
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl TryFrom<HierarchyRepr> for ClassHierarchy {
    type Error = Error;

    fn try_from(repr: HierarchyRepr) -> Result<Self> {
        let rows = repr
            .nodes
            .iter()
            .map(|n| (None, n.as_str()))
            .chain(repr.edges.iter().map(|(p, c)| (Some(p.as_str()), c.as_str())));
        ClassHierarchy::from_rows(rows, repr.mode)
    }
}

impl From<ClassHierarchy> for HierarchyRepr {
    fn from(h: ClassHierarchy) -> Self {
        HierarchyRepr {
            mode: h.mode,
            edges: h.edges().map(|(p, c)| (h.names[p].clone(), h.names[c].clone())).collect(),
            nodes: h.names,
        }
    }
}

impl ClassHierarchy {
    /// Builds a hierarchy from `(parent, child)` rows. A row with `None` as the
    /// parent only declares the child node (isolated node or root).
    pub fn from_rows<'a, I>(rows: I, mode: HierarchyMode) -> Result<Self>
    where
        I: IntoIterator<Item = (Option<&'a str>, &'a str)>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut names: Vec<String> = Vec::new();
        let mut intern = |name: &str, row: usize| -> Result<usize> {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::EmptyName(row));
            }
            if let Some(&id) = index.get(name) {
                return Ok(id);
            }
            let id = names.len();
            names.push(name.to_string());
            index.insert(name.to_string(), id);
            Ok(id)
        };
        let mut edges = Vec::new();
        for (row, (parent, child)) in rows.into_iter().enumerate() {
            match parent {
                Some(p) if !p.trim().is_empty() => {
                    let p = intern(p, row)?;
                    let c = intern(child, row)?;
                    edges.push((p, c));
                }
                _ => {
                    intern(child, row)?;
                }
            }
        }
        let mut parents = vec![Vec::new(); names.len()];
        let mut seen = HashSet::new();
        for &(p, c) in &edges {
            if !seen.insert((p, c)) {
                return Err(Error::DuplicateEdge(names[p].clone(), names[c].clone()));
            }
            parents[c].push(p);
        }
        Self::from_parents(names, parents, mode)
    }

    /// Convenience wrapper over [`ClassHierarchy::from_rows`] for plain edges.
    pub fn from_edges(edges: &[(&str, &str)], mode: HierarchyMode) -> Result<Self> {
        Self::from_rows(edges.iter().map(|&(p, c)| (Some(p), c)), mode)
    }

    /// Builds a hierarchy from per-node parent lists.
    pub fn from_parents(
        names: Vec<String>,
        parents: Vec<Vec<usize>>,
        mode: HierarchyMode,
    ) -> Result<Self> {
        let k = names.len();
        if parents.len() != k {
            return Err(Error::SizeMismatch {
                expected: k,
                actual: parents.len(),
            });
        }
        let mut children = vec![Vec::new(); k];
        for (c, ps) in parents.iter().enumerate() {
            let mut uniq = HashSet::new();
            for &p in ps {
                if p >= k {
                    return Err(Error::InvalidNode { id: p, count: k });
                }
                if !uniq.insert(p) {
                    return Err(Error::DuplicateEdge(names[p].clone(), names[c].clone()));
                }
                children[p].push(c);
            }
            if mode == HierarchyMode::Tree && ps.len() > 1 {
                return Err(Error::MultipleParents(names[c].clone()));
            }
        }
        let topo = topological_order(&parents, &children)
            .map_err(|node| Error::Cycle(names[node].clone()))?;
        Ok(ClassHierarchy {
            mode,
            names,
            parents,
            children,
            topo,
        })
    }

    /// Reads the `parent,child` CSV format. An empty `parent` cell declares an
    /// isolated or root node.
    pub fn from_csv_reader<R: Read>(reader: R, mode: HierarchyMode) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (pi, ci) = match (col("parent"), col("child")) {
            (Some(p), Some(c)) => (p, c),
            _ => return Err(Error::Parse("hierarchy CSV needs `parent,child` header".into())),
        };
        let mut rows: Vec<(Option<String>, String)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parent = rec.get(pi).unwrap_or("").to_string();
            let child = rec.get(ci).unwrap_or("").to_string();
            // Single-column form: `name` alone declares a node.
            if child.is_empty() && !parent.is_empty() {
                rows.push((None, parent));
            } else {
                rows.push(((!parent.is_empty()).then_some(parent), child));
            }
        }
        Self::from_rows(rows.iter().map(|(p, c)| (p.as_deref(), c.as_str())), mode)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, mode: HierarchyMode) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, mode)
    }

    /// Writes the `parent,child` CSV form; isolated roots get an empty parent.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["parent", "child"])?;
        for k in 0..self.node_count() {
            if self.parents[k].is_empty() {
                wtr.write_record(["", self.names[k].as_str()])?;
            }
        }
        for (p, c) in self.edges() {
            wtr.write_record([self.names[p].as_str(), self.names[c].as_str()])?;
        }
        wtr.flush().map_err(|e| Error::io("<hierarchy csv>", e))?;
        Ok(())
    }

    pub fn mode(&self) -> HierarchyMode {
        self.mode
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, k: usize) -> &str {
        &self.names[k]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, k: usize) -> &[usize] {
        &self.parents[k]
    }

    pub fn children(&self, k: usize) -> &[usize] {
        &self.children[k]
    }

    pub fn parent_lists(&self) -> &[Vec<usize>] {
        &self.parents
    }

    /// Node ids ordered so that every parent precedes its children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&k| self.parents[k].is_empty())
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
    }

    pub fn is_tree(&self) -> bool {
        self.mode == HierarchyMode::Tree
    }

    pub(crate) fn require_tree(&self) -> Result<()> {
        if self.is_tree() {
            Ok(())
        } else {
            Err(Error::NotATree)
        }
    }

    fn check(&self, k: usize) -> Result<()> {
        if k < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode {
                id: k,
                count: self.node_count(),
            })
        }
    }

    /// Transitive closure of the parent relation, excluding `k`.
    pub fn ancestors(&self, k: usize) -> Result<BTreeSet<usize>> {
        self.check(k)?;
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = self.parents[k].clone();
        while let Some(p) = stack.pop() {
            if out.insert(p) {
                stack.extend_from_slice(&self.parents[p]);
            }
        }
        Ok(out)
    }

    pub fn descendants(&self, k: usize) -> Result<BTreeSet<usize>> {
        self.check(k)?;
        let mut out = BTreeSet::new();
        let mut stack: Vec<usize> = self.children[k].clone();
        while let Some(c) = stack.pop() {
            if out.insert(c) {
                stack.extend_from_slice(&self.children[c]);
            }
        }
        Ok(out)
    }

    /// Immediate neighbors: parents and children.
    pub fn neighborhood(&self, k: usize) -> Result<BTreeSet<usize>> {
        self.check(k)?;
        Ok(self.parents[k]
            .iter()
            .chain(self.children[k].iter())
            .copied()
            .collect())
    }

    /// Depth of each node (longest path from a root).
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.node_count()];
        for &k in &self.topo {
            depth[k] = self.parents[k].iter().map(|&p| depth[p] + 1).max().unwrap_or(0);
        }
        depth
    }
}

/// Kahn's algorithm with smallest-id-first tie-breaking. Returns a node on a
/// cycle on failure.
fn topological_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>, usize> {
    let k = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..k)
        .filter(|&v| indeg[v] == 0)
        .map(std::cmp::Reverse)
        .collect();
    let mut order = Vec::with_capacity(k);
    while let Some(std::cmp::Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(std::cmp::Reverse(c));
            }
        }
    }
    if order.len() == k {
        Ok(order)
    } else {
        Err((0..k).find(|&v| indeg[v] > 0).unwrap_or(0))
    }
}

/// One classification event: object `m`, class `k`, flat index `m * K + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventIndex {
    pub object: usize,
    pub class: usize,
    pub flat: usize,
}

impl EventIndex {
    pub fn new(object: usize, class: usize, num_classes: usize) -> Self {
        EventIndex {
            object,
            class,
            flat: object * num_classes + class,
        }
    }

    pub fn from_flat(flat: usize, num_classes: usize) -> Self {
        EventIndex {
            object: flat / num_classes,
            class: flat % num_classes,
            flat,
        }
    }
}

/// An ordering of events, best first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    pub order: Vec<EventIndex>,
}

impl Ranking {
    pub fn from_flat(order: impl IntoIterator<Item = usize>, num_classes: usize) -> Self {
        Ranking {
            order: order
                .into_iter()
                .map(|i| EventIndex::from_flat(i, num_classes))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn flat(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().map(|e| e.flat)
    }

    /// Position (0-based) of each flat event, or `None` if not a permutation of `0..n`.
    pub fn positions(&self) -> Option<Vec<usize>> {
        let n = self.order.len();
        let mut pos = vec![usize::MAX; n];
        for (i, e) in self.order.iter().enumerate() {
            if e.flat >= n || pos[e.flat] != usize::MAX {
                return None;
            }
            pos[e.flat] = i;
        }
        Some(pos)
    }

    pub fn is_permutation(&self) -> bool {
        self.positions().is_some()
    }
}

/// True iff, for every object, each ancestor event precedes its descendant
/// events. Events of different objects are unconstrained.
pub fn is_topological(r: &Ranking, h: &ClassHierarchy, objects: usize) -> Result<bool> {
    let k = h.node_count();
    let n = objects * k;
    if r.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: r.len(),
        });
    }
    let pos = r.positions().ok_or(Error::NotAPermutation)?;
    // Checking parent edges suffices: the ancestor relation is their closure.
    for m in 0..objects {
        for (p, c) in h.edges() {
            if pos[m * k + p] > pos[m * k + c] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Node sets driving the bottom-up merge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PSets {
    /// Nodes on single-child branches.
    pub p1: BTreeSet<usize>,
    /// Nodes with at least two children, all of them in `p1`.
    pub p2: BTreeSet<usize>,
    /// Single-child ancestors directly above a `p2` node.
    pub p3: BTreeSet<usize>,
}

pub fn classify_p_sets(h: &ClassHierarchy) -> Result<PSets> {
    h.require_tree()?;
    let k = h.node_count();
    // single[v]: v and all of its descendants have at most one child.
    let mut single = vec![false; k];
    for &v in h.topological_order().iter().rev() {
        single[v] = match h.children(v) {
            [] => true,
            [c] => single[*c],
            _ => false,
        };
    }
    let mut sets = PSets::default();
    for v in 0..k {
        if single[v] {
            sets.p1.insert(v);
        } else if h.children(v).len() >= 2 && h.children(v).iter().all(|&c| single[c]) {
            sets.p2.insert(v);
        }
    }
    for &v in &sets.p2 {
        let mut cur = v;
        while let Some(&p) = h.parents(cur).first() {
            if h.children(p).len() != 1 {
                break;
            }
            sets.p3.insert(p);
            cur = p;
        }
    }
    Ok(sets)
}
