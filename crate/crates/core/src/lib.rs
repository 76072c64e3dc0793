//! Hierarchy-consistent ranking and decisions for hierarchical multi-label
//! classification.
//!
//! Per-class classifier scores are turned into per-event posteriors (mLPR), ranked
//! by HierRank so that every ancestor event of an object precedes its descendants
//! while maximizing the expected area under the hit curve (CATCH), and finally
//! thresholded with a validation-selected cutoff.
//!
//! ```
//! use hmcrank::hierarchy::{ClassHierarchy, HierarchyMode, is_topological};
//! use hmcrank::ranker::{hier_rank_fast, ScoredForest};
//!
//! let h = ClassHierarchy::from_edges(&[("A", "B"), ("A", "C")], HierarchyMode::Tree).unwrap();
//! let forest = ScoredForest::new(&h, vec![3.0, 3.6, 4.0]).unwrap();
//! let r = hier_rank_fast(&forest).unwrap();
//! assert_eq!(r.flat().collect::<Vec<_>>(), vec![0, 2, 1]);
//! assert!(is_topological(&r, &h, 1).unwrap());
//! ```

pub mod error;
pub mod estimators;
pub mod evaluator;
pub mod generator;
pub mod hierarchy;
pub mod io;
pub mod pipeline;
pub mod ranker;

pub use error::{Error, Result};
pub use estimators::{LprModel, MlprEstimate, MlprVariant, ProbTables};
pub use evaluator::{CutoffDecision, CutoffObjective, HitCurve};
pub use generator::{EventTable, GenerativeModel};
pub use hierarchy::{ClassHierarchy, EventIndex, HierarchyMode, Ranking};
pub use ranker::{BlockChain, ScoredForest};
