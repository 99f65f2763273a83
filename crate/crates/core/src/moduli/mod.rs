//! The finite set of moduli points over `F`, the bounded adjacency oracle,
//! and connected components of witness graphs.

mod enumerate;
mod graph;
pub mod linsolve;
mod oracle;

pub use enumerate::{mod_enumerate, tree_distance_bounds};
pub use graph::{mod_components, oracle_edges, EdgeSource, GraphEdge, ModuliGraph};
pub use oracle::{mod_adjacent, relative_position};

use serde::{Deserialize, Serialize};

use crate::lattice::LatticePoint;

/// Limits of the adjacency oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleBounds {
    /// Extra terms allowed when perturbing a candidate line (0 or 1).
    pub line_terms: usize,
    /// Highest exponent of a perturbation term.
    pub line_window: i64,
    /// Extra terms tried on top of the forced polar part of the scalar.
    pub gamma_terms: usize,
    /// Skip pairs whose summed relative distance exceeds this.
    pub max_pair_distance: Option<i64>,
    /// Nodes of the cycle search per pair.
    pub budget: u64,
}

impl Default for OracleBounds {
    fn default() -> Self {
        OracleBounds { line_terms: 0, line_window: 2, gamma_terms: 0, max_pair_distance: None, budget: 200_000 }
    }
}

/// Limits of enumeration and graph construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBounds {
    /// Candidate evaluations before the search stops.
    pub budget: u64,
    /// Optional cap on the elementary-divisor spread below the derived bound;
    /// a smaller cap makes the search a bounded one.
    pub max_tree_distance: Option<i64>,
    pub oracle: OracleBounds,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds { budget: 20_000_000, max_tree_distance: None, oracle: OracleBounds::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    /// The derived bounds are provably exhaustive and were fully searched.
    Complete,
    /// A user cap cut the search space.
    Bounded,
    /// The budget ran out; the points found so far are returned.
    BudgetExceeded,
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub points: Vec<LatticePoint>,
    pub status: SearchStatus,
    pub explored: u64,
    /// `v(det B_i)` on every point, `None` if the moduli is empty for
    /// determinant reasons.
    pub profile: Option<Vec<i64>>,
    pub tree_bounds: Vec<i64>,
}

impl Enumeration {
    fn empty(profile: Option<Vec<i64>>, status: SearchStatus) -> Enumeration {
        Enumeration { points: Vec::new(), status, explored: 0, profile, tree_bounds: Vec::new() }
    }
}
