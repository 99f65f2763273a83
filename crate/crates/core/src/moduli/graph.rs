//! Witness graphs over enumerated points and their connected components.

use std::fmt::Write as _;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::Serialize;

use super::oracle::mod_adjacent;
use super::OracleBounds;
use crate::certify::{EdgeWitness, StepRecord};
use crate::error::Result;
use crate::lattice::LatticePoint;
use crate::phimod::{InstanceParams, MatrixTupleRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSource {
    Oracle,
    Pathfinder,
}

#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub source: EdgeSource,
    pub witness: EdgeWitness,
}

#[derive(Debug, Clone)]
pub struct ModuliGraph {
    pub points: Vec<LatticePoint>,
    pub ordinary: Vec<bool>,
    pub edges: Vec<GraphEdge>,
    pub components: Vec<Vec<usize>>,
}

/// Connected components of an undirected graph on `ids.len()` vertices.
/// Each component lists its vertices by ascending ID; components are ordered
/// by their smallest ID.
pub fn mod_components(ids: &[&str], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::<usize>::new(ids.len());
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let labels = uf.into_labeling();
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (v, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(v);
    }
    let mut comps: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_by(|&x, &y| ids[x].cmp(ids[y]));
            g
        })
        .collect();
    comps.sort_by(|x, y| ids[x[0]].cmp(ids[y[0]]));
    comps
}

impl ModuliGraph {
    pub fn new(points: Vec<LatticePoint>, ordinary: Vec<bool>, edges: Vec<GraphEdge>) -> ModuliGraph {
        let ids: Vec<&str> = points.iter().map(|p| p.id()).collect();
        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.a, e.b)).collect();
        let components = mod_components(&ids, &pairs);
        ModuliGraph { points, ordinary, edges, components }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.id() == id)
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.components.iter().position(|c| c.contains(&v)).expect("every vertex has a component")
    }

    /// Indices of the non-ordinary points.
    pub fn non_ordinary(&self) -> Vec<usize> {
        (0..self.points.len()).filter(|&i| !self.ordinary[i]).collect()
    }

    /// DOT rendering: non-ordinary points are grouped in one cluster.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph moduli {\n  node [shape=box, fontname=monospace];\n");
        s.push_str("  subgraph cluster_non_ordinary {\n    label=\"non-ordinary\";\n");
        for i in self.non_ordinary() {
            let _ = writeln!(s, "    \"{}\" [label=\"{}\\nnon-ordinary\"];", self.points[i].id(), self.points[i].id());
        }
        s.push_str("  }\n");
        for (i, p) in self.points.iter().enumerate() {
            if self.ordinary[i] {
                let _ = writeln!(s, "  \"{}\" [label=\"{}\\nordinary\", style=dashed];", p.id(), p.id());
            }
        }
        for e in &self.edges {
            let style = match e.source {
                EdgeSource::Oracle => "dotted",
                EdgeSource::Pathfinder => "solid",
            };
            let _ = writeln!(s, "  \"{}\" -- \"{}\" [style={style}];", self.points[e.a].id(), self.points[e.b].id());
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct PointOut {
            id: String,
            ordinary: bool,
            exponents: Vec<(i64, i64)>,
            basis: MatrixTupleRecord,
        }
        #[derive(Serialize)]
        struct EdgeOut {
            a: String,
            b: String,
            source: EdgeSource,
            witness: StepRecord,
        }
        #[derive(Serialize)]
        struct Doc {
            points: Vec<PointOut>,
            edges: Vec<EdgeOut>,
            components: Vec<Vec<String>>,
        }
        let doc = Doc {
            points: self
                .points
                .iter()
                .zip(&self.ordinary)
                .map(|(p, &o)| PointOut {
                    id: p.id().to_string(),
                    ordinary: o,
                    exponents: p.exponents(),
                    basis: p.basis.to_record(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeOut {
                    a: self.points[e.a].id().to_string(),
                    b: self.points[e.b].id().to_string(),
                    source: e.source,
                    witness: e.witness.to_record(),
                })
                .collect(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|&i| self.points[i].id().to_string()).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }
}

/// Run the adjacency oracle on every unordered pair of distinct points.
pub fn oracle_edges(params: &InstanceParams, points: &[LatticePoint], bounds: &OracleBounds) -> Result<Vec<GraphEdge>> {
    let pairs: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|a| ((a + 1)..points.len()).map(move |b| (a, b))).collect();
    let found: Vec<Result<Option<GraphEdge>>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let found = match mod_adjacent(params, &points[a], &points[b], bounds)? {
                Some(w) => Some((a, b, w)),
                None => mod_adjacent(params, &points[b], &points[a], bounds)?.map(|w| (b, a, w)),
            };
            Ok(found.map(|(a, b, witness)| GraphEdge { a, b, source: EdgeSource::Oracle, witness }))
        })
        .collect();
    let mut edges = Vec::new();
    for f in found {
        if let Some(e) = f? {
            edges.push(e);
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_examples() {
        let ids = ["c", "a", "b", "d"];
        assert_eq!(mod_components(&ids, &[]), vec![vec![1], vec![2], vec![0], vec![3]]);
        assert_eq!(mod_components(&ids, &[(1, 2), (2, 0)]), vec![vec![1, 2, 0], vec![3]]);
    }
}
