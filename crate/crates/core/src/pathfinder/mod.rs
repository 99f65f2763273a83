//! Constructive connection of two non-ordinary moduli points.
//!
//! The reducible branch reduces the relative position of the endpoints by
//! U-moves until they differ by a strictly upper triangular nilpotent. The
//! irreducible branch takes both endpoints to a common balanced diagonal
//! reference lattice. For `n = 1` and raw ambients a breadth-first search
//! over oracle edges is used. Every emitted certificate is re-checked by the
//! independent verifier before it is returned.

mod bfs;
pub mod exponents;
mod irreducible;
mod reducible;

pub use exponents::{pf_balance_exponents, pf_reduce_a, Balancing, IrreducibleState, TMove};
pub use irreducible::{pf_shrink_head, Reference};
pub use reducible::{pf_reduce_s, EndpointMove, ReducibleState, Side};

use serde::Serialize;

use crate::certify::{
    cert_verify, cert_verify_edge, reverse_edge, CertVerdict, EdgeVerdict, EdgeWitness, PathCertificate, WitnessKind,
};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lattice::{lat_is_ordinary, lat_is_point, umove_basis, LatticePoint};
use crate::moduli::{EdgeSource, GraphEdge, SearchBounds};
use crate::phimod::AmbientKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ReduceS,
    Normalize,
    Balance,
    ShrinkHead,
    ReduceA,
}

impl Phase {
    /// Phases whose potential must strictly decrease.
    fn strict(self) -> bool {
        matches!(self, Phase::ReduceS | Phase::Balance | Phase::ReduceA)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub phase: Phase,
    /// Events of one phase invocation share a run number.
    pub run: usize,
    pub note: String,
    pub state: Vec<i64>,
    pub potential: i64,
}

/// Intermediate states and invariant monitors of one or more runs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PfTrace {
    pub events: Vec<TraceEvent>,
    /// `(max |s_i - t_i|, p + 1)` after each balancing.
    pub balanced: Vec<(i64, i64)>,
    /// Contradiction branches reached.
    pub contradictions: Vec<String>,
    runs: Vec<Phase>,
}

impl PfTrace {
    pub(crate) fn begin(&mut self, phase: Phase) -> usize {
        self.runs.push(phase);
        self.runs.len() - 1
    }
    pub(crate) fn record(&mut self, run: usize, note: &str, state: Vec<i64>, potential: i64) {
        let phase = self.runs[run];
        self.events.push(TraceEvent { phase, run, note: note.to_string(), state, potential });
    }
    pub(crate) fn balanced(&mut self, gap: i64, bound: i64) {
        self.balanced.push((gap, bound));
    }
    pub(crate) fn contradiction(&mut self, msg: &str) {
        self.contradictions.push(msg.to_string());
    }

    pub fn merge(&mut self, other: PfTrace) {
        let base = self.runs.len();
        self.runs.extend(other.runs);
        self.events.extend(other.events.into_iter().map(|mut e| {
            e.run += base;
            e
        }));
        self.balanced.extend(other.balanced);
        self.contradictions.extend(other.contradictions);
    }

    /// Potentials strictly decrease within every run of a strict phase.
    pub fn potentials_monotone(&self) -> bool {
        self.events.windows(2).all(|w| w[0].run != w[1].run || !w[0].phase.strict() || w[1].potential < w[0].potential)
            && self.events.windows(2).all(|w| w[0].run != w[1].run || w[1].potential <= w[0].potential)
    }
    pub fn balance_bound_holds(&self) -> bool {
        self.balanced.iter().all(|&(g, b)| g <= b)
    }
    pub fn monitors_hold(&self) -> bool {
        self.potentials_monotone() && self.balance_bound_holds() && self.contradictions.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Options of [`pf_connect_traced`].
#[derive(Debug, Clone, Default)]
pub struct PfOptions {
    /// Bounds for the breadth-first branch.
    pub bounds: Option<SearchBounds>,
    /// Pre-enumerated points for the breadth-first branch.
    pub points: Option<Vec<LatticePoint>>,
}

/// Reverse an edge, keeping U-move form when the opposite move realizes it.
pub(crate) fn reverse_step(inst: &Instance, w: &EdgeWitness) -> Result<EdgeWitness> {
    if let WitnessKind::UMove { slot, dir } = w.kind {
        if umove_basis(&w.target_basis, slot, dir.opposite())? == w.source_basis {
            return Ok(EdgeWitness {
                source: w.target.clone(),
                target: w.source.clone(),
                source_basis: w.target_basis.clone(),
                target_basis: w.source_basis.clone(),
                kind: WitnessKind::UMove { slot, dir: dir.opposite() },
            });
        }
    }
    reverse_edge(&inst.params, w)
}

pub(crate) fn checked(inst: &Instance, w: EdgeWitness) -> Result<EdgeWitness> {
    match cert_verify_edge(&inst.params, inst.tuple(), &w) {
        EdgeVerdict::Ok => Ok(w),
        EdgeVerdict::Fail { condition, reason } => Err(Error::InternalInvariantViolation(format!(
            "emitted edge {} -> {} fails condition {condition}: {reason}",
            w.source, w.target
        ))),
    }
}

pub(crate) fn umove_edge(
    from: &LatticePoint,
    to: &LatticePoint,
    slot: usize,
    dir: crate::certify::MoveDir,
) -> EdgeWitness {
    EdgeWitness {
        source: from.id().to_string(),
        target: to.id().to_string(),
        source_basis: from.basis.clone(),
        target_basis: to.basis.clone(),
        kind: WitnessKind::UMove { slot, dir },
    }
}

/// Join a path from `L1` and a path from `L2` that end at the same lattice.
pub(crate) fn join_paths(inst: &Instance, left: Vec<EdgeWitness>, right: Vec<EdgeWitness>) -> Result<Vec<EdgeWitness>> {
    let mut steps = left;
    for w in right.iter().rev() {
        steps.push(reverse_step(inst, w)?);
    }
    Ok(steps)
}

/// Connect two non-ordinary points of `inst` by a verified certificate.
pub fn pf_connect(inst: &Instance, l1: &LatticePoint, l2: &LatticePoint) -> Result<PathCertificate> {
    pf_connect_traced(inst, l1, l2, &PfOptions::default()).map(|(c, _)| c)
}

/// [`pf_connect`] with the trace of intermediate states and monitors.
pub fn pf_connect_traced(
    inst: &Instance,
    l1: &LatticePoint,
    l2: &LatticePoint,
    opts: &PfOptions,
) -> Result<(PathCertificate, PfTrace)> {
    let params = &inst.params;
    let a = inst.tuple();
    for (name, l) in [("first", l1), ("second", l2)] {
        if !lat_is_point(params, a, l)?.is_yes() {
            return Err(Error::InvalidInstance(format!("{name} endpoint {} is not a moduli point", l.id())));
        }
        if lat_is_ordinary(params, l)?.is_ordinary() {
            return Err(Error::OrdinaryInputDetected(format!("{name} endpoint {} is ordinary", l.id())));
        }
    }
    let mut trace = PfTrace::default();
    let steps = if l1.basis == l2.basis {
        Vec::new()
    } else if params.e < params.p() - 1 {
        return Err(Error::InternalInvariantViolation(format!(
            "distinct points {} and {} although e < p - 1",
            l1.id(),
            l2.id()
        )));
    } else if params.n == 1 || matches!(inst.ambient.kind, AmbientKind::Raw) {
        bfs::connect(inst, l1, l2, opts)?
    } else if matches!(inst.ambient.kind, AmbientKind::Reducible) {
        reducible::connect(inst, l1, l2, &mut trace)?
    } else {
        irreducible::connect(inst, l1, l2, &mut trace)?
    };
    let cert = PathCertificate {
        instance_hash: inst.hash.clone(),
        endpoints: [l1.id().to_string(), l2.id().to_string()],
        steps,
    };
    if let CertVerdict::Fail { step, reason } = cert_verify(params, a, &inst.hash, &cert) {
        return Err(Error::InternalInvariantViolation(format!("emitted certificate fails at {step:?}: {reason}")));
    }
    if !trace.potentials_monotone() || !trace.balance_bound_holds() {
        return Err(Error::InternalInvariantViolation("a termination potential was not monotone".into()));
    }
    Ok((cert, trace))
}

/// Certificate edges joining the first non-ordinary point to every other
/// non-ordinary point. Intermediate lattices must be among `points`, which
/// cross-checks the enumeration.
pub fn pf_edges(inst: &Instance, points: &[LatticePoint], ordinary: &[bool]) -> Result<(Vec<GraphEdge>, PfTrace)> {
    use rayon::prelude::*;
    let non_ord: Vec<usize> = (0..points.len()).filter(|&i| !ordinary[i]).collect();
    let Some((&hub, rest)) = non_ord.split_first() else {
        return Ok((Vec::new(), PfTrace::default()));
    };
    let opts = PfOptions { bounds: None, points: Some(points.to_vec()) };
    let found: Vec<Result<(PathCertificate, PfTrace)>> =
        rest.par_iter().map(|&j| inst.with_retry(|i| pf_connect_traced(i, &points[hub], &points[j], &opts))).collect();
    let index: std::collections::HashMap<&str, usize> = points.iter().enumerate().map(|(i, p)| (p.id(), i)).collect();
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    let mut trace = PfTrace::default();
    for f in found {
        let (cert, t) = f?;
        trace.merge(t);
        for w in cert.steps {
            let (Some(&a), Some(&b)) = (index.get(w.source.as_str()), index.get(w.target.as_str())) else {
                return Err(Error::InternalInvariantViolation(format!(
                    "certificate passes through {} -> {}, which the enumeration missed",
                    w.source, w.target
                )));
            };
            if seen.insert((a.min(b), a.max(b))) {
                edges.push(GraphEdge { a, b, source: EdgeSource::Pathfinder, witness: w });
            }
        }
    }
    Ok((edges, trace))
}
