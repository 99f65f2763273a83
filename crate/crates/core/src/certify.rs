//! Independent verification of edge witnesses and path certificates.
//!
//! Everything here is recomputed from the ambient presentation and the
//! matrices embedded in the witness, using only the algebra and phimod
//! layers. Failures are reported as values.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::field::same_ctx;
use crate::algebra::{FieldCtx, Mat2, Series, Valuation};
use crate::error::{Error, Result};
use crate::phimod::{InstanceParams, MatrixTuple, MatrixTupleRecord};

/// Direction of a U-move at one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveDir {
    /// `diag(u, u^-1)` on the Hermite basis: `L -> uL + u^-1 (L cap l_2)`.
    Forward,
    /// `diag(u^-1, u)` on the Hermite basis.
    Inverse,
}

impl MoveDir {
    pub fn opposite(self) -> MoveDir {
        match self {
            MoveDir::Forward => MoveDir::Inverse,
            MoveDir::Inverse => MoveDir::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessKind {
    /// `slot` is 0-based.
    UMove { slot: usize, dir: MoveDir },
    /// Re-basing `C` of the source and nilpotent `N`, both in source
    /// coordinates: target `= (1 + N) C B_source`.
    Nilpotent { c: MatrixTuple, n: MatrixTuple },
}

/// One edge between two moduli points, with both canonical bases embedded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeWitness {
    pub source: String,
    pub target: String,
    pub source_basis: MatrixTuple,
    pub target_basis: MatrixTuple,
    pub kind: WitnessKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCertificate {
    pub instance_hash: String,
    pub endpoints: [String; 2],
    pub steps: Vec<EdgeWitness>,
}

/// Outcome of [`cert_verify_edge`]. Conditions: 0 malformed witness,
/// 1 endpoint is not a canonical moduli point, 2 `N` not nilpotent or `C` not
/// unimodular, 3 target mismatch, 4 integrality of `phi(N_i) A'_i N_(i+1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeVerdict {
    Ok,
    Fail { condition: u8, reason: String },
}

impl EdgeVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, EdgeVerdict::Ok)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertVerdict {
    Ok,
    /// `step` is the 0-based failing step, `None` for header problems.
    Fail {
        step: Option<usize>,
        reason: String,
    },
}

impl CertVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, CertVerdict::Ok)
    }
}

impl fmt::Display for CertVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertVerdict::Ok => write!(f, "ok"),
            CertVerdict::Fail { step: Some(k), reason } => write!(f, "fail at step {}: {reason}", k + 1),
            CertVerdict::Fail { step: None, reason } => write!(f, "fail: {reason}"),
        }
    }
}

fn fail(condition: u8, reason: impl Into<String>) -> EdgeVerdict {
    EdgeVerdict::Fail { condition, reason: reason.into() }
}

fn hermite(m: &Mat2, cap: i64) -> Option<Mat2> {
    let ctx = m.ctx();
    let (x, y) = (m.e[0][0].valuation(), m.e[1][0].valuation());
    let pivot = match (x, y) {
        (Valuation::Finite(a), Valuation::Finite(b)) => usize::from(b < a),
        (Valuation::Finite(_), Valuation::Infinite) => 0,
        (Valuation::Infinite, Valuation::Finite(_)) => 1,
        _ => return None,
    };
    let a = m.e[pivot][0].valuation().finite()?;
    let b = m.det().valuation().finite()? - a;
    let unit = m.e[pivot][0].shift(-a);
    let lo = m.e[pivot][1].valuation().lower_bound().unwrap_or(b);
    let v = (&unit.inv(cap.max(b - lo + 2)).ok()? * &m.e[pivot][1]).reduce_below(b).ok()?;
    Some(Mat2::new(Series::u_pow(ctx, a), v, Series::zero(ctx), Series::u_pow(ctx, b)))
}

fn is_canonical(t: &MatrixTuple) -> bool {
    t.0.iter().all(|m| m.is_exact() && hermite(m, 0).as_ref() == Some(m))
}

/// `phi(B_i) A_i B_(i+1)^-1` for a canonical `B`, and whether it is a point.
fn point_matrices(
    params: &InstanceParams,
    a: &MatrixTuple,
    b: &MatrixTuple,
) -> std::result::Result<MatrixTuple, String> {
    let n = a.len();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let next = b.0[(i + 1) % n].inv(params.precision).map_err(|e| e.to_string())?;
        let gi = b.0[i].frobsub().mul(&a.0[i]).mul(&next);
        match gi.is_integral() {
            Ok(true) => {}
            Ok(false) => return Err(format!("G_{} is not integral", i + 1)),
            Err(e) => return Err(e.to_string()),
        }
        if gi.det_valuation() != Valuation::Finite(params.e) {
            return Err(format!("v(det G_{}) != e", i + 1));
        }
        g.push(gi);
    }
    Ok(MatrixTuple(g))
}

fn moved_basis(b: &MatrixTuple, slot: usize, dir: MoveDir) -> Option<MatrixTuple> {
    let ctx = b.ctx();
    let d = match dir {
        MoveDir::Forward => Mat2::diag_u(ctx, 1, -1),
        MoveDir::Inverse => Mat2::diag_u(ctx, -1, 1),
    };
    let mut out = b.clone();
    out.0[slot] = hermite(&d.mul(&b.0[slot]), 0)?;
    Some(out)
}

fn unimodular_integral(m: &Mat2) -> bool {
    m.is_integral().unwrap_or(false) && m.det_valuation() == Valuation::Finite(0)
}

/// Check one edge in the stated direction.
pub fn cert_verify_edge(params: &InstanceParams, a: &MatrixTuple, w: &EdgeWitness) -> EdgeVerdict {
    let n = a.len();
    let ctx = a.ctx();
    for t in [&w.source_basis, &w.target_basis] {
        if t.len() != n || t.0.iter().any(|m| m.entries().any(|s| !same_ctx(s.ctx(), ctx))) {
            return fail(0, "basis has wrong shape or field");
        }
    }
    if w.source != w.source_basis.short_id() || w.target != w.target_basis.short_id() {
        return fail(0, "endpoint ID does not match embedded basis");
    }
    if !is_canonical(&w.source_basis) || !is_canonical(&w.target_basis) {
        return fail(1, "endpoint basis is not in canonical form");
    }
    let g = match point_matrices(params, a, &w.source_basis) {
        Ok(g) => g,
        Err(r) => return fail(1, format!("source is not a moduli point: {r}")),
    };
    if let Err(r) = point_matrices(params, a, &w.target_basis) {
        return fail(1, format!("target is not a moduli point: {r}"));
    }
    match &w.kind {
        WitnessKind::UMove { slot, dir } => {
            if n < 2 {
                return fail(0, "U-move edges need at least two components");
            }
            if *slot >= n {
                return fail(0, "slot out of range");
            }
            match moved_basis(&w.source_basis, *slot, *dir) {
                Some(t) if t == w.target_basis => EdgeVerdict::Ok,
                _ => fail(3, "moved lattice differs from target"),
            }
        }
        WitnessKind::Nilpotent { c, n: nil } => {
            if c.len() != n || nil.len() != n {
                return fail(0, "C or N has the wrong number of blocks");
            }
            for i in 0..n {
                if !nil.0[i].mul(&nil.0[i]).is_zero_to_precision() || !nil.0[i].trace().is_zero_to_precision() {
                    return fail(2, format!("N_{} is not nilpotent", i + 1));
                }
                if !nil.0[i].is_exact() {
                    return fail(2, format!("N_{} is not exact", i + 1));
                }
                if !unimodular_integral(&c.0[i]) {
                    return fail(2, format!("C_{} is not in GL_2(F[[u]])", i + 1));
                }
            }
            let cap = params.precision
                + 4 * nil.0.iter().filter_map(Mat2::min_valuation).map(|v| (-v).max(0)).max().unwrap_or(0);
            for i in 0..n {
                let one_plus = Mat2::identity(ctx).add(&nil.0[i]);
                let moved = one_plus.mul(&c.0[i]).mul(&w.source_basis.0[i]);
                match hermite(&moved, cap) {
                    Some(h) if h == w.target_basis.0[i] => {}
                    _ => return fail(3, format!("(1 + N) C B differs from target at block {}", i + 1)),
                }
            }
            let cinv = match c.inverse(cap) {
                Ok(ci) => ci,
                Err(e) => return fail(2, e.to_string()),
            };
            for i in 0..n {
                let j = (i + 1) % n;
                if nil.0[i].is_exact_zero() || nil.0[j].is_exact_zero() {
                    continue;
                }
                let ai = c.0[i].frobsub().mul(&g.0[i]).mul(&cinv.0[j]);
                let prod = nil.0[i].frobsub().mul(&ai).mul(&nil.0[j]);
                match prod.is_integral() {
                    Ok(true) => {}
                    Ok(false) => return fail(4, format!("phi(N_{}) A' N_{} is not integral", i + 1, j + 1)),
                    Err(e) => return fail(4, e.to_string()),
                }
            }
            EdgeVerdict::Ok
        }
    }
}

/// Check the chain, every edge, and the declared endpoints.
pub fn cert_verify(params: &InstanceParams, a: &MatrixTuple, instance_hash: &str, c: &PathCertificate) -> CertVerdict {
    if c.instance_hash != instance_hash {
        return CertVerdict::Fail { step: None, reason: "instance hash mismatch".into() };
    }
    if c.steps.is_empty() {
        return if c.endpoints[0] == c.endpoints[1] {
            CertVerdict::Ok
        } else {
            CertVerdict::Fail { step: None, reason: "empty certificate with distinct endpoints".into() }
        };
    }
    if c.steps[0].source != c.endpoints[0] {
        return CertVerdict::Fail {
            step: Some(0),
            reason: "first step does not start at the declared endpoint".into(),
        };
    }
    for (k, w) in c.steps.iter().enumerate() {
        if k > 0 && (c.steps[k - 1].target != w.source || c.steps[k - 1].target_basis != w.source_basis) {
            return CertVerdict::Fail { step: Some(k), reason: "chain break".into() };
        }
        if let EdgeVerdict::Fail { condition, reason } = cert_verify_edge(params, a, w) {
            return CertVerdict::Fail { step: Some(k), reason: format!("condition {condition}: {reason}") };
        }
    }
    let last = c.steps.len() - 1;
    if c.steps[last].target != c.endpoints[1] {
        return CertVerdict::Fail {
            step: Some(last),
            reason: "last step does not end at the declared endpoint".into(),
        };
    }
    CertVerdict::Ok
}

/// Nilpotent at slot `i` realizing the U-move in source coordinates, with
/// `C = I`: `1 + N` lies in `GL_2(F[[u]]) diag(u^(+-1), u^(-+1))`.
pub fn umove_nilpotent(ctx: &Arc<FieldCtx>, n: usize, slot: usize, dir: MoveDir) -> MatrixTuple {
    let mut blocks = vec![Mat2::zero(ctx); n];
    blocks[slot] = match dir {
        MoveDir::Forward => Mat2::from_terms(ctx, [&[(0, -1)], &[(-1, 1)], &[(1, -1)], &[(0, 1)]]),
        MoveDir::Inverse => Mat2::from_terms(ctx, [&[(0, 1)], &[(1, -1)], &[(-1, 1)], &[(0, -1)]]),
    };
    MatrixTuple(blocks)
}

/// Rewrite a U-move edge as the equivalent nilpotent edge; other edges are
/// returned unchanged.
pub fn as_nilpotent(w: &EdgeWitness) -> EdgeWitness {
    match &w.kind {
        WitnessKind::UMove { slot, dir } => {
            let ctx = w.source_basis.ctx();
            let n = w.source_basis.len();
            EdgeWitness {
                kind: WitnessKind::Nilpotent {
                    c: MatrixTuple::identity(ctx, n),
                    n: umove_nilpotent(ctx, n, *slot, *dir),
                },
                ..w.clone()
            }
        }
        WitnessKind::Nilpotent { .. } => w.clone(),
    }
}

/// The same edge traversed backwards: `C' = (1 + N) C B_X B_Y^-1`, `N' = -N`.
pub fn reverse_edge(params: &InstanceParams, w: &EdgeWitness) -> Result<EdgeWitness> {
    let nil = as_nilpotent(w);
    let WitnessKind::Nilpotent { c, n } = &nil.kind else { unreachable!() };
    let ctx = w.source_basis.ctx();
    let yinv = w.target_basis.inverse(params.precision)?;
    let blocks = (0..n.len())
        .map(|i| Mat2::identity(ctx).add(&n.0[i]).mul(&c.0[i]).mul(&w.source_basis.0[i]).mul(&yinv.0[i]))
        .collect::<Vec<_>>();
    for m in &blocks {
        if !m.is_exact() {
            return Err(Error::PrecisionExhausted("reversed re-basing is not exact".into()));
        }
    }
    Ok(EdgeWitness {
        source: w.target.clone(),
        target: w.source.clone(),
        source_basis: w.target_basis.clone(),
        target_basis: w.source_basis.clone(),
        kind: WitnessKind::Nilpotent { c: MatrixTuple(blocks), n: MatrixTuple(n.0.iter().map(Mat2::neg).collect()) },
    })
}

/// Reverse a whole certificate.
pub fn reverse_certificate(params: &InstanceParams, c: &PathCertificate) -> Result<PathCertificate> {
    let steps = c.steps.iter().rev().map(|w| reverse_edge(params, w)).collect::<Result<Vec<_>>>()?;
    Ok(PathCertificate {
        instance_hash: c.instance_hash.clone(),
        endpoints: [c.endpoints[1].clone(), c.endpoints[0].clone()],
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepKindRecord {
    /// `slot` is 1-based.
    Umove {
        slot: usize,
        direction: MoveDir,
    },
    Nilpotent {
        c: MatrixTupleRecord,
        n: MatrixTupleRecord,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub source: String,
    pub target: String,
    pub source_basis: MatrixTupleRecord,
    pub target_basis: MatrixTupleRecord,
    #[serde(flatten)]
    pub witness: StepKindRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub instance_hash: String,
    pub endpoints: [String; 2],
    pub steps: Vec<StepRecord>,
}

impl EdgeWitness {
    pub fn to_record(&self) -> StepRecord {
        StepRecord {
            source: self.source.clone(),
            target: self.target.clone(),
            source_basis: self.source_basis.to_record(),
            target_basis: self.target_basis.to_record(),
            witness: match &self.kind {
                WitnessKind::UMove { slot, dir } => StepKindRecord::Umove { slot: slot + 1, direction: *dir },
                WitnessKind::Nilpotent { c, n } => StepKindRecord::Nilpotent { c: c.to_record(), n: n.to_record() },
            },
        }
    }

    pub fn from_record(ctx: &Arc<FieldCtx>, r: &StepRecord) -> Result<EdgeWitness> {
        let kind = match &r.witness {
            StepKindRecord::Umove { slot, direction } => {
                if *slot == 0 {
                    return Err(Error::InvalidInstance("slots are 1-based".into()));
                }
                WitnessKind::UMove { slot: slot - 1, dir: *direction }
            }
            StepKindRecord::Nilpotent { c, n } => {
                WitnessKind::Nilpotent { c: MatrixTuple::from_record(ctx, c)?, n: MatrixTuple::from_record(ctx, n)? }
            }
        };
        Ok(EdgeWitness {
            source: r.source.clone(),
            target: r.target.clone(),
            source_basis: MatrixTuple::from_record(ctx, &r.source_basis)?,
            target_basis: MatrixTuple::from_record(ctx, &r.target_basis)?,
            kind,
        })
    }
}

impl PathCertificate {
    pub fn to_record(&self) -> CertificateRecord {
        CertificateRecord {
            instance_hash: self.instance_hash.clone(),
            endpoints: self.endpoints.clone(),
            steps: self.steps.iter().map(EdgeWitness::to_record).collect(),
        }
    }

    pub fn from_record(ctx: &Arc<FieldCtx>, r: &CertificateRecord) -> Result<PathCertificate> {
        Ok(PathCertificate {
            instance_hash: r.instance_hash.clone(),
            endpoints: r.endpoints.clone(),
            steps: r.steps.iter().map(|s| EdgeWitness::from_record(ctx, s)).collect::<Result<_>>()?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("records serialize")
    }

    pub fn from_json(ctx: &Arc<FieldCtx>, s: &str) -> Result<PathCertificate> {
        let rec: CertificateRecord =
            serde_json::from_str(s).map_err(|e| Error::InvalidInstance(format!("certificate JSON: {e}")))?;
        PathCertificate::from_record(ctx, &rec)
    }
}
