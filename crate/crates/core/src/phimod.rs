//! Rank-2 phi-modules over `k((u)) (x) F`, presented by n-tuples of 2x2
//! matrices.
//!
//! Block `i` (1-based in all user-facing text, 0-based in code) describes
//! Frobenius from component `i` to component `i+1` (indices are cyclic):
//! `phi(e^i) = A_i e^(i+1)` for the column of basis vectors `e^i`. Frobenius
//! acts on a single idempotent component by `u -> u^p` and leaves the
//! coefficient field fixed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{FieldCtx, Mat2, Series, SeriesRecord, Valuation};
use crate::error::{Error, Result};

/// Instance-wide parameters: coefficient field `F`, residue degree `n`
/// (`q = p^n`), ramification index `e`, and the working precision used when
/// an inverse is an infinite series.
#[derive(Debug, Clone)]
pub struct InstanceParams {
    pub field: Arc<FieldCtx>,
    pub n: usize,
    pub e: i64,
    pub precision: i64,
}

impl InstanceParams {
    pub fn new(field: Arc<FieldCtx>, n: usize, e: i64) -> Result<InstanceParams> {
        if n == 0 {
            return Err(Error::InvalidInstance("residue degree n must be >= 1".into()));
        }
        if e < 1 {
            return Err(Error::InvalidInstance("ramification index e must be >= 1".into()));
        }
        let p = field.p() as i64;
        let precision = p * (2 * e) + 16;
        Ok(InstanceParams { field, n, e, precision })
    }

    pub fn p(&self) -> i64 {
        self.field.p() as i64
    }

    /// `q = p^n`.
    pub fn q(&self) -> u64 {
        (self.field.p() as u64).pow(self.n as u32)
    }

    /// Default working precision `p (2e + S_max) + 16` for an ambient whose
    /// largest exponent magnitude is `s_max`.
    pub fn with_default_precision(mut self, s_max: i64) -> InstanceParams {
        self.precision = self.p() * (2 * self.e + s_max) + 16;
        self
    }

    pub fn with_precision(mut self, precision: i64) -> InstanceParams {
        self.precision = precision;
        self
    }
}

/// The presentation `(A_1, .., A_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixTuple(pub Vec<Mat2>);

impl MatrixTuple {
    pub fn identity(ctx: &Arc<FieldCtx>, n: usize) -> MatrixTuple {
        MatrixTuple(vec![Mat2::identity(ctx); n])
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn blocks(&self) -> &[Mat2] {
        &self.0
    }
    pub fn block(&self, i: usize) -> &Mat2 {
        &self.0[i % self.0.len()]
    }
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        self.0[0].ctx()
    }
    /// `v_u(det A_i)` for every block; fails if some determinant vanishes
    /// to precision.
    pub fn det_valuations(&self) -> Result<Vec<i64>> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, b)| match b.det_valuation() {
                Valuation::Finite(v) => Ok(v),
                _ => Err(Error::SingularBlock {
                    block: i + 1,
                    detail: "determinant has no confirmed finite valuation".into(),
                }),
            })
            .collect()
    }
    pub fn inverse(&self, cap: i64) -> Result<MatrixTuple> {
        Ok(MatrixTuple(self.0.iter().map(|b| b.inv(cap)).collect::<Result<_>>()?))
    }
    pub fn is_integral(&self) -> Result<bool> {
        for b in &self.0 {
            if !b.is_integral()? {
                return Ok(false);
            }
        }
        Ok(true)
    }
    pub fn agrees_with(&self, o: &MatrixTuple) -> bool {
        self.len() == o.len() && self.0.iter().zip(&o.0).all(|(a, b)| a.agrees_with(b))
    }

    pub fn to_record(&self) -> MatrixTupleRecord {
        MatrixTupleRecord(
            self.0
                .iter()
                .map(|m| {
                    [[m.e[0][0].to_record(), m.e[0][1].to_record()], [m.e[1][0].to_record(), m.e[1][1].to_record()]]
                })
                .collect(),
        )
    }

    pub fn from_record(ctx: &Arc<FieldCtx>, rec: &MatrixTupleRecord) -> Result<MatrixTuple> {
        if rec.0.is_empty() {
            return Err(Error::InvalidInstance("matrix tuple has no blocks".into()));
        }
        let blocks = rec
            .0
            .iter()
            .map(|b| {
                Ok(Mat2::new(
                    Series::from_record(ctx, &b[0][0])?,
                    Series::from_record(ctx, &b[0][1])?,
                    Series::from_record(ctx, &b[1][0])?,
                    Series::from_record(ctx, &b[1][1])?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MatrixTuple(blocks))
    }

    /// Stable hex digest of the serialized tuple.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(&self.to_record()).expect("records serialize");
        hex::encode(Sha256::digest(&json))
    }

    /// First 16 hex digits of [`MatrixTuple::digest`]; used as point IDs.
    pub fn short_id(&self) -> String {
        self.digest()[..16].to_string()
    }
}

/// Ordered list of blocks, each a 2x2 array of series records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixTupleRecord(pub Vec<[[SeriesRecord; 2]; 2]>);

/// `(phi(B_i) A_i B_{i+1}^{-1})_i`: the presentation of `B . M` when `M ~ A`.
pub fn pm_base_change(params: &InstanceParams, a: &MatrixTuple, b: &MatrixTuple) -> Result<MatrixTuple> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::InvalidInstance(format!("tuple lengths differ: {} vs {}", n, b.len())));
    }
    let binv = b.inverse(params.precision)?;
    Ok(MatrixTuple((0..n).map(|i| b.0[i].frobsub().mul(&a.0[i]).mul(&binv.0[(i + 1) % n])).collect()))
}

/// Componentwise product `(B_i C_i)_i`; acting by it equals acting by `C`
/// and then by `B`.
pub fn pm_compose_action(b: &MatrixTuple, c: &MatrixTuple) -> Result<MatrixTuple> {
    if b.len() != c.len() {
        return Err(Error::InvalidInstance("tuple lengths differ".into()));
    }
    Ok(MatrixTuple(b.0.iter().zip(&c.0).map(|(x, y)| x.mul(y)).collect()))
}

/// How an ambient module was constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmbientKind {
    /// `(alpha_1 (0,1; u^s,0), alpha_2 I, .., alpha_n I)`; alphas as field codes.
    Irreducible {
        s: u64,
        alphas: Vec<u32>,
    },
    /// Upper triangular `(a_i, b_i; 0, c_i)`. The second basis vector spans a
    /// phi-stable line.
    Reducible,
    Raw,
}

/// An ambient phi-module `M_F` with its presentation.
#[derive(Debug, Clone)]
pub struct Ambient {
    pub tuple: MatrixTuple,
    pub kind: AmbientKind,
}

impl Ambient {
    pub fn raw(tuple: MatrixTuple) -> Result<Ambient> {
        tuple.det_valuations()?;
        Ok(Ambient { tuple, kind: AmbientKind::Raw })
    }
    pub fn is_irreducible_normal_form(&self) -> bool {
        matches!(self.kind, AmbientKind::Irreducible { .. })
    }
    /// Largest exponent magnitude among the stored coefficients.
    pub fn exponent_bound(&self) -> i64 {
        self.tuple
            .0
            .iter()
            .flat_map(|b| b.entries())
            .filter(|s| !s.is_zero_to_precision())
            .map(|s| s.offset().abs().max((s.end() - 1).abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Normal form of an absolutely irreducible ambient after extending scalars.
pub fn pm_ambient_irreducible(params: &InstanceParams, s: u64, alphas: &[u32]) -> Result<Ambient> {
    let ctx = &params.field;
    let q_plus_one = params.q() + 1;
    if s == 0 {
        return Err(Error::InvalidInstance("s must be a positive integer".into()));
    }
    if s % q_plus_one == 0 {
        return Err(Error::ReducibleParameters { s, q_plus_one });
    }
    if ctx.degree() as usize % (2 * params.n) != 0 {
        return Err(Error::FieldTooSmall { n: params.n, m: ctx.degree() });
    }
    if alphas.len() != params.n {
        return Err(Error::InvalidInstance(format!("expected {} alphas, got {}", params.n, alphas.len())));
    }
    if alphas.iter().any(|&a| a == 0 || a >= ctx.size()) {
        return Err(Error::InvalidInstance("alphas must be nonzero field elements".into()));
    }
    let mut blocks = Vec::with_capacity(params.n);
    let z = Series::zero(ctx);
    blocks.push(Mat2::new(
        z.clone(),
        Series::monomial(ctx, alphas[0], 0),
        Series::monomial(ctx, alphas[0], s as i64),
        z,
    ));
    for &a in &alphas[1..] {
        blocks.push(Mat2::diag(Series::monomial(ctx, a, 0), Series::monomial(ctx, a, 0)));
    }
    Ok(Ambient { tuple: MatrixTuple(blocks), kind: AmbientKind::Irreducible { s, alphas: alphas.to_vec() } })
}

/// Upper triangular ambient `((a_i, b_i; 0, c_i))_i`.
pub fn pm_ambient_reducible(params: &InstanceParams, a: &[Series], b: &[Series], c: &[Series]) -> Result<Ambient> {
    let n = params.n;
    if a.len() != n || b.len() != n || c.len() != n {
        return Err(Error::InvalidInstance(format!("reducible ambient needs {n} entries per diagonal")));
    }
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        for (name, s) in [("a", &a[i]), ("c", &c[i])] {
            if s.valuation().finite().is_none() {
                return Err(Error::SingularBlock {
                    block: i + 1,
                    detail: format!("{name}_{} is zero to precision", i + 1),
                });
            }
        }
        blocks.push(Mat2::new(a[i].clone(), b[i].clone(), Series::zero(&params.field), c[i].clone()));
    }
    Ok(Ambient { tuple: MatrixTuple(blocks), kind: AmbientKind::Reducible })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u32, modulus: &[u32], n: usize, e: i64) -> InstanceParams {
        InstanceParams::new(FieldCtx::new(p, modulus).unwrap(), n, e).unwrap()
    }

    #[test]
    fn unipotent_change_of_basis_from_exceptional_configuration() {
        // A_1 = (0, u^-1; u^p, 0), A_j = diag(1, u^(p-1)), B_i = (1, u^-1; 0, 1)
        let pr = params(3, &[0, 1], 3, 2);
        let k = &pr.field;
        let p = 3;
        let mut a = vec![Mat2::from_terms(k, [&[], &[(-1, 1)], &[(p, 1)], &[]])];
        for _ in 1..3 {
            a.push(Mat2::from_terms(k, [&[(0, 1)], &[], &[], &[(p - 1, 1)]]));
        }
        let a = MatrixTuple(a);
        let b = MatrixTuple(vec![Mat2::from_terms(k, [&[(0, 1)], &[(-1, 1)], &[], &[(0, 1)]]); 3]);
        let g = pm_base_change(&pr, &a, &b).unwrap();
        assert_eq!(g.0[0], Mat2::from_terms(k, [&[(0, 1)], &[], &[(p, 1)], &[(p - 1, -1)]]));
        for j in 1..3 {
            assert_eq!(g.0[j], a.0[j]);
        }
    }

    #[test]
    fn identity_change_of_basis() {
        let pr = params(3, &[1, 0, 1], 2, 2);
        let amb = pm_ambient_irreducible(&pr, 1, &[1, 1]);
        // F_9 is too small for n = 2
        assert!(matches!(amb, Err(Error::FieldTooSmall { .. })));
        let pr = params(3, &[2, 0, 0, 1, 1], 2, 2);
        let amb = pm_ambient_irreducible(&pr, 1, &[1, 1]).unwrap();
        let id = MatrixTuple::identity(&pr.field, 2);
        assert_eq!(pm_base_change(&pr, &amb.tuple, &id).unwrap(), amb.tuple);
        let k = &pr.field;
        assert_eq!(amb.tuple.0[0], Mat2::from_terms(k, [&[], &[(0, 1)], &[(1, 1)], &[]]));
        assert_eq!(amb.tuple.0[1], Mat2::identity(k));
        assert_eq!(amb.tuple.det_valuations().unwrap(), vec![1, 0]);
    }

    #[test]
    fn diagonal_change_of_basis_on_triangular_ambient() {
        // B_i = diag(u^-s_i, u^s_i) acting on (a_i, b_i; 0, c_i)
        let pr = params(5, &[0, 1], 2, 3);
        let k = &pr.field;
        let s = [2i64, -1];
        let a = [Series::from_terms(k, &[(0, 1), (1, 2)]), Series::from_terms(k, &[(1, 3)])];
        let b = [Series::from_terms(k, &[(0, 4), (2, 1)]), Series::from_terms(k, &[(-1, 1)])];
        let c = [Series::from_terms(k, &[(3, 1)]), Series::from_terms(k, &[(2, 1), (3, 1)])];
        let amb = pm_ambient_reducible(&pr, &a, &b, &c).unwrap();
        let bt = MatrixTuple(s.iter().map(|&x| Mat2::diag_u(k, -x, x)).collect());
        let g = pm_base_change(&pr, &amb.tuple, &bt).unwrap();
        let p = 5;
        for i in 0..2 {
            let j = (i + 1) % 2;
            assert_eq!(g.0[i].e[0][0], a[i].shift(-p * s[i] + s[j]));
            assert_eq!(g.0[i].e[1][1], c[i].shift(p * s[i] - s[j]));
            assert_eq!(g.0[i].e[0][1], b[i].shift(-p * s[i] - s[j]));
            assert!(g.0[i].e[1][0].is_exact_zero());
        }
    }

    #[test]
    fn irreducible_parameter_checks() {
        let pr = params(3, &[1, 0, 1], 1, 2);
        assert_eq!(
            pm_ambient_irreducible(&pr, 4, &[1]).unwrap_err(),
            Error::ReducibleParameters { s: 4, q_plus_one: 4 }
        );
        let amb = pm_ambient_irreducible(&pr, 2, &[1]).unwrap();
        let k = &pr.field;
        assert_eq!(amb.tuple.0[0], Mat2::from_terms(k, [&[], &[(0, 1)], &[(2, 1)], &[]]));
    }

    #[test]
    fn reducible_constructor() {
        let pr = params(3, &[0, 1], 1, 2);
        let k = &pr.field;
        let amb = pm_ambient_reducible(&pr, &[Series::one(k)], &[Series::zero(k)], &[Series::u_pow(k, 2)]).unwrap();
        assert_eq!(amb.tuple.0[0], Mat2::diag_u(k, 0, 2));
        let bad = pm_ambient_reducible(&pr, &[Series::zero_to(k, 3)], &[Series::zero(k)], &[Series::one(k)]);
        assert!(matches!(bad, Err(Error::SingularBlock { block: 1, .. })));

        let pr = params(3, &[0, 1], 2, 2);
        let a = [Series::one(k), Series::u_pow(k, 1)];
        let b = [Series::one(k), Series::zero(k)];
        let c = [Series::u_pow(k, 2), Series::u_pow(k, 1)];
        let amb = pm_ambient_reducible(&pr, &a, &b, &c).unwrap();
        let dets = amb.tuple.det_valuations().unwrap();
        let expect: Vec<i64> =
            (0..2).map(|i| a[i].valuation().finite().unwrap() + c[i].valuation().finite().unwrap()).collect();
        assert_eq!(dets, expect);
        assert_eq!(dets, vec![2, 2]);
    }
}
