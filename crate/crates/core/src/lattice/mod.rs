//! Lattices `B . M` inside an ambient phi-module, kept in Hermite form.
//!
//! A lattice is a tuple of bases `B_i`; component `i` is the row span of
//! `B_i` over `F[[u]]`. Two tuples give the same lattice iff they differ by
//! left multiplication with a tuple in `GL_2(F[[u]])`. The canonical
//! representative of each block is `(u^a, v; 0, u^b)` with `v` an exact
//! Laurent polynomial whose exponents are all `< b`.

mod ordinary;
mod split;

pub use ordinary::{lat_is_ordinary, lifted_stable_lines_bruteforce, Ordinarity, StableLine};
pub use split::{lat_split_extension, split_base_change, split_residuals};

use std::fmt;
use std::sync::Arc;

pub use crate::certify::MoveDir;

use crate::algebra::{FieldCtx, Mat2, Series, Valuation};
use crate::error::{Error, Result};
use crate::phimod::{pm_base_change, InstanceParams, MatrixTuple};

/// Hermite form of a single invertible block under left `GL_2(F[[u]])`.
pub fn hermite_block(m: &Mat2, cap: i64) -> Result<Mat2> {
    let ctx = m.ctx().clone();
    let v0 = m.e[0][0].valuation();
    let v1 = m.e[1][0].valuation();
    let pivot = match (v0, v1) {
        (Valuation::Infinite, Valuation::Infinite) => {
            return Err(Error::SingularBlock { block: 0, detail: "first column vanishes".into() })
        }
        (Valuation::Finite(x), Valuation::Finite(y)) => usize::from(y < x),
        (Valuation::Finite(_), Valuation::Infinite) => 0,
        (Valuation::Infinite, Valuation::Finite(_)) => 1,
        (Valuation::Finite(x), Valuation::AtLeast(y)) if y >= x => 0,
        (Valuation::AtLeast(x), Valuation::Finite(y)) if x > y => 1,
        _ => return Err(Error::PrecisionExhausted("pivot valuation unconfirmed".into())),
    };
    let d = m
        .det_valuation()
        .finite()
        .ok_or_else(|| Error::SingularBlock { block: 0, detail: "determinant vanishes to precision".into() })?;
    let a = m.e[pivot][0].valuation().finite().expect("pivot is finite");
    let b = d - a;
    let x = &m.e[pivot][1];
    let v = if x.is_exact_zero() {
        Series::zero(&ctx)
    } else {
        let w = m.e[pivot][0].shift(-a);
        let lo = x.valuation().lower_bound().unwrap_or(0);
        let winv = w.inv(cap.max(b - lo + 2))?;
        (&winv * x).reduce_below(b)?
    };
    Ok(Mat2::new(Series::u_pow(&ctx, a), v, Series::zero(&ctx), Series::u_pow(&ctx, b)))
}

/// Hermite form of the `F[[u]]`-span of any number of generator rows that
/// span a rank-2 lattice.
pub fn hermite_rows(rows: &[[Series; 2]], cap: i64) -> Result<Mat2> {
    let ctx =
        rows.first().ok_or_else(|| Error::SingularBlock { block: 0, detail: "no generators".into() })?[0].ctx().clone();
    let (p, a) = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r[0].valuation().finite().map(|v| (i, v)))
        .min_by_key(|&(i, v)| (v, i))
        .ok_or_else(|| Error::SingularBlock { block: 0, detail: "first column vanishes".into() })?;
    let winv = rows[p][0].shift(-a).inv(cap)?;
    let top = &winv * &rows[p][1];
    let mut b: Option<i64> = None;
    for (j, r) in rows.iter().enumerate() {
        if j == p {
            continue;
        }
        let f = &r[0].shift(-a) * &winv;
        let rest = &r[1] - &(&f * &top);
        if let Some(v) = rest.valuation().finite() {
            b = Some(b.map_or(v, |x| x.min(v)));
        }
    }
    let b = b.ok_or_else(|| Error::PrecisionExhausted("second pivot unconfirmed".into()))?;
    let v = top.reduce_below(b)?;
    Ok(Mat2::new(Series::u_pow(&ctx, a), v, Series::zero(&ctx), Series::u_pow(&ctx, b)))
}

/// Componentwise Hermite form.
pub fn canonical_tuple(b: &MatrixTuple, cap: i64) -> Result<MatrixTuple> {
    b.0.iter()
        .enumerate()
        .map(|(i, m)| {
            hermite_block(m, cap).map_err(|err| match err {
                Error::SingularBlock { detail, .. } => Error::SingularBlock { block: i + 1, detail },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(MatrixTuple)
}

/// Outcome of [`lat_is_point`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointCheck {
    Yes,
    /// Some entry of `G_block` has negative valuation (1-based block).
    NotStable {
        block: usize,
    },
    /// `v(det G_block) != e`.
    WrongDeterminant {
        block: usize,
        found: i64,
    },
}

impl PointCheck {
    pub fn is_yes(&self) -> bool {
        matches!(self, PointCheck::Yes)
    }
}

impl fmt::Display for PointCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointCheck::Yes => write!(f, "yes"),
            PointCheck::NotStable { block } => write!(f, "no(stability): G_{block} is not integral"),
            PointCheck::WrongDeterminant { block, found } => {
                write!(f, "no(determinant): v(det G_{block}) = {found}")
            }
        }
    }
}

/// Check the two moduli conditions on a phi-matrix tuple `G`.
pub fn check_phi_matrices(g: &MatrixTuple, e: i64) -> Result<PointCheck> {
    for (i, m) in g.0.iter().enumerate() {
        if !m.is_integral()? {
            return Ok(PointCheck::NotStable { block: i + 1 });
        }
    }
    for (i, m) in g.0.iter().enumerate() {
        match m.det_valuation() {
            Valuation::Finite(v) if v == e => {}
            Valuation::Finite(v) => return Ok(PointCheck::WrongDeterminant { block: i + 1, found: v }),
            Valuation::AtLeast(n) if n <= e => {
                return Err(Error::PrecisionExhausted(format!("det G_{} unconfirmed below u^{n}", i + 1)))
            }
            _ => return Ok(PointCheck::WrongDeterminant { block: i + 1, found: i64::MAX }),
        }
    }
    Ok(PointCheck::Yes)
}

/// A lattice in canonical form with its phi-matrices in the ambient.
#[derive(Clone)]
pub struct LatticePoint {
    pub basis: MatrixTuple,
    pub g: MatrixTuple,
    pub check: PointCheck,
    id: String,
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticePoint({} {:?})", self.id, self.basis.0)
    }
}

impl PartialEq for LatticePoint {
    fn eq(&self, o: &LatticePoint) -> bool {
        self.basis == o.basis
    }
}
impl Eq for LatticePoint {}

impl LatticePoint {
    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn is_point(&self) -> bool {
        self.check.is_yes()
    }
    pub fn n(&self) -> usize {
        self.basis.len()
    }
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        self.basis.ctx()
    }
    /// Hermite exponents `(a_i, b_i)`.
    pub fn exponents(&self) -> Vec<(i64, i64)> {
        self.basis.0.iter().map(|m| (m.e[0][0].offset(), m.e[1][1].offset())).collect()
    }
    /// Off-diagonal Hermite parameters `v_i`.
    pub fn offdiag(&self) -> Vec<&Series> {
        self.basis.0.iter().map(|m| &m.e[0][1]).collect()
    }
    /// Trace of the product of the constant terms of the `G_i`.
    pub fn residual_trace(&self) -> Result<u32> {
        let ctx = self.ctx().clone();
        let mut prod = [[1u32, 0], [0, 1]];
        for m in &self.g.0 {
            let r = m.reduce_mod_u()?;
            let mut out = [[0u32; 2]; 2];
            for (i, row) in out.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = ctx.add(ctx.mul(prod[i][0], r[0][j]), ctx.mul(prod[i][1], r[1][j]));
                }
            }
            prod = out;
        }
        Ok(ctx.add(prod[0][0], prod[1][1]))
    }
}

/// Stable short identifier of a canonical basis tuple.
pub fn point_id(basis: &MatrixTuple) -> String {
    basis.short_id()
}

/// Canonicalize `B` and attach its phi-matrices in the ambient `A`.
pub fn lat_canonicalize(params: &InstanceParams, a: &MatrixTuple, b: &MatrixTuple) -> Result<LatticePoint> {
    let basis = canonical_tuple(b, params.precision)?;
    lattice_from_canonical(params, a, basis)
}

pub(crate) fn lattice_from_canonical(
    params: &InstanceParams,
    a: &MatrixTuple,
    basis: MatrixTuple,
) -> Result<LatticePoint> {
    let g = pm_base_change(params, a, &basis)?;
    let check = check_phi_matrices(&g, params.e)?;
    let id = point_id(&basis);
    Ok(LatticePoint { basis, g, check, id })
}

/// The moduli-point predicate.
pub fn lat_is_point(params: &InstanceParams, a: &MatrixTuple, l: &LatticePoint) -> Result<PointCheck> {
    let g = pm_base_change(params, a, &l.basis)?;
    check_phi_matrices(&g, params.e)
}

/// The values `d_i = v(det B_i)` forced on every moduli point, or `None` if
/// the circulant system has no integral solution.
pub fn lat_det_profile(params: &InstanceParams, a: &MatrixTuple) -> Result<Option<Vec<i64>>> {
    let n = a.len();
    let p = params.p() as i128;
    let c: Vec<i128> = a.det_valuations()?.iter().map(|&v| (params.e - v) as i128).collect();
    let pn = p.checked_pow(n as u32).ok_or_else(|| Error::InvalidInstance("p^n overflows".into()))?;
    let mut num: i128 = 0;
    for (j, &cj) in c.iter().enumerate() {
        num += p.pow((n - 1 - j) as u32) * cj;
    }
    if num % (pn - 1) != 0 {
        return Ok(None);
    }
    let mut d = vec![num / (pn - 1)];
    for i in 0..n - 1 {
        d.push(p * d[i] - c[i]);
    }
    Ok(Some(d.into_iter().map(|x| x as i64).collect()))
}

/// Basis of the moved lattice at slot `i` (0-based), canonicalized.
pub fn umove_basis(l: &MatrixTuple, i: usize, dir: MoveDir) -> Result<MatrixTuple> {
    let ctx = l.ctx().clone();
    let d = match dir {
        MoveDir::Forward => Mat2::diag_u(&ctx, 1, -1),
        MoveDir::Inverse => Mat2::diag_u(&ctx, -1, 1),
    };
    let mut out = l.clone();
    out.0[i] = hermite_block(&d.mul(&l.0[i]), 0)?;
    Ok(out)
}

/// The U-move at slot `i` (0-based): `Some` iff the moved lattice is again a
/// moduli point.
pub fn lat_umove(
    params: &InstanceParams,
    a: &MatrixTuple,
    l: &LatticePoint,
    i: usize,
    dir: MoveDir,
) -> Result<Option<LatticePoint>> {
    let moved = lattice_from_canonical(params, a, umove_basis(&l.basis, i, dir)?)?;
    Ok(moved.is_point().then_some(moved))
}
