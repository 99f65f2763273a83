//! 2x2 matrices over truncated Laurent series.

use std::fmt;
use std::sync::Arc;

use super::field::FieldCtx;
use super::series::{Series, Valuation};
use crate::error::{Error, Result};

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat2 {
    pub e: [[Series; 2]; 2],
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {}, {})", self.e[0][0], self.e[0][1], self.e[1][0], self.e[1][1])
    }
}

impl Mat2 {
    pub fn new(a: Series, b: Series, c: Series, d: Series) -> Mat2 {
        Mat2 { e: [[a, b], [c, d]] }
    }
    pub fn identity(ctx: &Arc<FieldCtx>) -> Mat2 {
        Mat2::diag(Series::one(ctx), Series::one(ctx))
    }
    pub fn zero(ctx: &Arc<FieldCtx>) -> Mat2 {
        let z = Series::zero(ctx);
        Mat2::new(z.clone(), z.clone(), z.clone(), z)
    }
    pub fn diag(a: Series, d: Series) -> Mat2 {
        let z = Series::zero(a.ctx());
        Mat2::new(a, z.clone(), z, d)
    }
    /// `diag(u^x, u^y)`.
    pub fn diag_u(ctx: &Arc<FieldCtx>, x: i64, y: i64) -> Mat2 {
        Mat2::diag(Series::u_pow(ctx, x), Series::u_pow(ctx, y))
    }
    /// Matrix of monomials `c * u^k` over `F_p` from `(k, c)` entry specs.
    pub fn from_terms(ctx: &Arc<FieldCtx>, entries: [&[(i64, i64)]; 4]) -> Mat2 {
        Mat2::new(
            Series::from_terms(ctx, entries[0]),
            Series::from_terms(ctx, entries[1]),
            Series::from_terms(ctx, entries[2]),
            Series::from_terms(ctx, entries[3]),
        )
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        self.e[0][0].ctx()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Series> {
        self.e.iter().flat_map(|r| r.iter())
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let m = |i: usize, j: usize| &(&self.e[i][0] * &o.e[0][j]) + &(&self.e[i][1] * &o.e[1][j]);
        Mat2::new(m(0, 0), m(0, 1), m(1, 0), m(1, 1))
    }
    pub fn add(&self, o: &Mat2) -> Mat2 {
        let m = |i: usize, j: usize| &self.e[i][j] + &o.e[i][j];
        Mat2::new(m(0, 0), m(0, 1), m(1, 0), m(1, 1))
    }
    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let m = |i: usize, j: usize| &self.e[i][j] - &o.e[i][j];
        Mat2::new(m(0, 0), m(0, 1), m(1, 0), m(1, 1))
    }
    pub fn neg(&self) -> Mat2 {
        self.map(|s| s.neg())
    }
    pub fn scale(&self, code: u32) -> Mat2 {
        self.map(|s| s.scale(code))
    }
    pub fn map(&self, f: impl Fn(&Series) -> Series) -> Mat2 {
        Mat2::new(f(&self.e[0][0]), f(&self.e[0][1]), f(&self.e[1][0]), f(&self.e[1][1]))
    }
    /// Entrywise `u -> u^p`.
    pub fn frobsub(&self) -> Mat2 {
        self.map(Series::frobsub)
    }
    pub fn det(&self) -> Series {
        &(&self.e[0][0] * &self.e[1][1]) - &(&self.e[0][1] * &self.e[1][0])
    }
    pub fn trace(&self) -> Series {
        &self.e[0][0] + &self.e[1][1]
    }
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.e[1][1].clone(), self.e[0][1].neg(), self.e[1][0].neg(), self.e[0][0].clone())
    }
    /// Inverse via the adjugate. Exact when the determinant is an exact monomial.
    pub fn inv(&self, cap: i64) -> Result<Mat2> {
        let det = self.det();
        let dinv = det.inv(cap).map_err(|err| match err {
            Error::DivisionByZero => Error::SingularBlock { block: 0, detail: "zero determinant".into() },
            other => other,
        })?;
        Ok(self.adjugate().map(|s| s * &dinv))
    }
    /// Smallest valuation among entries (lower bound for zero-to-precision
    /// entries), `None` if all entries are exactly zero.
    pub fn min_valuation(&self) -> Option<i64> {
        self.entries().filter_map(|s| s.valuation().lower_bound()).min()
    }
    /// Confirmed integrality of every entry.
    pub fn is_integral(&self) -> Result<bool> {
        for s in self.entries() {
            if !s.is_integral()? {
                return Ok(false);
            }
        }
        Ok(true)
    }
    pub fn is_exact(&self) -> bool {
        self.entries().all(Series::is_exact)
    }
    pub fn is_exact_zero(&self) -> bool {
        self.entries().all(Series::is_exact_zero)
    }
    /// Every entry vanishes to its precision.
    pub fn is_zero_to_precision(&self) -> bool {
        self.entries().all(Series::is_zero_to_precision)
    }
    pub fn det_valuation(&self) -> Valuation {
        self.det().valuation()
    }
    /// Constant terms, as codes; fails if some constant term is unknown.
    pub fn reduce_mod_u(&self) -> Result<[[u32; 2]; 2]> {
        let c = |s: &Series| s.coeff(0).ok_or_else(|| Error::PrecisionExhausted("constant term unknown".into()));
        Ok([[c(&self.e[0][0])?, c(&self.e[0][1])?], [c(&self.e[1][0])?, c(&self.e[1][1])?]])
    }
    pub fn truncate(&self, n: i64) -> Mat2 {
        self.map(|s| s.truncate(n))
    }
    pub fn agrees_with(&self, o: &Mat2) -> bool {
        (0..2).all(|i| (0..2).all(|j| self.e[i][j].agrees_with(&o.e[i][j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unipotent_identity_from_u_move_witness() {
        let k = FieldCtx::prime(3).unwrap();
        let left = Mat2::from_terms(&k, [&[], &[(0, 1)], &[(0, -1)], &[(1, 2)]]);
        let right = Mat2::from_terms(&k, [&[(0, 2)], &[(1, -1)], &[(-1, 1)], &[]]);
        assert_eq!(left.mul(&right), Mat2::diag_u(&k, -1, 1));
    }

    #[test]
    fn inverse_of_monomial_determinant_is_exact() {
        let k = FieldCtx::prime(5).unwrap();
        let b = Mat2::from_terms(&k, [&[(-1, 1)], &[(0, 3), (2, 1)], &[], &[(1, 1)]]);
        let binv = b.inv(10).unwrap();
        assert!(binv.is_exact());
        assert_eq!(b.mul(&binv), Mat2::identity(&k));
    }

    #[test]
    fn singular_matrix() {
        let k = FieldCtx::prime(3).unwrap();
        let b = Mat2::from_terms(&k, [&[(0, 1)], &[(0, 1)], &[(0, 1)], &[(0, 1)]]);
        assert!(matches!(b.inv(5), Err(Error::SingularBlock { .. })));
    }
}
