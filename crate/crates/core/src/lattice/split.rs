//! Splitting a multiplicative-by-etale extension.
//!
//! For phi-matrices `(a_i, b_i; 0, u^e c_i)` with `a_i, c_i` units, the base
//! change `(1, v_i; 0, 1)` clears the off-diagonal iff
//! `a_i v_(i+1) = b_i + u^e c_i phi(v_i)`. The degree-`k` coefficients of
//! `v_(i+1)` only involve degrees `< k` of `v_i`, so iteration converges.

use crate::algebra::{Mat2, Series, Valuation};
use crate::error::{Error, Result};
use crate::phimod::{InstanceParams, MatrixTuple};

fn check_inputs(a: &[Series], b: &[Series], c: &[Series]) -> Result<()> {
    if a.is_empty() || a.len() != b.len() || a.len() != c.len() {
        return Err(Error::InvalidInstance("split data must have n entries per diagonal".into()));
    }
    for (i, s) in a.iter().chain(c).enumerate() {
        if s.valuation() != Valuation::Finite(0) {
            return Err(Error::InvalidInstance(format!("diagonal entry {} is not a unit", i % a.len() + 1)));
        }
    }
    Ok(())
}

/// Solve for `(v_i)` to the working precision.
pub fn lat_split_extension(params: &InstanceParams, a: &[Series], b: &[Series], c: &[Series]) -> Result<Vec<Series>> {
    check_inputs(a, b, c)?;
    let n = a.len();
    let ctx = a[0].ctx().clone();
    let target = params.precision;
    let ue = Series::u_pow(&ctx, params.e);
    let ainv = a.iter().map(|s| s.inv(target)).collect::<Result<Vec<_>>>()?;
    let mut v = vec![Series::zero(&ctx); n];
    let max_cycles = target.max(1) as usize * n + 4;
    for _ in 0..max_cycles {
        let before = v.clone();
        for i in 0..n {
            let rhs = &b[i] + &(&(&ue * &c[i]) * &v[i].frobsub());
            v[(i + 1) % n] = (&ainv[i] * &rhs).truncate(target);
        }
        let settled = v.iter().zip(&before).all(|(x, y)| {
            x.agrees_with(y) && x.prec().is_none_or(|p| p >= target) && y.prec().is_none_or(|p| p >= target)
        });
        if settled || v.iter().all(Series::is_exact_zero) {
            return Ok(v);
        }
    }
    Err(Error::PrecisionExhausted("splitting recursion did not settle".into()))
}

/// `a_i v_(i+1) - b_i - u^e c_i phi(v_i)` for every `i`.
pub fn split_residuals(params: &InstanceParams, a: &[Series], b: &[Series], c: &[Series], v: &[Series]) -> Vec<Series> {
    let n = a.len();
    let ue = Series::u_pow(a[0].ctx(), params.e);
    (0..n).map(|i| &(&(&a[i] * &v[(i + 1) % n]) - &b[i]) - &(&(&ue * &c[i]) * &v[i].frobsub())).collect()
}

/// The unipotent tuple `((1, v_i; 0, 1))_i`.
pub fn split_base_change(v: &[Series]) -> MatrixTuple {
    let ctx = v[0].ctx();
    MatrixTuple(v.iter().map(|x| Mat2::new(Series::one(ctx), x.clone(), Series::zero(ctx), Series::one(ctx))).collect())
}
