//! Ordinarity: existence of a phi-stable saturated line with induced
//! valuations all 0 and quotient valuations all `e`, or the reverse order.
//!
//! Both orders are detected by the constant-term product `P = G_1(0)..G_n(0)`:
//! an etale line produces the eigenvalue `prod lambda_i(0) != 0`, and so does
//! an etale quotient, while a lattice with neither has `P` nilpotent. When
//! `tr P != 0` the etale line is lifted from the residual eigenvector by the
//! contracting recursion `x_(i+1) ~ phi(x_i) G_i`.

use std::sync::Arc;

use super::LatticePoint;
use crate::algebra::{FieldCtx, Mat2, Series, Valuation};
use crate::error::{Error, Result};
use crate::phimod::InstanceParams;

/// A phi-stable line: `phi(x_i) G_i = lambda_i x_(i+1)` with `x_i` primitive
/// coordinates relative to the lattice basis `B_i`.
#[derive(Debug, Clone)]
pub struct StableLine {
    pub coords: Vec<[Series; 2]>,
    pub lambdas: Vec<Series>,
    pub valuations: Vec<Valuation>,
}

#[derive(Debug, Clone)]
pub enum Ordinarity {
    Ordinary(StableLine),
    NonOrdinary,
}

impl Ordinarity {
    pub fn is_ordinary(&self) -> bool {
        matches!(self, Ordinarity::Ordinary(_))
    }
}

pub(crate) fn row_times(x: &[Series; 2], g: &Mat2) -> [Series; 2] {
    let col = |j: usize| &(&x[0] * &g.e[0][j]) + &(&x[1] * &g.e[1][j]);
    [col(0), col(1)]
}

fn residual_row(ctx: &FieldCtx, x: [u32; 2], g: [[u32; 2]; 2]) -> [u32; 2] {
    let col = |j: usize| ctx.add(ctx.mul(x[0], g[0][j]), ctx.mul(x[1], g[1][j]));
    [col(0), col(1)]
}

/// Decide ordinarity and return the lifted etale line when ordinary.
pub fn lat_is_ordinary(params: &InstanceParams, l: &LatticePoint) -> Result<Ordinarity> {
    if !l.is_point() {
        return Err(Error::InvalidInstance(format!("lattice {} is not a moduli point", l.id())));
    }
    if l.residual_trace()? == 0 {
        return Ok(Ordinarity::NonOrdinary);
    }
    let ctx = l.ctx().clone();
    let n = l.n();
    let bars = l.g.0.iter().map(Mat2::reduce_mod_u).collect::<Result<Vec<_>>>()?;
    let mut prod = [[1u32, 0], [0, 1]];
    for g in &bars {
        prod = [residual_row(&ctx, prod[0], *g), residual_row(&ctx, prod[1], *g)];
    }
    // P has rank one, so a nonzero row of P is a left eigenvector for tr P.
    let start = if prod[0] != [0, 0] { prod[0] } else { prod[1] };
    let mut xbar = vec![start];
    for g in &bars[..n - 1] {
        let next = residual_row(&ctx, *xbar.last().expect("nonempty"), *g);
        xbar.push(next);
    }
    let pivots: Vec<usize> = xbar.iter().map(|x| usize::from(x[0] == 0)).collect();
    let normalize = |x: [u32; 2], j: usize| -> Result<[Series; 2]> {
        let s = ctx.inv(x[j])?;
        Ok([Series::monomial(&ctx, ctx.mul(x[0], s), 0), Series::monomial(&ctx, ctx.mul(x[1], s), 0)])
    };
    let mut coords = xbar.iter().zip(&pivots).map(|(x, &j)| normalize(*x, j)).collect::<Result<Vec<_>>>()?;

    let target = params.precision;
    let mut lambdas = Vec::new();
    let mut converged = false;
    for _ in 0..64 {
        let previous = coords[0].clone();
        lambdas.clear();
        for i in 0..n {
            let z = row_times(&[coords[i][0].frobsub(), coords[i][1].frobsub()], &l.g.0[i]);
            let j = pivots[(i + 1) % n];
            let lambda = z[j].truncate(target);
            let linv = lambda.inv(target)?;
            let mut next = [(&z[0] * &linv).truncate(target), (&z[1] * &linv).truncate(target)];
            next[j] = Series::one(&ctx);
            lambdas.push(lambda);
            coords[(i + 1) % n] = next;
        }
        let settled = (0..2).all(|k| {
            coords[0][k].agrees_with(&previous[k])
                && coords[0][k].prec().is_none_or(|p| p >= target)
                && previous[k].prec().is_none_or(|p| p >= target)
        });
        if settled {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::PrecisionExhausted("etale line lift did not settle".into()));
    }
    for i in 0..n {
        let z = row_times(&[coords[i][0].frobsub(), coords[i][1].frobsub()], &l.g.0[i]);
        let x = &coords[(i + 1) % n];
        for k in 0..2 {
            let r = &z[k] - &(&lambdas[i] * &x[k]);
            if !r.truncate(target).is_zero_to_precision() {
                return Err(Error::InternalInvariantViolation(format!(
                    "lifted line fails stability at block {}",
                    i + 1
                )));
            }
        }
    }
    let valuations = lambdas.iter().map(Series::valuation).collect();
    Ok(Ordinarity::Ordinary(StableLine { coords, lambdas, valuations }))
}

fn polys_mod(ctx: &Arc<FieldCtx>, k: usize, start: usize) -> Vec<Series> {
    let q = ctx.size() as u64;
    let free = k - start;
    let total = q.pow(free as u32);
    (0..total)
        .map(|mut idx| {
            let mut codes = vec![0u32; k];
            for c in codes.iter_mut().skip(start) {
                *c = (idx % q) as u32;
                idx /= q;
            }
            Series::from_codes(ctx, 0, codes, None)
        })
        .collect()
}

/// All tuples of lines mod `u^k` that are phi-stable mod `u^k`, found by
/// exhaustive search, with the valuations (capped at `k`) of the induced
/// phi-scalars. Intended for cross-checks on tiny instances.
pub fn lifted_stable_lines_bruteforce(l: &LatticePoint, k: usize) -> Vec<Vec<Valuation>> {
    let ctx = l.ctx().clone();
    let one = Series::one(&ctx);
    let mut lines: Vec<([Series; 2], usize)> = Vec::new();
    for t in polys_mod(&ctx, k, 0) {
        lines.push(([one.clone(), t], 0));
    }
    for s in polys_mod(&ctx, k, 1) {
        lines.push(([s, one.clone()], 1));
    }
    let n = l.n();
    let k = k as i64;
    let step = |i: usize, a: &[Series; 2], b: &([Series; 2], usize)| -> Option<Valuation> {
        let z = row_times(&[a[0].frobsub(), a[1].frobsub()], &l.g.0[i]);
        let (x, j) = b;
        let lambda = z[*j].truncate(k);
        let other = 1 - j;
        let r = (&z[other] - &(&lambda * &x[other])).truncate(k);
        r.is_zero_to_precision().then(|| lambda.valuation())
    };
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            match step(i, &lines[choice[i]].0, &lines[choice[(i + 1) % n]]) {
                Some(v) => vals.push(v),
                None => break,
            }
        }
        if vals.len() == n {
            out.push(vals);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return out;
            }
            choice[pos] += 1;
            if choice[pos] < lines.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}
