//! Bounded search for a nilpotent connection between two moduli points.
//!
//! Work in coordinates of the first lattice, so `L1 = F[[u]]^2` and
//! `L2 = F[[u]]^2 R`. A rank-one nilpotent `N = gamma c r` (with `r c = 0`)
//! gives `(1 + N) L1 = L2` iff `(1 + N) R^-1` is integral. The line `r` must
//! meet `L1` and `L2` in the same submodule; such lines pass through the
//! midpoint `L1 cap L2`, so candidates are `m_2` and `m_1 + c m_2` for a
//! Hermite basis `(m_1, m_2)` of the intersection, optionally perturbed by a
//! few higher terms. `gamma` is the polar part forced by integrality.
//!
//! The re-basing `C` of the connection data is not searched: `(C, N)` and
//! `(I, C^-1 N C)` describe the same edge.

use std::sync::Arc;

use super::OracleBounds;
use crate::algebra::{FieldCtx, Mat2, Series};
use crate::certify::{EdgeWitness, MoveDir, WitnessKind};
use crate::error::Result;
use crate::lattice::{hermite_block, hermite_rows, umove_basis, LatticePoint};
use crate::phimod::{InstanceParams, MatrixTuple};

fn transpose(m: &Mat2) -> Mat2 {
    Mat2::new(m.e[0][0].clone(), m.e[1][0].clone(), m.e[0][1].clone(), m.e[1][1].clone())
}

/// `L2` in `L1`-coordinates.
pub fn relative_position(l1: &Mat2, l2: &Mat2, cap: i64) -> Result<Mat2> {
    hermite_block(&l2.mul(&l1.inv(cap)?), cap)
}

/// Hermite basis of `F[[u]]^2 cap F[[u]]^2 R`.
fn intersection(r: &Mat2, cap: i64) -> Result<Mat2> {
    let ctx = r.ctx();
    let dual = transpose(&r.inv(cap)?);
    let rows = [
        [Series::one(ctx), Series::zero(ctx)],
        [Series::zero(ctx), Series::one(ctx)],
        [dual.e[0][0].clone(), dual.e[0][1].clone()],
        [dual.e[1][0].clone(), dual.e[1][1].clone()],
    ];
    let sum = hermite_rows(&rows, cap)?;
    hermite_block(&transpose(&sum.inv(cap)?), cap)
}

fn candidate_lines(ctx: &Arc<FieldCtx>, m: &Mat2, bounds: &OracleBounds) -> Vec<[Series; 2]> {
    let m1 = [m.e[0][0].clone(), m.e[0][1].clone()];
    let m2 = [m.e[1][0].clone(), m.e[1][1].clone()];
    let comb = |c: &Series| [&m1[0] + &(c * &m2[0]), &m1[1] + &(c * &m2[1])];
    let mut out = vec![m2.clone()];
    for c in 0..ctx.size() {
        let base = Series::monomial(ctx, c, 0);
        out.push(comb(&base));
        if bounds.line_terms > 0 {
            for j in 1..=bounds.line_window {
                for c2 in 1..ctx.size() {
                    out.push(comb(&(&base + &Series::monomial(ctx, c2, j))));
                }
            }
        }
    }
    out
}

/// All nilpotents in the bounded family with `hermite(1 + N) = R`.
fn nilpotents_for(ctx: &Arc<FieldCtx>, r: &Mat2, bounds: &OracleBounds, cap: i64) -> Result<Vec<Mat2>> {
    let rinv = r.inv(cap)?;
    let m = intersection(r, cap)?;
    let mut out: Vec<Mat2> = Vec::new();
    for line in candidate_lines(ctx, &m, bounds) {
        let [r1, r2] = &line;
        let n0 = Mat2::new((r2 * r1).neg(), (r2 * r2).neg(), r1 * r1, r1 * r2);
        let k = n0.mul(&rinv);
        let Some(((j, l), mu)) = (0..2)
            .flat_map(|j| (0..2).map(move |l| (j, l)))
            .filter_map(|(j, l)| k.e[j][l].valuation().finite().map(|v| ((j, l), v)))
            .min_by_key(|&(_, v)| v)
        else {
            continue;
        };
        let full = (&rinv.e[j][l] * &k.e[j][l].inv(cap)?).neg();
        let Ok(gamma0) = full.reduce_below(-mu) else { continue };
        let mut gammas = vec![gamma0.clone()];
        for t in 0..bounds.gamma_terms as i64 {
            for c in 1..ctx.size() {
                gammas.push(&gamma0 + &Series::monomial(ctx, c, -mu + t));
            }
        }
        for g in gammas {
            let nil = n0.map(|s| &g * s);
            let check = rinv.add(&nil.mul(&rinv));
            if check.is_integral()? && !nil.is_exact_zero() && !out.contains(&nil) {
                out.push(nil);
            }
        }
    }
    Ok(out)
}

/// Search for an edge from `l1` to `l2`. `None` means only that nothing was
/// found within the bounds.
pub fn mod_adjacent(
    params: &InstanceParams,
    l1: &LatticePoint,
    l2: &LatticePoint,
    bounds: &OracleBounds,
) -> Result<Option<EdgeWitness>> {
    let n = l1.n();
    let ctx = l1.ctx().clone();
    let edge = |kind| EdgeWitness {
        source: l1.id().to_string(),
        target: l2.id().to_string(),
        source_basis: l1.basis.clone(),
        target_basis: l2.basis.clone(),
        kind,
    };
    if l1.basis == l2.basis {
        return Ok(Some(edge(WitnessKind::Nilpotent {
            c: MatrixTuple::identity(&ctx, n),
            n: MatrixTuple(vec![Mat2::zero(&ctx); n]),
        })));
    }
    if n >= 2 {
        for slot in 0..n {
            for dir in [MoveDir::Forward, MoveDir::Inverse] {
                if umove_basis(&l1.basis, slot, dir)? == l2.basis {
                    return Ok(Some(edge(WitnessKind::UMove { slot, dir })));
                }
            }
        }
    }
    let cap = params.precision;
    let mut distance = 0;
    let mut choices: Vec<Vec<Mat2>> = Vec::with_capacity(n);
    for i in 0..n {
        if l1.basis.0[i] == l2.basis.0[i] {
            choices.push(vec![Mat2::zero(&ctx)]);
            continue;
        }
        let r = relative_position(&l1.basis.0[i], &l2.basis.0[i], cap)?;
        distance += r.e[1][1].offset().abs();
        choices.push(Vec::new());
    }
    if bounds.max_pair_distance.is_some_and(|m| distance > m) {
        return Ok(None);
    }
    for i in 0..n {
        if choices[i].is_empty() {
            let r = relative_position(&l1.basis.0[i], &l2.basis.0[i], cap)?;
            choices[i] = nilpotents_for(&ctx, &r, bounds, cap)?;
            if choices[i].is_empty() {
                return Ok(None);
            }
        }
    }
    let phi: Vec<Vec<Mat2>> = choices.iter().map(|c| c.iter().map(Mat2::frobsub).collect()).collect();
    let ok_pair = |i: usize, x: usize, y: usize| -> Result<bool> {
        let j = (i + 1) % n;
        let (a, b) = (&choices[i][x], &choices[j][y]);
        if a.is_exact_zero() || b.is_exact_zero() {
            return Ok(true);
        }
        phi[i][x].mul(&l1.g.0[i]).mul(b).is_integral()
    };
    let mut pick = vec![0usize; n];
    let mut budget = bounds.budget;
    // depth-first over the cycle, pruning on consecutive pairs
    let mut depth = 0usize;
    loop {
        if budget == 0 {
            return Ok(None);
        }
        budget -= 1;
        let good = depth == 0 || ok_pair(depth - 1, pick[depth - 1], pick[depth])?;
        let closes = depth + 1 < n || ok_pair(n - 1, pick[n - 1], pick[0])?;
        if good && closes {
            if depth + 1 == n {
                let nil = MatrixTuple((0..n).map(|i| choices[i][pick[i]].clone()).collect());
                return Ok(Some(edge(WitnessKind::Nilpotent { c: MatrixTuple::identity(&ctx, n), n: nil })));
            }
            depth += 1;
            pick[depth] = 0;
            continue;
        }
        loop {
            pick[depth] += 1;
            if pick[depth] < choices[depth].len() {
                break;
            }
            if depth == 0 {
                return Ok(None);
            }
            depth -= 1;
        }
    }
}
