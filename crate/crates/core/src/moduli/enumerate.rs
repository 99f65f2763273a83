//! Exhaustive enumeration of moduli points over the coefficient field.
//!
//! Every point `B` has `v(det B_i) = d_i` from the determinant profile. The
//! spread `D_i = m_2 - m_1` of the elementary divisors of `B_i` satisfies
//! `p D_i <= e + H_i + D_(i+1)` with `H_i` the spread of `A_i`, so all
//! Hermite entries of `B_i` have valuation `>= (d_i - D_i) / 2`. This makes
//! the candidate set finite and the search complete.
//!
//! For `n >= 2` one component (the one with most candidates) is not listed:
//! with the others fixed, the two phi-matrices touching it are affine in its
//! off-diagonal coefficients, and integrality is a linear system over `F`.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use super::linsolve::solve_affine;
use super::{Enumeration, SearchBounds, SearchStatus};
use crate::algebra::{FieldCtx, Mat2, Series};
use crate::error::{Error, Result};
use crate::lattice::{lat_det_profile, lattice_from_canonical, LatticePoint};
use crate::phimod::{InstanceParams, MatrixTuple};

/// Upper bounds on the elementary-divisor spread of every point, per
/// component, or `None` if no lattice can satisfy them.
pub fn tree_distance_bounds(params: &InstanceParams, a: &MatrixTuple, d: &[i64]) -> Result<Option<Vec<i64>>> {
    let n = a.len();
    let p = params.p();
    let dets = a.det_valuations()?;
    let h: Vec<i64> = (0..n).map(|i| dets[i] - 2 * a.0[i].min_valuation().unwrap_or(0)).collect();
    let hmax = *h.iter().max().expect("n >= 1");
    let start = (params.e + hmax).div_euclid(p - 1);
    let mut bound = vec![start; n];
    for _ in 0..(n + 2) {
        let mut changed = false;
        for i in (0..n).rev() {
            let mut b = bound[i].min((params.e + h[i] + bound[(i + 1) % n]).div_euclid(p));
            if (b - d[i]).rem_euclid(2) == 1 {
                b -= 1;
            }
            if b != bound[i] {
                bound[i] = b;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(bound.iter().all(|&b| b >= 0).then_some(bound))
}

struct Cand {
    b: Mat2,
    /// `phi(B) A_i`
    phib_a: Mat2,
    binv: Mat2,
}

fn poly_from_codes(ctx: &Arc<FieldCtx>, lo: i64, codes: Vec<u32>) -> Series {
    Series::from_codes(ctx, lo, codes, None)
}

/// Number of candidates in a component, saturating.
fn count_candidates(q: u64, d: i64, xmin: i64) -> u64 {
    let mut total: u64 = 0;
    for a in xmin..=(d - xmin) {
        let w = (d - a - xmin).max(0) as u32;
        total = total.saturating_add(q.checked_pow(w).unwrap_or(u64::MAX));
    }
    total
}

fn diag_shapes(d: i64, xmin: i64) -> impl Iterator<Item = (i64, i64)> {
    (xmin..=(d - xmin)).map(move |a| (a, d - a))
}

fn build_candidates(ctx: &Arc<FieldCtx>, ai: &Mat2, d: i64, xmin: i64) -> Vec<Cand> {
    let q = ctx.size() as u64;
    let mut out = Vec::new();
    for (a, b) in diag_shapes(d, xmin) {
        let w = (b - xmin).max(0) as usize;
        let total = q.pow(w as u32);
        for mut idx in 0..total {
            let mut codes = vec![0u32; w];
            for c in codes.iter_mut() {
                *c = (idx % q) as u32;
                idx /= q;
            }
            let v = poly_from_codes(ctx, xmin, codes);
            let m = Mat2::new(Series::u_pow(ctx, a), v, Series::zero(ctx), Series::u_pow(ctx, b));
            out.push(cand_of(m, ai));
        }
    }
    out
}

fn cand_of(b: Mat2, ai: &Mat2) -> Cand {
    let binv = b.inv(0).expect("canonical blocks have monomial determinant");
    let phib_a = b.frobsub().mul(ai);
    Cand { b, phib_a, binv }
}

struct Search<'a> {
    params: &'a InstanceParams,
    a: &'a MatrixTuple,
    d: Vec<i64>,
    xmin: Vec<i64>,
    budget: u64,
    explored: AtomicU64,
    exhausted: AtomicBool,
}

impl Search<'_> {
    fn tick(&self, k: u64) -> bool {
        let before = self.explored.fetch_add(k.min(1 << 48), Ordering::Relaxed);
        if before.saturating_add(k) > self.budget {
            self.exhausted.store(true, Ordering::Relaxed);
            return false;
        }
        !self.exhausted.load(Ordering::Relaxed)
    }

    fn finish(&self, blocks: Vec<Mat2>) -> Result<Option<LatticePoint>> {
        let l = lattice_from_canonical(self.params, self.a, MatrixTuple(blocks))?;
        if !l.is_point() {
            return Err(Error::InternalInvariantViolation(format!(
                "enumerated lattice {} fails the point predicate: {}",
                l.id(),
                l.check
            )));
        }
        Ok(Some(l))
    }

    /// The linear step: solve for the off-diagonal of component `s`.
    fn solve_component(&self, s: usize, fixed: &[Option<&Cand>]) -> Result<Vec<LatticePoint>> {
        let n = self.a.len();
        let ctx = self.a.ctx();
        let prev = fixed[(s + n - 1) % n].expect("fixed");
        let next = fixed[(s + 1) % n].expect("fixed");
        let mut out = Vec::new();
        for (ea, eb) in diag_shapes(self.d[s], self.xmin[s]) {
            let lo = self.xmin[s];
            let nvars = (eb - lo).max(0) as usize;
            let g_of = |v: Series| {
                let m = Mat2::new(Series::u_pow(ctx, ea), v, Series::zero(ctx), Series::u_pow(ctx, eb));
                let cur = m.frobsub().mul(&self.a.0[s]).mul(&next.binv);
                let before = prev.phib_a.mul(&m.inv(0).expect("monomial det"));
                [cur, before]
            };
            let g0 = g_of(Series::zero(ctx));
            let diffs: Vec<[Mat2; 2]> = (0..nvars)
                .map(|k| {
                    let g = g_of(Series::u_pow(ctx, lo + k as i64));
                    [g[0].sub(&g0[0]), g[1].sub(&g0[1])]
                })
                .collect();
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            let mut inconsistent = false;
            for mi in 0..2 {
                for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let mut low = g0[mi].e[r][c].offset();
                    for dk in &diffs {
                        low = low.min(dk[mi].e[r][c].offset());
                    }
                    for t in low..0 {
                        let row: Vec<u32> = diffs.iter().map(|dk| dk[mi].e[r][c].coeff(t).unwrap_or(0)).collect();
                        let b = ctx.neg(g0[mi].e[r][c].coeff(t).unwrap_or(0));
                        if row.iter().all(|&x| x == 0) {
                            inconsistent |= b != 0;
                            continue;
                        }
                        rows.push(row);
                        rhs.push(b);
                    }
                }
            }
            if inconsistent {
                continue;
            }
            let Some(space) = solve_affine(ctx, &rows, &rhs, nvars) else { continue };
            let q = ctx.size() as u64;
            let count = q.checked_pow(space.dimension() as u32).unwrap_or(u64::MAX);
            if !self.tick(count) {
                return Ok(out);
            }
            for sol in space.points(ctx) {
                let v = poly_from_codes(ctx, lo, sol);
                let mut blocks: Vec<Mat2> =
                    fixed.iter().map(|c| c.map(|c| c.b.clone()).unwrap_or_else(|| Mat2::zero(ctx))).collect();
                blocks[s] = Mat2::new(Series::u_pow(ctx, ea), v, Series::zero(ctx), Series::u_pow(ctx, eb));
                if let Some(l) = self.finish(blocks)? {
                    out.push(l);
                }
            }
        }
        Ok(out)
    }

    fn dfs<'c>(
        &self,
        order: &[usize],
        depth: usize,
        s: usize,
        cands: &'c [Vec<Cand>],
        fixed: &mut Vec<Option<&'c Cand>>,
        out: &mut Vec<LatticePoint>,
    ) -> Result<()> {
        if depth == order.len() {
            out.extend(self.solve_component(s, fixed)?);
            return Ok(());
        }
        let comp = order[depth];
        for c in &cands[comp] {
            if !self.tick(1) {
                return Ok(());
            }
            if depth > 0 {
                let prev = fixed[order[depth - 1]].expect("fixed");
                if !prev.phib_a.mul(&c.binv).is_integral()? {
                    continue;
                }
            }
            fixed[comp] = Some(c);
            self.dfs(order, depth + 1, s, cands, fixed, out)?;
            fixed[comp] = None;
        }
        Ok(())
    }
}

/// Enumerate every moduli point within the bounds.
pub fn mod_enumerate(params: &InstanceParams, a: &MatrixTuple, bounds: &SearchBounds) -> Result<Enumeration> {
    let n = a.len();
    let ctx = a.ctx().clone();
    let Some(d) = lat_det_profile(params, a)? else {
        return Ok(Enumeration::empty(None, SearchStatus::Complete));
    };
    let Some(derived) = tree_distance_bounds(params, a, &d)? else {
        return Ok(Enumeration::empty(Some(d), SearchStatus::Complete));
    };
    let mut status = SearchStatus::Complete;
    let dist: Vec<i64> = derived
        .iter()
        .zip(&d)
        .map(|(&b, &di)| match bounds.max_tree_distance {
            Some(cap) if cap < b => {
                status = SearchStatus::Bounded;
                let c = if (cap - di).rem_euclid(2) == 1 { cap - 1 } else { cap };
                c.max(-1)
            }
            _ => b,
        })
        .collect();
    if dist.iter().any(|&x| x < 0) {
        return Ok(Enumeration::empty(Some(d), status));
    }
    let xmin: Vec<i64> = (0..n).map(|i| (d[i] - dist[i]).div_euclid(2)).collect();
    let q = ctx.size() as u64;
    let counts: Vec<u64> = (0..n).map(|i| count_candidates(q, d[i], xmin[i])).collect();
    let search = Search {
        params,
        a,
        d: d.clone(),
        xmin: xmin.clone(),
        budget: bounds.budget,
        explored: AtomicU64::new(0),
        exhausted: AtomicBool::new(false),
    };
    let mut points = Vec::new();
    if n == 1 {
        if counts[0] > bounds.budget {
            return Ok(Enumeration { explored: 0, ..Enumeration::empty(Some(d), SearchStatus::BudgetExceeded) });
        }
        let cands = build_candidates(&ctx, &a.0[0], d[0], xmin[0]);
        let found: Vec<Result<Option<LatticePoint>>> = cands
            .par_iter()
            .map(|c| {
                if !search.tick(1) {
                    return Ok(None);
                }
                if !c.phib_a.mul(&c.binv).is_integral()? {
                    return Ok(None);
                }
                search.finish(vec![c.b.clone()])
            })
            .collect();
        for f in found {
            if let Some(l) = f? {
                points.push(l);
            }
        }
    } else {
        let s = (0..n).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).expect("n >= 2");
        let listed: u64 = (0..n).filter(|&i| i != s).map(|i| counts[i]).fold(0u64, u64::saturating_add);
        if listed > bounds.budget {
            return Ok(Enumeration::empty(Some(d), SearchStatus::BudgetExceeded));
        }
        let cands: Vec<Vec<Cand>> =
            (0..n).map(|i| if i == s { Vec::new() } else { build_candidates(&ctx, &a.0[i], d[i], xmin[i]) }).collect();
        let order: Vec<usize> = (1..n).map(|k| (s + k) % n).collect();
        let first = order[0];
        let found: Vec<Result<Vec<LatticePoint>>> = cands[first]
            .par_iter()
            .map(|c| {
                let mut fixed: Vec<Option<&Cand>> = vec![None; n];
                fixed[first] = Some(c);
                let mut out = Vec::new();
                if search.tick(1) {
                    search.dfs(&order, 1, s, &cands, &mut fixed, &mut out)?;
                }
                Ok(out)
            })
            .collect();
        for f in found {
            points.extend(f?);
        }
    }
    points.sort_by(|x, y| x.id().cmp(y.id()));
    points.dedup_by(|x, y| x.basis == y.basis);
    if search.exhausted.load(Ordering::Relaxed) {
        status = SearchStatus::BudgetExceeded;
    }
    Ok(Enumeration {
        points,
        status,
        explored: search.explored.load(Ordering::Relaxed),
        profile: Some(d),
        tree_bounds: dist,
    })
}
