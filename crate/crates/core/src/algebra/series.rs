//! Truncated Laurent series over a finite field with tracked precision.
//!
//! A [`Series`] stores the coefficients of `u^offset, u^(offset+1), ..` and an
//! optional absolute precision `N`: when present, every exponent `>= N` is
//! unknown. Without a precision the series is an exact Laurent polynomial.
//! A series with no stored coefficients and a finite precision is
//! zero-to-precision, which is a different value from the exact zero.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::{same_ctx, FieldCtx, FieldElem};
use crate::error::{Error, Result};

/// Result of [`Series::valuation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    /// A nonzero coefficient was found strictly below the precision.
    Finite(i64),
    /// Zero to precision: all known coefficients vanish, the valuation is `>= N`.
    AtLeast(i64),
    /// Exact zero.
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            _ => None,
        }
    }
    /// Lower bound on the valuation, `None` for the exact zero.
    pub fn lower_bound(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

/// Selector for [`ser_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerOp {
    Add,
    Sub,
    Mul,
    Inv,
}

#[derive(Clone)]
pub struct Series {
    ctx: Arc<FieldCtx>,
    offset: i64,
    coeffs: Vec<u32>,
    prec: Option<i64>,
}

fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl Series {
    /// Builds and normalizes a series; coefficients at or above `prec` are dropped.
    pub fn from_codes(ctx: &Arc<FieldCtx>, offset: i64, coeffs: Vec<u32>, prec: Option<i64>) -> Series {
        let mut s = Series { ctx: ctx.clone(), offset, coeffs, prec };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        if let Some(n) = self.prec {
            let keep = (n - self.offset).clamp(0, self.coeffs.len() as i64) as usize;
            self.coeffs.truncate(keep);
        }
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().position(|&c| c != 0).unwrap_or(self.coeffs.len());
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.offset += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.offset = 0;
        }
    }

    pub fn zero(ctx: &Arc<FieldCtx>) -> Series {
        Series { ctx: ctx.clone(), offset: 0, coeffs: Vec::new(), prec: None }
    }
    pub fn zero_to(ctx: &Arc<FieldCtx>, prec: i64) -> Series {
        Series { ctx: ctx.clone(), offset: 0, coeffs: Vec::new(), prec: Some(prec) }
    }
    pub fn one(ctx: &Arc<FieldCtx>) -> Series {
        Series::monomial(ctx, 1, 0)
    }
    /// `c * u^k` for a field code `c`.
    pub fn monomial(ctx: &Arc<FieldCtx>, code: u32, k: i64) -> Series {
        Series::from_codes(ctx, k, vec![code], None)
    }
    /// `u^k`.
    pub fn u_pow(ctx: &Arc<FieldCtx>, k: i64) -> Series {
        Series::monomial(ctx, 1, k)
    }
    pub fn constant(elem: &FieldElem) -> Series {
        Series::monomial(elem.ctx(), elem.code(), 0)
    }
    /// Laurent polynomial from `(exponent, integer coefficient)` pairs in `F_p`.
    pub fn from_terms(ctx: &Arc<FieldCtx>, terms: &[(i64, i64)]) -> Series {
        let mut acc = Series::zero(ctx);
        for &(k, c) in terms {
            acc = &acc + &Series::monomial(ctx, ctx.from_int(c), k);
        }
        acc
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }
    pub fn prec(&self) -> Option<i64> {
        self.prec
    }
    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }
    pub fn offset(&self) -> i64 {
        self.offset
    }
    pub fn codes(&self) -> &[u32] {
        &self.coeffs
    }
    /// Exponent one past the highest stored coefficient.
    pub fn end(&self) -> i64 {
        self.offset + self.coeffs.len() as i64
    }
    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec.is_none()
    }
    /// True if no nonzero coefficient is stored (exact zero or zero-to-precision).
    pub fn is_zero_to_precision(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `u^k`, `None` when `k` lies at or above the precision.
    pub fn coeff(&self, k: i64) -> Option<u32> {
        if let Some(n) = self.prec {
            if k >= n {
                return None;
            }
        }
        if k < self.offset || k >= self.end() {
            return Some(0);
        }
        Some(self.coeffs[(k - self.offset) as usize])
    }

    pub fn valuation(&self) -> Valuation {
        if let Some(&c) = self.coeffs.first() {
            debug_assert!(c != 0);
            Valuation::Finite(self.offset)
        } else {
            match self.prec {
                Some(n) => Valuation::AtLeast(n),
                None => Valuation::Infinite,
            }
        }
    }

    /// Lower bound on the exponents that may be nonzero; `None` for exact zero.
    fn val_bound(&self) -> Option<i64> {
        self.valuation().lower_bound()
    }

    /// Confirmed membership in `F[[u]]`: `Ok(true)` if every negative
    /// coefficient is known and zero, `Ok(false)` if some is known nonzero.
    pub fn is_integral(&self) -> Result<bool> {
        if let Some(&c) = self.coeffs.first() {
            if self.offset < 0 && c != 0 {
                return Ok(false);
            }
        }
        match self.prec {
            Some(n) if n < 0 => {
                Err(Error::PrecisionExhausted(format!("integrality undecided: series known only below u^{n}")))
            }
            _ => Ok(true),
        }
    }

    /// Forgets everything at or above `n`.
    pub fn truncate(&self, n: i64) -> Series {
        let prec = Some(self.prec.map_or(n, |p| p.min(n)));
        Series::from_codes(&self.ctx, self.offset, self.coeffs.clone(), prec)
    }

    /// Drops terms of exponent `>= n` and keeps the result exact; used to
    /// reduce entries modulo `u^n F[[u]]`.
    pub fn reduce_below(&self, n: i64) -> Result<Series> {
        if let Some(p) = self.prec {
            if p < n {
                return Err(Error::PrecisionExhausted(format!(
                    "reduction modulo u^{n} needs coefficients up to u^{}, known only below u^{p}",
                    n - 1
                )));
            }
        }
        Ok(Series::from_codes(&self.ctx, self.offset, self.coeffs.clone(), Some(n)).with_prec(None))
    }

    fn with_prec(mut self, prec: Option<i64>) -> Series {
        self.prec = prec;
        self.normalize();
        self
    }

    /// Multiplication by `u^k`.
    pub fn shift(&self, k: i64) -> Series {
        if self.coeffs.is_empty() {
            return Series { prec: self.prec.map(|n| n + k), ..self.clone() };
        }
        Series {
            ctx: self.ctx.clone(),
            offset: self.offset + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec.map(|n| n + k),
        }
    }

    /// Multiplication by a field constant (given as code).
    pub fn scale(&self, code: u32) -> Series {
        if code == 0 {
            // 0 * f is exactly zero regardless of the unknown tail
            return Series::zero(&self.ctx);
        }
        let coeffs = self.coeffs.iter().map(|&c| self.ctx.mul(c, code)).collect();
        Series { ctx: self.ctx.clone(), offset: self.offset, coeffs, prec: self.prec }
    }

    pub fn neg(&self) -> Series {
        let coeffs = self.coeffs.iter().map(|&c| self.ctx.neg(c)).collect();
        Series { ctx: self.ctx.clone(), offset: self.offset, coeffs, prec: self.prec }
    }

    fn add_impl(&self, other: &Series, negate: bool) -> Series {
        assert!(same_ctx(&self.ctx, &other.ctx), "series from different field contexts");
        let prec = min_prec(self.prec, other.prec);
        if self.coeffs.is_empty() && other.coeffs.is_empty() {
            return Series { ctx: self.ctx.clone(), offset: 0, coeffs: Vec::new(), prec };
        }
        let lo = match (self.coeffs.is_empty(), other.coeffs.is_empty()) {
            (true, _) => other.offset,
            (_, true) => self.offset,
            _ => self.offset.min(other.offset),
        };
        let hi = self.end().max(other.end());
        let hi = prec.map_or(hi, |n| hi.min(n));
        if hi <= lo {
            return Series { ctx: self.ctx.clone(), offset: 0, coeffs: Vec::new(), prec };
        }
        let mut out = vec![0u32; (hi - lo) as usize];
        for (j, &c) in self.coeffs.iter().enumerate() {
            let k = self.offset + j as i64;
            if k < hi {
                out[(k - lo) as usize] = c;
            }
        }
        for (j, &c) in other.coeffs.iter().enumerate() {
            let k = other.offset + j as i64;
            if k < hi {
                let slot = &mut out[(k - lo) as usize];
                let c = if negate { self.ctx.neg(c) } else { c };
                *slot = self.ctx.add(*slot, c);
            }
        }
        Series::from_codes(&self.ctx, lo, out, prec)
    }

    fn mul_impl(&self, other: &Series) -> Series {
        assert!(same_ctx(&self.ctx, &other.ctx), "series from different field contexts");
        let (vf, vg) = match (self.val_bound(), other.val_bound()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Series::zero(&self.ctx),
        };
        let prec = min_prec(self.prec.map(|n| n + vg), other.prec.map(|n| n + vf));
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Series { ctx: self.ctx.clone(), offset: 0, coeffs: Vec::new(), prec };
        }
        let lo = self.offset + other.offset;
        let mut len = self.coeffs.len() + other.coeffs.len() - 1;
        if let Some(n) = prec {
            len = len.min((n - lo).max(0) as usize);
        }
        let mut out = vec![0u32; len];
        let ctx = &self.ctx;
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 || i >= len {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if b != 0 {
                    out[i + j] = ctx.add(out[i + j], ctx.mul(a, b));
                }
            }
        }
        Series::from_codes(ctx, lo, out, prec)
    }

    /// Multiplicative inverse. `cap` bounds the absolute precision of the
    /// result when the inverse is an infinite series.
    pub fn inv(&self, cap: i64) -> Result<Series> {
        let v = match self.valuation() {
            Valuation::Finite(v) => v,
            Valuation::AtLeast(n) => {
                return Err(Error::PrecisionExhausted(format!("cannot invert a series that is zero below u^{n}")))
            }
            Valuation::Infinite => return Err(Error::DivisionByZero),
        };
        let ctx = &self.ctx;
        let lead_inv = ctx.inv(self.coeffs[0])?;
        if self.coeffs.len() == 1 && self.prec.is_none() {
            return Ok(Series::monomial(ctx, lead_inv, -v));
        }
        let mut target = cap.max(-v + 1);
        if let Some(n) = self.prec {
            target = target.min(n - 2 * v);
        }
        let count = (target + v) as usize;
        let mut h = vec![0u32; count];
        h[0] = lead_inv;
        for k in 1..count {
            let mut acc = 0u32;
            for j in 1..=k.min(self.coeffs.len() - 1) {
                acc = ctx.add(acc, ctx.mul(self.coeffs[j], h[k - j]));
            }
            h[k] = ctx.neg(ctx.mul(lead_inv, acc));
        }
        Ok(Series::from_codes(ctx, -v, h, Some(target)))
    }

    /// `f(u) -> f(u^p)`: exponents and precision scale by `p`, coefficients
    /// stay fixed.
    pub fn frobsub(&self) -> Series {
        let p = self.ctx.p() as i64;
        if self.coeffs.is_empty() {
            return Series { prec: self.prec.map(|n| n * p), ..self.clone() };
        }
        let mut coeffs = vec![0u32; (self.coeffs.len() - 1) * p as usize + 1];
        for (j, &c) in self.coeffs.iter().enumerate() {
            coeffs[j * p as usize] = c;
        }
        Series { ctx: self.ctx.clone(), offset: self.offset * p, coeffs, prec: self.prec.map(|n| n * p) }
    }

    /// Coefficient-wise agreement on the common window of known exponents.
    pub fn agrees_with(&self, other: &Series) -> bool {
        let prec = min_prec(self.prec, other.prec);
        let diff = self - other;
        match prec {
            None => diff.is_exact_zero(),
            Some(_) => diff.coeffs.is_empty(),
        }
    }

    pub fn to_record(&self) -> SeriesRecord {
        SeriesRecord {
            offset: self.offset,
            coeffs: self.coeffs.iter().map(|&c| self.ctx.coeffs_of(c)).collect(),
            prec: self.prec,
        }
    }

    pub fn from_record(ctx: &Arc<FieldCtx>, rec: &SeriesRecord) -> Result<Series> {
        let codes = rec.coeffs.iter().map(|c| ctx.code_from_coeffs(c)).collect::<Result<Vec<_>>>()?;
        if let Some(n) = rec.prec {
            if rec.offset + codes.len() as i64 > n
                && codes.iter().rev().take((rec.offset + codes.len() as i64 - n) as usize).any(|&c| c != 0)
            {
                return Err(Error::InvalidInstance(format!(
                    "series record stores coefficients at or above its precision u^{n}"
                )));
            }
        }
        Ok(Series::from_codes(ctx, rec.offset, codes, rec.prec))
    }
}

impl PartialEq for Series {
    fn eq(&self, other: &Self) -> bool {
        same_ctx(&self.ctx, &other.ctx)
            && self.prec == other.prec
            && self.coeffs == other.coeffs
            && (self.coeffs.is_empty() || self.offset == other.offset)
    }
}
impl Eq for Series {}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let k = self.offset + j as i64;
            let coeff = if c == 1 && k != 0 {
                String::new()
            } else if self.ctx.degree() == 1 {
                format!("{c}")
            } else {
                format!("{:?}", self.ctx.coeffs_of(c))
            };
            match k {
                0 => write!(f, "{coeff}")?,
                1 => write!(f, "{coeff}u")?,
                _ => write!(f, "{coeff}u^{k}")?,
            }
        }
        match self.prec {
            Some(n) => {
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "O(u^{n})")
            }
            None if first => write!(f, "0"),
            None => Ok(()),
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.partial_cmp(b),
            (Valuation::Infinite, Valuation::Infinite) => Some(Ordering::Equal),
            _ => None,
        }
    }
}

impl<'a> std::ops::Add<&'a Series> for &'a Series {
    type Output = Series;
    fn add(self, rhs: &'a Series) -> Series {
        self.add_impl(rhs, false)
    }
}
impl<'a> std::ops::Sub<&'a Series> for &'a Series {
    type Output = Series;
    fn sub(self, rhs: &'a Series) -> Series {
        self.add_impl(rhs, true)
    }
}
impl<'a> std::ops::Mul<&'a Series> for &'a Series {
    type Output = Series;
    fn mul(self, rhs: &'a Series) -> Series {
        self.mul_impl(rhs)
    }
}
impl std::ops::Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series::neg(self)
    }
}

/// Checked arithmetic entry point. `g` is ignored for `Inv`; `cap` bounds
/// the precision of infinite inverses.
pub fn ser_arith(f: &Series, g: &Series, kind: SerOp, cap: i64) -> Result<Series> {
    if kind != SerOp::Inv && !same_ctx(f.ctx(), g.ctx()) {
        return Err(Error::CtxMismatch);
    }
    Ok(match kind {
        SerOp::Add => f + g,
        SerOp::Sub => f - g,
        SerOp::Mul => f * g,
        SerOp::Inv => f.inv(cap)?,
    })
}

pub fn ser_valuation(f: &Series) -> Valuation {
    f.valuation()
}

pub fn ser_frobsub(f: &Series) -> Series {
    f.frobsub()
}

/// Serialized form: `{offset, coeffs, prec}` with each coefficient a residue list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub offset: i64,
    pub coeffs: Vec<Vec<u32>>,
    pub prec: Option<i64>,
}
