//! Finite fields `F_{p^m} = F_p[x]/(f)` with table-driven multiplication.
//!
//! Elements are encoded as integers: the residue vector `(c_0, .., c_{m-1})`
//! maps to `sum c_j p^j`. Addition works digit-wise, multiplication goes
//! through discrete logarithms with respect to a primitive element found at
//! construction time.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field cardinality for which log tables are built.
pub const MAX_FIELD_SIZE: u64 = 1 << 22;

/// Shareable, read-only description of a finite field of odd characteristic.
pub struct FieldCtx {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx").field("p", &self.p).field("m", &self.m).field("modulus", &self.modulus).finish()
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.modulus == other.modulus
    }
}
impl Eq for FieldCtx {}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// Dense polynomials over F_p, ascending coefficients, kept trimmed.
fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn inv_mod_p(a: u32, p: u32) -> u32 {
    // p is prime, so a^(p-2) is the inverse.
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    result as u32
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = trim(a.to_vec());
    let b = trim(b.to_vec());
    let db = b.len() - 1;
    let lead_inv = inv_mod_p(b[db], p);
    while r.len() > db {
        let dr = r.len() - 1;
        let c = (r[dr] as u64 * lead_inv as u64 % p as u64) as u32;
        for (j, &bj) in b.iter().enumerate() {
            let idx = dr - db + j;
            r[idx] = ((r[idx] as u64 + (p - c) as u64 * bj as u64) % p as u64) as u32;
        }
        r = trim(r);
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], f: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    poly_rem(&out.into_iter().map(|c| c as u32).collect::<Vec<_>>(), f, p)
}

fn poly_gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// `x^(p^d) mod f`.
fn frob_power_of_x(d: u32, f: &[u32], p: u32) -> Vec<u32> {
    let mut acc = poly_rem(&[0, 1], f, p);
    for _ in 0..d {
        // raise to the p-th power by square-and-multiply
        let mut result = vec![1u32];
        let mut base = acc.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = poly_mulmod(&result, &base, f, p);
            }
            base = poly_mulmod(&base, &base, f, p);
            e >>= 1;
        }
        acc = result;
    }
    acc
}

fn poly_sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(out)
}

/// Rabin-style irreducibility test for a monic `f` of degree `m` over `F_p`.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let f = trim(f.to_vec());
    if f.len() < 2 {
        return false;
    }
    let m = (f.len() - 1) as u32;
    let x = vec![0u32, 1];
    let full = poly_sub(&frob_power_of_x(m, &f, p), &poly_rem(&x, &f, p), p);
    if !full.is_empty() {
        return false;
    }
    for d in 1..m {
        if m % d != 0 {
            continue;
        }
        let h = poly_sub(&frob_power_of_x(d, &f, p), &poly_rem(&x, &f, p), p);
        let g = poly_gcd(&h, &f, p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

impl FieldCtx {
    /// Builds `F_p[x]/(modulus)`. The modulus is given in ascending degree,
    /// must be monic and irreducible; `p` must be an odd prime.
    pub fn new(p: u32, modulus: &[u32]) -> Result<Arc<FieldCtx>> {
        if !is_prime(p) || p == 2 {
            return Err(Error::InvalidField(format!("{p} is not an odd prime")));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidField("modulus coefficients must lie in [0, p)".into()));
        }
        let f = trim(modulus.to_vec());
        if f.len() < 2 || *f.last().unwrap() != 1 {
            return Err(Error::InvalidField("modulus must be monic of degree >= 1".into()));
        }
        let m = (f.len() - 1) as u32;
        let q = (p as u64)
            .checked_pow(m)
            .filter(|&q| q <= MAX_FIELD_SIZE)
            .ok_or_else(|| Error::InvalidField(format!("field of size {p}^{m} exceeds the table limit")))?
            as u32;
        if !is_irreducible(&f, p) {
            return Err(Error::InvalidField(format!("modulus {f:?} is reducible over F_{p}")));
        }
        let to_poly = |code: u32| -> Vec<u32> {
            let mut c = code;
            let mut v = Vec::with_capacity(m as usize);
            for _ in 0..m {
                v.push(c % p);
                c /= p;
            }
            trim(v)
        };
        let to_code = |poly: &[u32]| -> u32 { poly.iter().rev().fold(0u32, |acc, &c| acc * p + c) };
        let order = q - 1;
        let mut exp = vec![0u32; order as usize];
        let mut log = vec![0u32; q as usize];
        'search: for g in 2..q.max(3) {
            let gp = to_poly(g);
            let mut cur = vec![1u32];
            for k in 0..order {
                let code = to_code(&cur);
                if k > 0 && code == 1 {
                    continue 'search;
                }
                exp[k as usize] = code;
                log[code as usize] = k;
                cur = poly_mulmod(&cur, &gp, &f, p);
            }
            break;
        }
        Ok(Arc::new(FieldCtx { p, m, q, modulus: f, exp, log }))
    }

    /// The prime field `F_p` (modulus `x`, so residue vectors have length 1).
    pub fn prime(p: u32) -> Result<Arc<FieldCtx>> {
        FieldCtx::new(p, &[0, 1])
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn degree(&self) -> u32 {
        self.m
    }
    pub fn size(&self) -> u32 {
        self.q
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    // Raw code arithmetic. Codes are assumed to be valid for this context.

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if a == 0 {
            return b;
        }
        if b == 0 {
            return a;
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.m {
            let d = (a % self.p + b % self.p) % self.p;
            out += d * scale;
            scale *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        let mut a = a;
        let mut out = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.m {
            let d = (self.p - a % self.p) % self.p;
            out += d * scale;
            scale *= self.p;
            a /= self.p;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let order = self.q - 1;
        let k = (self.log[a as usize] as u64 + self.log[b as usize] as u64) % order as u64;
        self.exp[k as usize]
    }

    #[inline]
    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        let order = self.q - 1;
        let k = (order - self.log[a as usize]) % order;
        Ok(self.exp[k as usize])
    }

    /// `a^(p^r)`.
    pub fn frobenius(&self, a: u32, r: u32) -> u32 {
        if a == 0 {
            return 0;
        }
        let order = (self.q - 1) as u64;
        let mut k = self.log[a as usize] as u64;
        for _ in 0..(r % self.m) {
            k = k * self.p as u64 % order;
        }
        self.exp[k as usize]
    }

    /// Embeds an integer residue of `F_p`.
    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(self.p as i64) as u32
    }

    pub fn code_from_coeffs(&self, coeffs: &[u32]) -> Result<u32> {
        if coeffs.len() > self.m as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidField(format!(
                "residue list {coeffs:?} is not an element of F_{}^{}",
                self.p, self.m
            )));
        }
        Ok(coeffs.iter().rev().fold(0u32, |acc, &c| acc * self.p + c))
    }

    /// Ascending residue list of length `m`.
    pub fn coeffs_of(&self, code: u32) -> Vec<u32> {
        let mut c = code;
        (0..self.m)
            .map(|_| {
                let d = c % self.p;
                c /= self.p;
                d
            })
            .collect()
    }
}

/// Shares the context pointer-wise when possible.
pub fn same_ctx(a: &Arc<FieldCtx>, b: &Arc<FieldCtx>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A checked element of a [`FieldCtx`].
#[derive(Clone)]
pub struct FieldElem {
    ctx: Arc<FieldCtx>,
    code: u32,
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.ctx.coeffs_of(self.code))
    }
}

impl PartialEq for FieldElem {
    fn eq(&self, other: &Self) -> bool {
        same_ctx(&self.ctx, &other.ctx) && self.code == other.code
    }
}
impl Eq for FieldElem {}

/// Selector for [`fq_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqOp {
    Add,
    Sub,
    Mul,
    Inv,
    Neg,
}

impl FieldElem {
    pub fn new(ctx: &Arc<FieldCtx>, coeffs: &[u32]) -> Result<FieldElem> {
        let code = ctx.code_from_coeffs(coeffs)?;
        Ok(FieldElem { ctx: ctx.clone(), code })
    }
    pub fn from_code(ctx: &Arc<FieldCtx>, code: u32) -> FieldElem {
        debug_assert!(code < ctx.size());
        FieldElem { ctx: ctx.clone(), code }
    }
    pub fn zero(ctx: &Arc<FieldCtx>) -> FieldElem {
        FieldElem::from_code(ctx, 0)
    }
    pub fn one(ctx: &Arc<FieldCtx>) -> FieldElem {
        FieldElem::from_code(ctx, 1)
    }
    /// The class of `x` (a generator of the field over `F_p` when `m > 1`).
    pub fn generator(ctx: &Arc<FieldCtx>) -> FieldElem {
        let code = if ctx.degree() > 1 { ctx.p() } else { 0 };
        FieldElem::from_code(ctx, code)
    }
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }
    pub fn code(&self) -> u32 {
        self.code
    }
    pub fn coeffs(&self) -> Vec<u32> {
        self.ctx.coeffs_of(self.code)
    }
    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    fn check(&self, other: &FieldElem) -> Result<()> {
        if same_ctx(&self.ctx, &other.ctx) {
            Ok(())
        } else {
            Err(Error::CtxMismatch)
        }
    }

    pub fn add(&self, other: &FieldElem) -> Result<FieldElem> {
        self.check(other)?;
        Ok(FieldElem::from_code(&self.ctx, self.ctx.add(self.code, other.code)))
    }
    pub fn sub(&self, other: &FieldElem) -> Result<FieldElem> {
        self.check(other)?;
        Ok(FieldElem::from_code(&self.ctx, self.ctx.sub(self.code, other.code)))
    }
    pub fn mul(&self, other: &FieldElem) -> Result<FieldElem> {
        self.check(other)?;
        Ok(FieldElem::from_code(&self.ctx, self.ctx.mul(self.code, other.code)))
    }
    pub fn neg(&self) -> FieldElem {
        FieldElem::from_code(&self.ctx, self.ctx.neg(self.code))
    }
    pub fn inv(&self) -> Result<FieldElem> {
        Ok(FieldElem::from_code(&self.ctx, self.ctx.inv(self.code)?))
    }
    /// `a^(p^r)`; the identity for `r` a multiple of `m`.
    pub fn frobenius(&self, r: u32) -> FieldElem {
        FieldElem::from_code(&self.ctx, self.ctx.frobenius(self.code, r))
    }
}

/// Binary/unary field operation dispatch. `b` is ignored for `Inv` and `Neg`.
pub fn fq_arith(a: &FieldElem, b: &FieldElem, kind: FqOp) -> Result<FieldElem> {
    match kind {
        FqOp::Add => a.add(b),
        FqOp::Sub => a.sub(b),
        FqOp::Mul => a.mul(b),
        FqOp::Inv => a.inv(),
        FqOp::Neg => Ok(a.neg()),
    }
}

/// `a^(p^r)`.
pub fn fq_frobenius(a: &FieldElem, r: u32) -> FieldElem {
    a.frobenius(r)
}

/// Field description as stored in instance files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    pub fn build(&self) -> Result<Arc<FieldCtx>> {
        FieldCtx::new(self.p, &self.modulus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> Arc<FieldCtx> {
        FieldCtx::new(3, &[1, 0, 1]).unwrap()
    }

    #[test]
    fn x_squared_is_minus_one_in_f9() {
        let k = f9();
        let x = FieldElem::generator(&k);
        let xx = fq_arith(&x, &x, FqOp::Mul).unwrap();
        assert_eq!(xx.coeffs(), vec![2, 0]);
    }

    #[test]
    fn inverse_of_x_found_by_scan() {
        let k = f9();
        let x = FieldElem::generator(&k);
        let one = FieldElem::one(&k);
        // brute-force scan over the nonzero elements
        let scanned: Vec<_> =
            (1..9).map(|c| FieldElem::from_code(&k, c)).filter(|y| x.mul(y).unwrap() == one).collect();
        assert_eq!(scanned.len(), 1);
        assert_eq!(scanned[0].coeffs(), vec![0, 2]);
        assert_eq!(x.inv().unwrap(), scanned[0]);
        assert_eq!(one.inv().unwrap(), one);
    }

    #[test]
    fn inverse_of_zero_fails() {
        let k = f9();
        assert_eq!(FieldElem::zero(&k).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn mixed_contexts_are_rejected() {
        let a = FieldElem::one(&f9());
        let b = FieldElem::one(&FieldCtx::new(5, &[2, 0, 1]).unwrap());
        assert_eq!(a.add(&b), Err(Error::CtxMismatch));
        // structurally equal contexts are compatible
        let c = FieldElem::one(&f9());
        assert!(a.add(&c).is_ok());
    }

    #[test]
    fn frobenius_of_x_in_f9() {
        let k = f9();
        let x = FieldElem::generator(&k);
        assert_eq!(fq_frobenius(&x, 1), x.neg());
        assert_eq!(fq_frobenius(&x, 0), x);
    }

    #[test]
    fn frobenius_order_divides_degree_in_f81() {
        let k = FieldCtx::new(3, &[2, 0, 0, 1, 1]).unwrap();
        for c in 0..81 {
            let g = FieldElem::from_code(&k, c);
            assert_eq!(fq_frobenius(&g, 4), g);
            // direct power check of frobenius(1) = g^3
            let cube = g.mul(&g).unwrap().mul(&g).unwrap();
            assert_eq!(fq_frobenius(&g, 1), cube);
        }
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(FieldCtx::new(3, &[2, 0, 1]).is_err()); // x^2 - 1 splits
        assert!(FieldCtx::new(2, &[1, 1, 1]).is_err());
        assert!(FieldCtx::new(9, &[0, 1]).is_err());
        assert!(FieldCtx::new(3, &[1, 0, 2]).is_err()); // not monic
    }

    #[test]
    fn irreducibility_matches_root_search_for_quadratics() {
        for p in [3u32, 5, 7] {
            for a in 0..p {
                for b in 0..p {
                    let has_root = (0..p).any(|x| (x * x + a * x + b) % p == 0);
                    assert_eq!(is_irreducible(&[b, a, 1], p), !has_root, "p={p} a={a} b={b}");
                }
            }
        }
    }
}
