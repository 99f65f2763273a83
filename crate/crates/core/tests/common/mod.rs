#![allow(dead_code)]

use std::sync::Arc;

pub mod props;
pub mod sample;

use flatmodel::algebra::field::is_irreducible;
use flatmodel::algebra::{FieldCtx, Mat2, Series};
use flatmodel::phimod::{pm_ambient_irreducible, pm_ambient_reducible, Ambient, InstanceParams};

/// Lexicographically first monic irreducible polynomial of degree `m`.
pub fn first_irreducible(p: u32, m: usize) -> Vec<u32> {
    let total = (p as u64).pow(m as u32);
    for idx in 0..total {
        let mut f = Vec::with_capacity(m + 1);
        let mut x = idx;
        for _ in 0..m {
            f.push((x % p as u64) as u32);
            x /= p as u64;
        }
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

pub fn field(p: u32, m: usize) -> Arc<FieldCtx> {
    if m == 1 {
        FieldCtx::prime(p).unwrap()
    } else {
        FieldCtx::new(p, &first_irreducible(p, m)).unwrap()
    }
}

pub fn params(p: u32, m: usize, n: usize, e: i64) -> InstanceParams {
    InstanceParams::new(field(p, m), n, e).unwrap()
}

pub fn irreducible(p: u32, n: usize, e: i64, s: u64) -> (InstanceParams, Ambient) {
    let pr = params(p, 2 * n, n, e);
    let amb = pm_ambient_irreducible(&pr, s, &vec![1; n]).unwrap();
    let pr = pr.with_default_precision(amb.exponent_bound());
    (pr, amb)
}

/// `A_1 = (1, 1; 0, u^2)`, `A_2 = (u, 0; 0, u)` over `F_3`.
pub fn reducible_desk() -> (InstanceParams, Ambient) {
    let pr = params(3, 1, 2, 2);
    let k = pr.field.clone();
    let amb = pm_ambient_reducible(
        &pr,
        &[Series::one(&k), Series::u_pow(&k, 1)],
        &[Series::one(&k), Series::zero(&k)],
        &[Series::u_pow(&k, 2), Series::u_pow(&k, 1)],
    )
    .unwrap();
    (pr, amb)
}

pub fn mat(k: &Arc<FieldCtx>, e: [&[(i64, i64)]; 4]) -> Mat2 {
    Mat2::from_terms(k, e)
}
