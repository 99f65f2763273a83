//! Enumeration against exhaustive search over Hermite bases in a box.

use std::collections::BTreeSet;

use flatmodel::algebra::{FieldCtx, Mat2, Series};
use flatmodel::instance::{Instance, InstanceFile};
use flatmodel::lattice::{lat_canonicalize, lat_det_profile};
use flatmodel::moduli::{mod_enumerate, SearchStatus};
use flatmodel::phimod::MatrixTuple;

/// All canonical blocks `(u^a, v; 0, u^(d-a))` with `|a| <= radius` and `v`
/// supported on the `window` degrees below `d - a`.
fn blocks(k: &std::sync::Arc<FieldCtx>, d: i64, radius: i64, window: usize) -> Vec<Mat2> {
    let q = k.size() as usize;
    let mut out = Vec::new();
    for a in -radius..=radius {
        let b = d - a;
        for mut idx in 0..q.pow(window as u32) {
            let mut coeffs = Vec::with_capacity(window);
            for _ in 0..window {
                coeffs.push((idx % q) as u32);
                idx /= q;
            }
            let v = Series::from_codes(k, b - window as i64, coeffs, None);
            out.push(Mat2::new(Series::u_pow(k, a), v, Series::zero(k), Series::u_pow(k, b)));
        }
    }
    out
}

fn brute_force(inst: &Instance, radius: i64, window: usize) -> BTreeSet<String> {
    let k = inst.ctx();
    let d = lat_det_profile(&inst.params, inst.tuple()).unwrap().unwrap();
    let per_slot: Vec<Vec<Mat2>> = d.iter().map(|&di| blocks(k, di, radius, window)).collect();
    let mut found = BTreeSet::new();
    let mut idx = vec![0usize; d.len()];
    loop {
        let b = MatrixTuple(idx.iter().enumerate().map(|(i, &j)| per_slot[i][j].clone()).collect());
        let l = lat_canonicalize(&inst.params, inst.tuple(), &b).unwrap();
        if l.is_point() {
            found.insert(l.id().to_string());
        }
        let mut i = 0;
        loop {
            if i == idx.len() {
                return found;
            }
            idx[i] += 1;
            if idx[i] < per_slot[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn cross_check(inst: Instance, radius: i64, window: usize) {
    let en = mod_enumerate(&inst.params, inst.tuple(), &inst.file.bounds).unwrap();
    assert_eq!(en.status, SearchStatus::Complete);
    for l in &en.points {
        for ((a, b), v) in l.exponents().into_iter().zip(l.offdiag()) {
            assert!(a.abs() <= radius, "point {} outside the box", l.id());
            assert!(v.is_exact_zero() || v.offset() >= b - window as i64, "point {} outside the window", l.id());
        }
    }
    let listed: BTreeSet<String> = en.points.iter().map(|l| l.id().to_string()).collect();
    assert_eq!(listed.len(), en.points.len(), "duplicate points");
    assert_eq!(brute_force(&inst, radius, window), listed);
}

#[test]
fn n1_instances() {
    cross_check(InstanceFile::irreducible(5, 1, 2, 2).build().unwrap(), 4, 2);
    cross_check(InstanceFile::irreducible(3, 1, 2, 2).build().unwrap(), 4, 2);
    cross_check(InstanceFile::irreducible(3, 1, 6, 2).build().unwrap(), 6, 3);
}

#[test]
fn n2_reducible() {
    let k = FieldCtx::prime(3).unwrap();
    let pw = |x: i64| Series::u_pow(&k, x);
    let inst = InstanceFile::reducible(&k, 3, &[pw(0), pw(1)], &[pw(0), Series::zero(&k)], &[pw(3), pw(2)]);
    cross_check(inst.build().unwrap(), 3, 3);
    let inst = InstanceFile::reducible(&k, 2, &[pw(0), pw(1)], &[pw(0), Series::zero(&k)], &[pw(2), pw(1)]);
    cross_check(inst.build().unwrap(), 3, 2);
}
