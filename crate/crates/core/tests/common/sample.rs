//! Points of instances too large to enumerate, built as perturbed diagonal
//! lattices and filtered by the point predicate.

use flatmodel::algebra::{Mat2, Series};
use flatmodel::instance::Instance;
use flatmodel::lattice::{lat_canonicalize, lat_det_profile, LatticePoint};
use flatmodel::phimod::MatrixTuple;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Diagonal exponent vectors `x` with `y = d - x` inside a box.
fn diagonals(n: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v: Vec<i64>| (-radius..=radius).map(move |x| [v.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

pub fn sample_points(inst: &Instance, rng: &mut ChaCha8Rng, radius: i64, perturb: usize) -> Vec<LatticePoint> {
    let k = inst.ctx().clone();
    let n = inst.file.n;
    let d = lat_det_profile(&inst.params, inst.tuple()).unwrap().expect("non-empty profile");
    let mut pts: Vec<LatticePoint> = Vec::new();
    let push = |l: LatticePoint, pts: &mut Vec<LatticePoint>| {
        if l.is_point() && !pts.contains(&l) {
            pts.push(l);
        }
    };
    for x in diagonals(n, radius) {
        let diag = |v: &[Series]| {
            MatrixTuple(
                (0..n)
                    .map(|i| {
                        Mat2::new(
                            Series::u_pow(&k, x[i]),
                            v[i].clone(),
                            Series::zero(&k),
                            Series::u_pow(&k, d[i] - x[i]),
                        )
                    })
                    .collect(),
            )
        };
        let zero: Vec<Series> = vec![Series::zero(&k); n];
        let l = lat_canonicalize(&inst.params, inst.tuple(), &diag(&zero)).unwrap();
        if !l.is_point() {
            continue;
        }
        push(l, &mut pts);
        for _ in 0..perturb {
            let v: Vec<Series> = (0..n)
                .map(|i| {
                    let y = d[i] - x[i];
                    let lo = y - rng.gen_range(1..=2);
                    let coeffs = (lo..y).map(|_| rng.gen_range(0..k.size())).collect();
                    Series::from_codes(&k, lo, coeffs, None)
                })
                .collect();
            let l = lat_canonicalize(&inst.params, inst.tuple(), &diag(&v)).unwrap();
            push(l, &mut pts);
        }
    }
    pts
}
