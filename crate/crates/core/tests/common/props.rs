//! Randomized property suites. Each returns the number of cases checked, or
//! the first failure. Shared by the property tests and the acceptance run.

use std::sync::{Arc, OnceLock};

use flatmodel::algebra::{FieldCtx, Mat2, Series};
use flatmodel::certify::{cert_verify, MoveDir, PathCertificate, WitnessKind};
use flatmodel::instance::{Instance, InstanceFile};
use flatmodel::lattice::{
    lat_canonicalize, lat_det_profile, lat_is_point, lat_split_extension, split_base_change, split_residuals,
    LatticePoint,
};
use flatmodel::moduli::{mod_enumerate, SearchStatus};
use flatmodel::pathfinder::pf_connect;
use flatmodel::phimod::{pm_base_change, InstanceParams, MatrixTuple};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::field;

pub type Outcome = Result<u32, String>;

fn run<S: Strategy>(cases: u32, s: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome {
    let config = Config { cases, failure_persistence: None, max_global_rejects: cases * 50, ..Config::default() };
    let mut r = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    r.run(&s, f).map(|_| cases).map_err(|e| e.to_string())
}

type RawSeries = (i64, Vec<u32>);

fn raw_series(lo: i64, hi: i64, len: usize) -> impl Strategy<Value = RawSeries> {
    (lo..=hi, vec(any::<u32>(), 0..=len))
}

fn series(k: &Arc<FieldCtx>, (off, codes): &RawSeries) -> Series {
    Series::from_codes(k, *off, codes.iter().map(|c| c % k.size()).collect(), None)
}

fn unit(k: &Arc<FieldCtx>, c: u32) -> u32 {
    1 + c % (k.size() - 1)
}

/// One elementary factor: unipotent upper or lower, scaled monomial
/// diagonal, or the swap.
type RawElem = (u8, RawSeries, i64, i64, u32, u32);

fn raw_elem(integral: bool) -> impl Strategy<Value = RawElem> {
    let (lo, k): (i64, i64) = if integral { (0, 0) } else { (-2, 2) };
    (0u8..4, raw_series(lo, 3, 3), -k..=k, -k..=k, any::<u32>(), any::<u32>())
}

fn elem(k: &Arc<FieldCtx>, (kind, x, a, b, c1, c2): &RawElem) -> Mat2 {
    let (one, zero) = (Series::one(k), Series::zero(k));
    match kind {
        0 => Mat2::new(one.clone(), series(k, x), zero, one),
        1 => Mat2::new(one.clone(), zero, series(k, x), one),
        2 => Mat2::diag(Series::monomial(k, unit(k, *c1), *a), Series::monomial(k, unit(k, *c2), *b)),
        _ => Mat2::new(zero.clone(), one.clone(), one, zero),
    }
}

fn product(k: &Arc<FieldCtx>, factors: &[RawElem]) -> Mat2 {
    factors.iter().fold(Mat2::identity(k), |m, f| m.mul(&elem(k, f)))
}

/// Tuples of `n` invertible matrices with monomial determinant, so inverses
/// are exact.
fn raw_tuple(n: usize, integral: bool) -> impl Strategy<Value = Vec<Vec<RawElem>>> {
    vec(vec(raw_elem(integral), 1..=3), n)
}

fn tuple(k: &Arc<FieldCtx>, raw: &[Vec<RawElem>]) -> MatrixTuple {
    MatrixTuple(raw.iter().map(|f| product(k, f)).collect())
}

fn left_mul(k: &MatrixTuple, b: &MatrixTuple) -> MatrixTuple {
    MatrixTuple(k.0.iter().zip(&b.0).map(|(x, y)| x.mul(y)).collect())
}

fn exact(t: &MatrixTuple) -> bool {
    t.0.iter().all(Mat2::is_exact)
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(TestCaseError::fail(format!($($msg)+)));
        }
    };
}

fn ok<T>(r: flatmodel::Result<T>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

/// `G(G(A, B), C) = G(A, C B)` and `G(A, I) = A`.
pub fn action_law(cases: u32) -> Outcome {
    let k = field(3, 2);
    let params = InstanceParams::new(k.clone(), 2, 2).unwrap().with_precision(40);
    run(cases, (raw_tuple(2, false), raw_tuple(2, false), raw_tuple(2, false)), |(a, b, c)| {
        let (a, b, c) = (tuple(&k, &a), tuple(&k, &b), tuple(&k, &c));
        let lhs = ok(pm_base_change(&params, &ok(pm_base_change(&params, &a, &b))?, &c))?;
        let rhs = ok(pm_base_change(&params, &a, &left_mul(&c, &b)))?;
        ensure!(exact(&lhs) && exact(&rhs), "inexact result");
        ensure!(lhs == rhs, "composition differs");
        let id = ok(pm_base_change(&params, &a, &MatrixTuple::identity(&k, 2)))?;
        ensure!(id == a, "identity acts nontrivially");
        Ok(())
    })
}

struct Fixture {
    inst: Instance,
    points: Vec<LatticePoint>,
}

fn fixture(file: InstanceFile) -> Fixture {
    let inst = file.build().unwrap();
    let en = mod_enumerate(&inst.params, inst.tuple(), &inst.file.bounds).unwrap();
    assert_eq!(en.status, SearchStatus::Complete);
    Fixture { inst, points: en.points }
}

fn fixtures() -> &'static [Fixture] {
    static F: OnceLock<Vec<Fixture>> = OnceLock::new();
    F.get_or_init(|| {
        let k = FieldCtx::prime(3).unwrap();
        let pw = |x: i64| Series::u_pow(&k, x);
        vec![
            fixture(InstanceFile::irreducible(3, 2, 3, 4)),
            fixture(InstanceFile::reducible(&k, 4, &[pw(1), pw(1)], &[pw(0), pw(0)], &[pw(3), pw(3)])),
            fixture(InstanceFile::irreducible(3, 1, 6, 2)),
        ]
    })
}

/// Canonicalization only sees the row span: `K B` and `B` give the same
/// point for `K` in `GL_2(F[[u]])`.
pub fn coset_invariance(cases: u32) -> Outcome {
    let fx = fixtures();
    let s = (0..fx.len(), any::<usize>(), raw_tuple(2, true), raw_tuple(2, false));
    run(cases, s, |(f, idx, kr, br)| {
        let Fixture { inst, points } = &fx[f];
        let (params, a, n) = (&inst.params, inst.tuple(), inst.file.n);
        let k = inst.ctx();
        let kt = tuple(k, &kr[..n]);
        let l = &points[idx % points.len()];
        let moved = ok(lat_canonicalize(params, a, &left_mul(&kt, &l.basis)))?;
        ensure!(moved.id() == l.id(), "point {} moved to {}", l.id(), moved.id());
        ensure!(moved.is_point(), "translate of {} is not a point", l.id());
        let b = tuple(k, &br[..n]);
        let x = ok(lat_canonicalize(params, a, &b))?;
        let y = ok(lat_canonicalize(params, a, &left_mul(&kt, &b)))?;
        ensure!(x.basis == y.basis, "canonical form depends on the basis");
        ensure!(
            ok(lat_is_point(params, a, &x))?.is_yes() == ok(lat_is_point(params, a, &y))?.is_yes(),
            "point predicate differs"
        );
        Ok(())
    })
}

/// Every moduli point has the determinant profile.
pub fn det_profile_necessity(cases: u32) -> Outcome {
    let fx = fixtures();
    let s = (
        0..fx.len(),
        0u8..3,
        any::<usize>(),
        raw_tuple(2, true),
        raw_tuple(2, false),
        vec((-4i64..=6, -4i64..=6, raw_series(-4, 4, 3)), 2),
    );
    run(cases, s, |(f, branch, idx, kr, br, diag)| {
        let Fixture { inst, points } = &fx[f];
        let (params, a, n) = (&inst.params, inst.tuple(), inst.file.n);
        let k = inst.ctx();
        let profile = ok(lat_det_profile(params, a))?.expect("fixtures have a profile");
        let b = match branch {
            0 => left_mul(&tuple(k, &kr[..n]), &points[idx % points.len()].basis),
            1 => tuple(k, &br[..n]),
            _ => MatrixTuple(
                diag[..n]
                    .iter()
                    .map(|(x, y, v)| {
                        Mat2::new(Series::u_pow(k, *x), series(k, v), Series::zero(k), Series::u_pow(k, *y))
                    })
                    .collect(),
            ),
        };
        let l = ok(lat_canonicalize(params, a, &b))?;
        if l.is_point() {
            let d = ok(l.basis.det_valuations())?;
            ensure!(d == profile, "point {} has determinant valuations {d:?}, profile {profile:?}", l.id());
        }
        Ok(())
    })
}

/// `u -> u^p` respects sums, products and valuations, entrywise on
/// matrices too, including truncated inputs.
pub fn frobsub_homomorphism(cases: u32) -> Outcome {
    let k = field(3, 2);
    let s = (
        raw_series(-3, 3, 6),
        raw_series(-3, 3, 6),
        proptest::option::of(-2i64..8),
        raw_tuple(1, false),
        raw_tuple(1, false),
    );
    run(cases, s, |(f, g, prec, m1, m2)| {
        let (mut f, g) = (series(&k, &f), series(&k, &g));
        if let Some(n) = prec {
            f = Series::from_codes(&k, f.offset(), f.codes().to_vec(), Some(n.max(f.offset())));
        }
        let sum = (&f + &g).frobsub();
        let prod = (&f * &g).frobsub();
        ensure!(sum == &f.frobsub() + &g.frobsub(), "sum");
        ensure!(prod == &f.frobsub() * &g.frobsub(), "product {prod:?}");
        ensure!(prod.prec() == (&f.frobsub() * &g.frobsub()).prec(), "precision");
        if let Some(v) = f.valuation().finite() {
            ensure!(f.frobsub().valuation().finite() == Some(3 * v), "valuation");
        }
        ensure!(Series::one(&k).frobsub() == Series::one(&k), "unit");
        let (x, y) = (product(&k, &m1[0]), product(&k, &m2[0]));
        ensure!(x.mul(&y).frobsub() == x.frobsub().mul(&y.frobsub()), "matrix product");
        Ok(())
    })
}

struct Pool {
    inst: Instance,
    certs: Vec<PathCertificate>,
}

fn pools() -> &'static [Pool] {
    static P: OnceLock<Vec<Pool>> = OnceLock::new();
    P.get_or_init(|| {
        let mut out = Vec::new();
        for f in &fixtures()[..2] {
            let pts = &f.points;
            let certs = (1..pts.len()).step_by(3).map(|j| pf_connect(&f.inst, &pts[0], &pts[j]).unwrap()).collect();
            out.push(Pool { inst: f.inst.clone(), certs });
        }
        let inst = InstanceFile::irreducible(3, 2, 8, 8).build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = super::sample::sample_points(&inst, &mut rng, 10, 10);
        let certs = (1..pts.len()).map(|j| pf_connect(&inst, &pts[0], &pts[j]).unwrap()).collect();
        out.push(Pool { inst, certs });
        for p in &mut out {
            p.certs.retain(|c| !c.steps.is_empty());
            assert!(!p.certs.is_empty());
        }
        out
    })
}

fn flip_hex(s: &mut String, r: usize) {
    let mut b = s.clone().into_bytes();
    let i = r % b.len();
    b[i] = if b[i] == b'0' { b'1' } else { b'0' };
    *s = String::from_utf8(b).unwrap();
}

fn bump(s: &mut Series, code: u32, k: i64) {
    let c = Series::monomial(s.ctx(), code, k);
    *s = &*s + &c;
}

/// One structural corruption of `c`, selected by `kind`; `r` supplies the
/// random choices.
fn mutate(inst: &Instance, c: &mut PathCertificate, kind: u8, r: [usize; 4]) {
    let k = inst.ctx();
    let n = inst.file.n;
    let code = unit(k, r[3] as u32);
    let steps = c.steps.len();
    let s = r[0] % steps;
    let umoves: Vec<usize> = (0..steps).filter(|&i| matches!(c.steps[i].kind, WitnessKind::UMove { .. })).collect();
    let nils: Vec<usize> = (0..steps).filter(|&i| matches!(c.steps[i].kind, WitnessKind::Nilpotent { .. })).collect();
    match kind {
        0 => flip_hex(&mut c.instance_hash, r[1]),
        1 => flip_hex(&mut c.endpoints[r[1] % 2], r[2]),
        2 => {
            let w = &mut c.steps[s];
            flip_hex(if r[1] % 2 == 0 { &mut w.source } else { &mut w.target }, r[2]);
        }
        3 | 4 => {
            // corrupt one coefficient of an embedded basis; kind 4 also
            // recomputes that side's ID so only the chain can catch it
            let w = &mut c.steps[s];
            let (basis, id) =
                if r[1] % 2 == 0 { (&mut w.source_basis, &mut w.source) } else { (&mut w.target_basis, &mut w.target) };
            let blk = r[2] % n;
            let (i, j) = [(0, 0), (0, 1), (1, 1), (1, 0)][r[2] / n % 4];
            let entry = &mut basis.0[blk].e[i][j];
            let deg = entry.offset() + (r[3] % 5) as i64 - 1;
            bump(entry, code, deg);
            if kind == 4 {
                *id = basis.short_id();
            }
        }
        5 if !umoves.is_empty() => {
            let w = &mut c.steps[umoves[r[1] % umoves.len()]];
            if let WitnessKind::UMove { slot, dir } = &mut w.kind {
                if r[2] % 2 == 0 {
                    *dir = match dir {
                        MoveDir::Forward => MoveDir::Inverse,
                        MoveDir::Inverse => MoveDir::Forward,
                    };
                } else {
                    *slot = (*slot + 1 + r[3] % (n - 1)) % n;
                }
            }
        }
        6 | 7 if !nils.is_empty() => {
            let w = &mut c.steps[nils[r[1] % nils.len()]];
            if let WitnessKind::Nilpotent { c: cm, n: nm } = &mut w.kind {
                let t = if kind == 6 { nm } else { cm };
                let (i, j) = [(0, 0), (0, 1), (1, 0), (1, 1)][r[2] % 4];
                bump(&mut t.0[r[2] / 4 % n].e[i][j], code, -1 - (r[3] % 3) as i64);
            }
        }
        8 => {
            c.steps.remove(s);
        }
        9 if steps >= 2 => c.steps.swap(s, (s + 1) % steps),
        9 => {
            let w = c.steps[s].clone();
            c.steps.insert(s, w);
        }
        _ => {
            // the selected field is absent from this certificate
            let w = &mut c.steps[s];
            flip_hex(&mut w.target, r[2]);
        }
    }
}

/// Single structural corruptions of accepted certificates are rejected.
pub fn mutation_rejection(cases: u32) -> Outcome {
    let pools = pools();
    let s = (0..pools.len(), any::<usize>(), 0u8..10, any::<[usize; 4]>());
    run(cases, s, |(p, ci, kind, r)| {
        let Pool { inst, certs } = &pools[p];
        let orig = &certs[ci % certs.len()];
        ensure!(cert_verify(&inst.params, inst.tuple(), &inst.hash, orig).is_ok(), "original rejected");
        let mut bad = orig.clone();
        mutate(inst, &mut bad, kind, r);
        ensure!(bad != *orig, "mutation {kind} was a no-op");
        ensure!(!cert_verify(&inst.params, inst.tuple(), &inst.hash, &bad).is_ok(), "mutation {kind} {r:?} accepted");
        Ok(())
    })
}

/// Random multiplicative-by-etale instances: residuals vanish and the base
/// change clears the off-diagonal.
pub fn split_solver(cases: u32) -> Outcome {
    let s = (
        1usize..=2,
        1usize..=3,
        1i64..=4,
        vec((any::<u32>(), raw_series(1, 4, 3), any::<u32>(), raw_series(1, 4, 3), raw_series(0, 4, 4)), 3),
    );
    run(cases, s, |(m, n, e, data)| {
        let k = field(3, m);
        let prec = 30;
        let params = ok(InstanceParams::new(k.clone(), n, e))?.with_precision(prec);
        let u = |c: u32, tail: &RawSeries| &Series::monomial(&k, unit(&k, c), 0) + &series(&k, tail);
        let a: Vec<Series> = data[..n].iter().map(|d| u(d.0, &d.1)).collect();
        let c: Vec<Series> = data[..n].iter().map(|d| u(d.2, &d.3)).collect();
        let b: Vec<Series> = data[..n].iter().map(|d| series(&k, &d.4)).collect();
        let v = ok(lat_split_extension(&params, &a, &b, &c))?;
        for r in split_residuals(&params, &a, &b, &c, &v) {
            ensure!(r.truncate(prec).is_zero_to_precision(), "residual {r:?}");
        }
        let ue = Series::u_pow(&k, e);
        let g =
            MatrixTuple((0..n).map(|i| Mat2::new(a[i].clone(), b[i].clone(), Series::zero(&k), &ue * &c[i])).collect());
        let h = ok(pm_base_change(&params, &g, &split_base_change(&v)))?;
        for (i, blk) in h.0.iter().enumerate() {
            ensure!(blk.e[0][1].truncate(prec).is_zero_to_precision(), "off-diagonal {i} survives");
            ensure!(blk.e[1][0].is_zero_to_precision(), "lower-left entry appeared");
        }
        Ok(())
    })
}
