//! Randomized pathfinder runs on instances too large to enumerate.

mod common;

use common::sample::sample_points;
use flatmodel::algebra::Series;
use flatmodel::certify::{cert_verify, WitnessKind};
use flatmodel::instance::{Instance, InstanceFile};
use flatmodel::lattice::{lat_det_profile, lat_is_ordinary, LatticePoint};
use flatmodel::pathfinder::{pf_connect_traced, PfOptions, PfTrace};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Tally {
    pairs: usize,
    umoves: usize,
    nilpotent: usize,
    max_len: usize,
}

fn connect_random_pairs(inst: &Instance, pts: &[LatticePoint], rng: &mut ChaCha8Rng, pairs: usize) -> (Tally, PfTrace) {
    let mut tally = Tally { pairs: 0, umoves: 0, nilpotent: 0, max_len: 0 };
    let mut all = PfTrace::default();
    let non_ord: Vec<&LatticePoint> =
        pts.iter().filter(|l| !lat_is_ordinary(&inst.params, l).unwrap().is_ordinary()).collect();
    assert!(non_ord.len() >= 2, "only {} non-ordinary samples", non_ord.len());
    for _ in 0..pairs {
        let pair: Vec<&&LatticePoint> = non_ord.choose_multiple(rng, 2).collect();
        let (a, b) = (pair[0], pair[1]);
        let (cert, trace) = pf_connect_traced(inst, a, b, &PfOptions::default())
            .unwrap_or_else(|e| panic!("{} -> {}: {e}", a.id(), b.id()));
        assert!(cert_verify(&inst.params, inst.tuple(), &inst.hash, &cert).is_ok());
        assert!(trace.monitors_hold(), "{:?}", trace.contradictions);
        tally.pairs += 1;
        tally.max_len = tally.max_len.max(cert.steps.len());
        for w in &cert.steps {
            match w.kind {
                WitnessKind::UMove { .. } => tally.umoves += 1,
                WitnessKind::Nilpotent { .. } => tally.nilpotent += 1,
            }
        }
        all.merge(trace);
    }
    (tally, all)
}

fn run(inst: Instance, seed: u64, radius: i64, perturb: usize, pairs: usize) -> (Tally, PfTrace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = sample_points(&inst, &mut rng, radius, perturb);
    let (t, trace) = connect_random_pairs(&inst, &pts, &mut rng, pairs);
    println!(
        "p={} n={} e={}: {} samples, {} pairs, {} U-moves, {} nilpotent, longest {}",
        inst.file.p,
        inst.file.n,
        inst.file.e,
        pts.len(),
        t.pairs,
        t.umoves,
        t.nilpotent,
        t.max_len
    );
    (t, trace)
}

#[test]
fn irreducible_n2_large_e() {
    for (e, s, seed) in [(7, 4, 1), (8, 8, 2), (6, 8, 3), (7, 12, 4)] {
        let inst = InstanceFile::irreducible(3, 2, e, s).build().unwrap();
        let (t, trace) = run(inst, seed, 12, 30, 40);
        assert!(t.umoves > 0, "no U-moves exercised at e={e}");
        assert!(trace.monitors_hold());
    }
}

#[test]
fn irreducible_n3() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut done = 0;
    for s in 1..40u64 {
        let Ok(inst) = InstanceFile::irreducible(3, 3, 4, s).build() else {
            continue;
        };
        if lat_det_profile(&inst.params, inst.tuple()).unwrap().is_none() {
            continue;
        }
        let pts = sample_points(&inst, &mut rng, 6, 1);
        if pts.len() < 2 {
            continue;
        }
        let (_, trace) = connect_random_pairs(&inst, &pts, &mut rng, 15);
        assert!(trace.monitors_hold());
        done += 1;
        if done == 3 {
            break;
        }
    }
    assert!(done > 0);
}

#[test]
fn reducible_large_e() {
    let k = flatmodel::algebra::FieldCtx::prime(3).unwrap();
    let pw = |x: i64| Series::u_pow(&k, x);
    for (e, a, c, seed) in [(6, [1, 2], [5, 4], 11), (7, [0, 3], [7, 4], 12), (8, [2, 2], [6, 6], 13)] {
        let a: Vec<Series> = a.iter().map(|&x| pw(x)).collect();
        let c: Vec<Series> = c.iter().map(|&x| pw(x)).collect();
        let b = vec![Series::one(&k), Series::zero(&k)];
        let inst = InstanceFile::reducible(&k, e, &a, &b, &c).build().unwrap();
        let (t, trace) = run(inst, seed, 10, 20, 40);
        assert!(t.nilpotent > 0);
        assert!(trace.monitors_hold());
    }
}
