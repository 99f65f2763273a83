//! Quick invariant checks behind `flatmodel selftest`.

use crate::algebra::{FieldCtx, Mat2, Series};
use crate::certify::{cert_verify, cert_verify_edge, EdgeWitness, MoveDir, WitnessKind};
use crate::error::Result;
use crate::instance::{Instance, InstanceFile};
use crate::lattice::{lat_det_profile, lat_split_extension, lat_umove, split_residuals};
use crate::moduli::{mod_enumerate, SearchStatus};
use crate::pathfinder::pf_connect;
use crate::phimod::{InstanceParams, MatrixTuple};

type Check = (String, bool, String);

fn single_point(p: u32, n: usize, e: i64, s: u64) -> Result<(bool, String)> {
    let inst = InstanceFile::irreducible(p, n, e, s).build()?;
    let en = mod_enumerate(&inst.params, inst.tuple(), &inst.file.bounds)?;
    Ok((
        en.status == SearchStatus::Complete && en.points.len() == 1,
        format!("{} point(s), {:?}", en.points.len(), en.status),
    ))
}

fn kernel_identity() -> Result<(bool, String)> {
    let k = FieldCtx::prime(3)?;
    let x = Mat2::from_terms(&k, [&[], &[(0, 1)], &[(0, -1)], &[(1, 2)]]);
    let y = Mat2::from_terms(&k, [&[(0, 2)], &[(1, -1)], &[(-1, 1)], &[]]);
    let ok = x.mul(&y) == Mat2::diag_u(&k, -1, 1);
    Ok((ok, "(0,1;-1,2u)(2,-u;u^-1,0) = diag(u^-1,u)".into()))
}

fn umove_witness() -> Result<(bool, String)> {
    let inst = InstanceFile::irreducible(3, 2, 3, 4).build()?;
    let pts = mod_enumerate(&inst.params, inst.tuple(), &inst.file.bounds)?.points;
    let mut checked = 0;
    for l in &pts {
        for slot in 0..2 {
            for dir in [MoveDir::Forward, MoveDir::Inverse] {
                if let Some(m) = lat_umove(&inst.params, inst.tuple(), l, slot, dir)? {
                    let w = EdgeWitness {
                        source: l.id().into(),
                        target: m.id().into(),
                        source_basis: l.basis.clone(),
                        target_basis: m.basis.clone(),
                        kind: WitnessKind::UMove { slot, dir },
                    };
                    if !cert_verify_edge(&inst.params, inst.tuple(), &w).is_ok() {
                        return Ok((false, format!("move at slot {slot} from {} rejected", l.id())));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok((checked > 0, format!("{checked} feasible moves verified")))
}

fn mutation_rejected() -> Result<(bool, String)> {
    let inst: Instance = InstanceFile::irreducible(3, 2, 3, 4).build()?;
    let pts = mod_enumerate(&inst.params, inst.tuple(), &inst.file.bounds)?.points;
    let cert = pf_connect(&inst, &pts[0], &pts[pts.len() - 1])?;
    if !cert_verify(&inst.params, inst.tuple(), &inst.hash, &cert).is_ok() {
        return Ok((false, "original certificate rejected".into()));
    }
    let mut bad = cert.clone();
    let k = inst.ctx().clone();
    let mut rejected = 0;
    for step in 0..bad.steps.len() {
        if let WitnessKind::Nilpotent { n, .. } = &mut bad.steps[step].kind {
            let blk = &mut n.0[0];
            blk.e[0][1] = &blk.e[0][1] + &Series::monomial(&k, 1, -3);
            if !cert_verify(&inst.params, inst.tuple(), &inst.hash, &bad).is_ok() {
                rejected += 1;
            }
            bad = cert.clone();
        }
    }
    let mut wrong_hash = cert.clone();
    wrong_hash.instance_hash = "0".repeat(64);
    let hash_ok = !cert_verify(&inst.params, inst.tuple(), &inst.hash, &wrong_hash).is_ok();
    Ok((rejected > 0 && hash_ok, format!("{rejected} tampered steps rejected, hash check {hash_ok}")))
}

fn splitting() -> Result<(bool, String)> {
    let k = FieldCtx::prime(3)?;
    let params = InstanceParams::new(k.clone(), 2, 2)?.with_precision(40);
    let a = vec![Series::from_terms(&k, &[(0, 1), (1, 1)]), Series::one(&k)];
    let b = vec![Series::from_terms(&k, &[(0, 1), (2, 2)]), Series::u_pow(&k, 1)];
    let c = vec![Series::one(&k), Series::from_terms(&k, &[(0, 2)])];
    let v = lat_split_extension(&params, &a, &b, &c)?;
    let ok = split_residuals(&params, &a, &b, &c, &v).iter().all(Series::is_zero_to_precision);
    Ok((ok, "residuals vanish to precision".into()))
}

fn profile() -> Result<(bool, String)> {
    let inst = InstanceFile::irreducible(3, 2, 2, 1).build()?;
    let empty = lat_det_profile(&inst.params, inst.tuple())?.is_none();
    let inst = InstanceFile::irreducible(3, 2, 2, 8).build()?;
    let d = lat_det_profile(&inst.params, inst.tuple())?;
    Ok((empty && d == Some(vec![-2, 0]), format!("s=1 empty: {empty}, s=8 profile {d:?}")))
}

fn identity_tuple_trivial() -> Result<(bool, String)> {
    let k = FieldCtx::prime(5)?;
    let id = MatrixTuple::identity(&k, 2);
    Ok((id.is_integral()?, "identity tuple integral".into()))
}

/// Run every check; never panics.
pub fn run_all() -> Vec<Check> {
    let checks: Vec<(&str, fn() -> Result<(bool, String)>)> = vec![
        ("unique point p=5 n=1 e=2", || single_point(5, 1, 2, 2)),
        ("unique point p=7 n=2 e=3", || single_point(7, 2, 3, 24)),
        ("determinant profile", profile),
        ("U-move kernel identity", kernel_identity),
        ("U-move witnesses verify", umove_witness),
        ("tampered certificates rejected", mutation_rejected),
        ("splitting solver", splitting),
        ("identity tuple", identity_tuple_trivial),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((ok, detail)) => (name.to_string(), ok, detail),
            Err(e) => (name.to_string(), false, format!("error: {e}")),
        })
        .collect()
}
