//! Irreducible normal form `(alpha_1 (0,1; u^s,0), alpha_2, .., alpha_n)`,
//! `n >= 2`.
//!
//! Each endpoint `L` is taken to a balanced diagonal reference lattice `x0`:
//! forward moves on `L` until `t_1 + p a_1 + a_2 <= e`, a nilpotent edge to
//! the diagonal companion `M3 = diag(u^-a_i, u^a_i) x0`, balancing of `M3`,
//! and finally moves shrinking the remaining `|a_i| <= 1` to zero.

use super::exponents::{
    apply_to_diagonal, diagonal_exponents, pf_balance_exponents, pf_reduce_a, IrreducibleState, TMove,
};
use super::{checked, join_paths, umove_edge, PfTrace, Phase};
use crate::algebra::{Mat2, Series};
use crate::certify::{EdgeWitness, MoveDir, WitnessKind};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lattice::{lat_umove, lattice_from_canonical, LatticePoint};
use crate::moduli::relative_position;
use crate::phimod::{AmbientKind, MatrixTuple};

/// The balanced diagonal reference point.
#[derive(Debug, Clone)]
pub struct Reference {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub t: Vec<i64>,
    pub point: LatticePoint,
}

fn ambient_s(inst: &Instance) -> Result<i64> {
    match inst.ambient.kind {
        AmbientKind::Irreducible { s, .. } => Ok(s as i64),
        _ => Err(Error::InvalidInstance("irreducible branch needs the irreducible normal form".into())),
    }
}

fn diagonal(inst: &Instance, x: &[i64], y: &[i64]) -> Result<LatticePoint> {
    let ctx = inst.ctx();
    let basis = MatrixTuple(x.iter().zip(y).map(|(&a, &b)| Mat2::diag_u(ctx, a, b)).collect());
    lattice_from_canonical(&inst.params, inst.tuple(), basis)
}

fn t_of(inst: &Instance, x: &[i64], y: &[i64]) -> Result<Vec<i64>> {
    Ok(diagonal_exponents(inst.params.p(), ambient_s(inst)?, x, y).iter().map(|st| st.1).collect())
}

impl Reference {
    /// Diagonal part of `l`, normalized and balanced.
    pub fn from_endpoint(inst: &Instance, l: &LatticePoint, trace: &mut PfTrace) -> Result<Reference> {
        let (mut x, mut y): (Vec<i64>, Vec<i64>) = l.exponents().into_iter().unzip();
        let state = IrreducibleState::new(inst.params.p(), inst.params.e, t_of(inst, &x, &y)?);
        let bal = pf_balance_exponents(&state, trace)?;
        for mv in bal.normalize.iter().chain(&bal.balance) {
            apply_to_diagonal(&mut x, &mut y, *mv);
        }
        let t = t_of(inst, &x, &y)?;
        if t != bal.t {
            return Err(Error::InternalInvariantViolation(format!(
                "reference exponents {t:?} differ from {:?}",
                bal.t
            )));
        }
        let point = diagonal(inst, &x, &y)?;
        if !point.is_point() {
            return Err(Error::InternalInvariantViolation(format!(
                "reference lattice is not a point: {}",
                point.check
            )));
        }
        Ok(Reference { x, y, t, point })
    }

    fn state(&self, inst: &Instance) -> IrreducibleState {
        IrreducibleState::new(inst.params.p(), inst.params.e, self.t.clone())
    }

    /// `a_i` and `v_i` of `l` relative to the reference.
    fn relative(&self, inst: &Instance, l: &LatticePoint) -> Result<(Vec<i64>, Vec<Series>)> {
        let mut a = Vec::new();
        let mut v = Vec::new();
        for i in 0..l.n() {
            let r = relative_position(&self.point.basis.0[i], &l.basis.0[i], inst.params.precision)?;
            let ai = r.e[1][1].offset();
            if r.e[0][0].offset() != -ai {
                return Err(Error::InternalInvariantViolation("relative position is not unimodular".into()));
            }
            a.push(ai);
            v.push(r.e[0][1].clone());
        }
        Ok((a, v))
    }
}

fn head(st: &IrreducibleState, a: &[i64]) -> i64 {
    st.t[0] + st.p * a[0] + a[1]
}

fn stuck_diagnostics(st: &IrreducibleState) -> String {
    let (p, e) = (st.p, st.e);
    let n = st.n();
    let s = st.s();
    let (a, t) = (&st.a, &st.t);
    let r = |i: usize| st.r[i].unwrap_or(i64::MAX / 4);
    let exact_fit = p * r(0) + t[0] + a[1] == 0 && (1..n).all(|i| s[i] - p * a[i] + a[(i + 1) % n] == 0);
    let low_slack = r(1) + t[0] + p * a[0] <= p - 1 && (1..n).all(|i| t[i] + p * a[i] - a[(i + 1) % n] <= p - 1);
    let window = (0..n).all(|i| st.r[i].is_none_or(|ri| (-a[i] - 1..=-a[i] + 1).contains(&ri)));
    format!(
        "head t_1 + p a_1 + a_2 = {} > e = {e} and no move applies (a = {a:?}, r = {:?}); exact-fit: {exact_fit}, low-slack: {low_slack}, r-window: {window}",
        head(st, a),
        st.r
    )
}

/// Forward moves on `l` until `t_1 + p a_1 + a_2 <= e`. Returns the moves and
/// the final lattice.
pub fn pf_shrink_head(
    inst: &Instance,
    reference: &Reference,
    l: &LatticePoint,
    trace: &mut PfTrace,
) -> Result<(Vec<usize>, LatticePoint)> {
    let mut st = reference.state(inst);
    let mut cur = l.clone();
    let mut slots = Vec::new();
    let run = trace.begin(Phase::ShrinkHead);
    loop {
        let (a, v) = reference.relative(inst, &cur)?;
        st.a = a.clone();
        st.r = v.iter().map(|x| x.valuation().finite()).collect();
        let h = head(&st, &a);
        trace.record(run, "head", a.clone(), h);
        if h <= st.e {
            return Ok((slots, cur));
        }
        let mut moved = None;
        for i in 0..cur.n() {
            if let Some(next) = lat_umove(&inst.params, inst.tuple(), &cur, i, MoveDir::Forward)? {
                moved = Some((i, next));
                break;
            }
        }
        match moved {
            Some((i, next)) => {
                slots.push(i);
                cur = next;
            }
            None => {
                let msg = stuck_diagnostics(&st);
                trace.contradiction(&msg);
                return Err(Error::IrreducibilityViolation(msg));
            }
        }
        if slots.len() > 16 * (inst.params.e as usize + 4) * cur.n() {
            return Err(Error::InternalInvariantViolation("head shrinking does not terminate".into()));
        }
    }
}

fn apply_moves(
    inst: &Instance,
    from: &LatticePoint,
    moves: &[TMove],
    path: &mut Vec<EdgeWitness>,
) -> Result<LatticePoint> {
    let mut cur = from.clone();
    for mv in moves {
        let next = lat_umove(&inst.params, inst.tuple(), &cur, mv.slot, mv.dir)?.ok_or_else(|| {
            Error::InternalInvariantViolation(format!("diagonal move {mv:?} leaves the moduli space"))
        })?;
        path.push(checked(inst, umove_edge(&cur, &next, mv.slot, mv.dir))?);
        cur = next;
    }
    Ok(cur)
}

/// Path of edges from `l` to the reference point.
fn path_to_reference(
    inst: &Instance,
    reference: &Reference,
    l: &LatticePoint,
    trace: &mut PfTrace,
) -> Result<Vec<EdgeWitness>> {
    let mut path = Vec::new();
    let (slots, shrunk) = pf_shrink_head(inst, reference, l, trace)?;
    let mut cur = l.clone();
    for i in slots {
        let next = lat_umove(&inst.params, inst.tuple(), &cur, i, MoveDir::Forward)?.expect("move was feasible");
        path.push(checked(inst, umove_edge(&cur, &next, i, MoveDir::Forward))?);
        cur = next;
    }
    debug_assert_eq!(cur, shrunk);

    // nilpotent edge to the diagonal companion
    let (a, v) = reference.relative(inst, &cur)?;
    let x3: Vec<i64> = reference.x.iter().zip(&a).map(|(x, a)| x - a).collect();
    let y3: Vec<i64> = reference.y.iter().zip(&a).map(|(y, a)| y + a).collect();
    let m3 = diagonal(inst, &x3, &y3)?;
    if !m3.is_point() {
        return Err(Error::InternalInvariantViolation(format!("diagonal companion is not a point: {}", m3.check)));
    }
    if m3.basis != cur.basis {
        let ctx = inst.ctx();
        let z = Series::zero(ctx);
        let n = MatrixTuple(
            v.iter().zip(&a).map(|(v, &ai)| Mat2::new(z.clone(), v.shift(-ai).neg(), z.clone(), z.clone())).collect(),
        );
        let w = EdgeWitness {
            source: cur.id().to_string(),
            target: m3.id().to_string(),
            source_basis: cur.basis.clone(),
            target_basis: m3.basis.clone(),
            kind: WitnessKind::Nilpotent { c: MatrixTuple::identity(ctx, a.len()), n },
        };
        path.push(checked(inst, w)?);
    }

    // balance the companion, then shrink what is left of a
    let t3 = t_of(inst, &x3, &y3)?;
    let bal = pf_balance_exponents(&IrreducibleState::new(inst.params.p(), inst.params.e, t3), trace)?;
    if !bal.normalize.is_empty() {
        return Err(Error::InternalInvariantViolation("diagonal companion needed normalization".into()));
    }
    let balanced = apply_moves(inst, &m3, &bal.balance, &mut path)?;
    let mut st = reference.state(inst);
    st.a = reference.x.iter().zip(balanced.exponents()).map(|(x, (xb, _))| x - xb).collect();
    let moves = pf_reduce_a(&st, trace)?;
    let end = apply_moves(inst, &balanced, &moves, &mut path)?;
    if end.basis != reference.point.basis {
        return Err(Error::InternalInvariantViolation("a-reduction did not reach the reference point".into()));
    }
    Ok(path)
}

pub(super) fn connect(
    inst: &Instance,
    l1: &LatticePoint,
    l2: &LatticePoint,
    trace: &mut PfTrace,
) -> Result<Vec<EdgeWitness>> {
    let reference = Reference::from_endpoint(inst, l1, trace)?;
    let left = path_to_reference(inst, &reference, l1, trace)?;
    let right = path_to_reference(inst, &reference, l2, trace)?;
    join_paths(inst, left, right)
}
