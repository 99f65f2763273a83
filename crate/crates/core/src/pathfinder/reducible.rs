//! Reducible ambient `((a_i, b_i; 0, c_i))_i`, `n >= 2`.
//!
//! The second endpoint in coordinates of the first is
//! `R_i = (u^-s_i, v_i; 0, u^s_i)`. A forward move on the second endpoint
//! lowers `s_i` by one; a forward move on the first raises it by one. Once
//! every `s_i` vanishes, `(1 + N)` with `N_i = (0, v_i; 0, 0)` carries the first
//! endpoint onto the second.

use super::{checked, join_paths, umove_edge, PfTrace, Phase};
use crate::algebra::{Mat2, Series};
use crate::certify::{EdgeWitness, MoveDir, WitnessKind};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lattice::{lat_is_ordinary, lat_umove, LatticePoint};
use crate::moduli::relative_position;
use crate::phimod::MatrixTuple;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndpointMove {
    pub side: Side,
    pub slot: usize,
    pub dir: MoveDir,
}

/// Both current endpoints and the relative position between them.
#[derive(Debug, Clone)]
pub struct ReducibleState {
    pub left: LatticePoint,
    pub right: LatticePoint,
    pub s: Vec<i64>,
    pub v: Vec<Series>,
    /// Moves applied so far, with the lattice each one produced.
    pub history: Vec<(EndpointMove, LatticePoint)>,
}

impl ReducibleState {
    pub fn new(inst: &Instance, left: LatticePoint, right: LatticePoint) -> Result<ReducibleState> {
        let mut st = ReducibleState { left, right, s: Vec::new(), v: Vec::new(), history: Vec::new() };
        st.refresh(inst)?;
        Ok(st)
    }

    fn refresh(&mut self, inst: &Instance) -> Result<()> {
        self.s.clear();
        self.v.clear();
        for i in 0..self.left.n() {
            let r = relative_position(&self.left.basis.0[i], &self.right.basis.0[i], inst.params.precision)?;
            let s = r.e[1][1].offset();
            if r.e[0][0].offset() != -s {
                return Err(Error::InternalInvariantViolation(format!(
                    "relative position at block {} has determinant valuation {}",
                    i + 1,
                    r.e[0][0].offset() + s
                )));
            }
            self.s.push(s);
            self.v.push(r.e[0][1].clone());
        }
        Ok(())
    }

    pub fn potential(&self) -> i64 {
        self.s.iter().map(|s| s.abs()).sum()
    }
}

fn stuck(inst: &Instance, st: &ReducibleState, trace: &mut PfTrace, why: &str) -> Error {
    let msg = format!("{why} at s = {:?}", st.s);
    trace.contradiction(&msg);
    let ordinary = [&st.left, &st.right]
        .iter()
        .map(|l| lat_is_ordinary(&inst.params, l).map(|o| o.is_ordinary()))
        .collect::<Result<Vec<_>>>();
    match ordinary {
        Ok(o) if o.iter().any(|&x| x) => Error::OrdinaryInputDetected(msg),
        Ok(_) => Error::InternalInvariantViolation(format!("{msg}, yet both endpoints classify as non-ordinary")),
        Err(e) => e,
    }
}

/// Drive every `s_i` to zero, largest `|s_i|` first (ties: smallest index).
pub fn pf_reduce_s(inst: &Instance, st: &mut ReducibleState, trace: &mut PfTrace) -> Result<Vec<EndpointMove>> {
    let params = &inst.params;
    let run = trace.begin(Phase::ReduceS);
    trace.record(run, "start", st.s.clone(), st.potential());
    if params.e < params.p() {
        if st.s.iter().any(|&s| s != 0) {
            return Err(stuck(inst, st, trace, "nonzero relative exponent with e = p - 1"));
        }
        return Ok(Vec::new());
    }
    let mut moves = Vec::new();
    while st.potential() > 0 {
        let mut order: Vec<usize> = (0..st.s.len()).filter(|&i| st.s[i] != 0).collect();
        order.sort_by_key(|&i| (-st.s[i].abs(), i));
        let mut applied = false;
        for i in order {
            let side = if st.s[i] > 0 { Side::Right } else { Side::Left };
            let target = match side {
                Side::Left => &st.left,
                Side::Right => &st.right,
            };
            if let Some(moved) = lat_umove(params, inst.tuple(), target, i, MoveDir::Forward)? {
                let mv = EndpointMove { side, slot: i, dir: MoveDir::Forward };
                match side {
                    Side::Left => st.left = moved.clone(),
                    Side::Right => st.right = moved.clone(),
                }
                let before = st.potential();
                st.refresh(inst)?;
                if st.potential() != before - 1 {
                    return Err(Error::InternalInvariantViolation(format!(
                        "move {mv:?} changed the potential from {before} to {}",
                        st.potential()
                    )));
                }
                st.history.push((mv, moved));
                moves.push(mv);
                trace.record(run, "move", st.s.clone(), st.potential());
                applied = true;
                break;
            }
        }
        if !applied {
            return Err(stuck(inst, st, trace, "no relative exponent can be reduced"));
        }
    }
    Ok(moves)
}

pub(super) fn connect(
    inst: &Instance,
    l1: &LatticePoint,
    l2: &LatticePoint,
    trace: &mut PfTrace,
) -> Result<Vec<EdgeWitness>> {
    let mut st = ReducibleState::new(inst, l1.clone(), l2.clone())?;
    pf_reduce_s(inst, &mut st, trace)?;
    let (mut left, mut right) = (Vec::new(), Vec::new());
    let (mut cur_l, mut cur_r) = (l1.clone(), l2.clone());
    for (mv, lat) in &st.history {
        let (cur, path) = match mv.side {
            Side::Left => (&mut cur_l, &mut left),
            Side::Right => (&mut cur_r, &mut right),
        };
        path.push(checked(inst, umove_edge(cur, lat, mv.slot, mv.dir))?);
        *cur = lat.clone();
    }
    if st.left.basis != st.right.basis {
        let ctx = inst.ctx();
        let n = MatrixTuple(
            st.v.iter()
                .map(|v| Mat2::new(Series::zero(ctx), v.clone(), Series::zero(ctx), Series::zero(ctx)))
                .collect(),
        );
        let w = EdgeWitness {
            source: st.left.id().to_string(),
            target: st.right.id().to_string(),
            source_basis: st.left.basis.clone(),
            target_basis: st.right.basis.clone(),
            kind: WitnessKind::Nilpotent { c: MatrixTuple::identity(ctx, st.v.len()), n },
        };
        left.push(checked(inst, w)?);
    }
    join_paths(inst, left, right)
}
