//! Exponent bookkeeping for diagonal lattices in the irreducible normal form.
//!
//! A diagonal lattice `(diag(u^x_i, u^y_i))_i` of the ambient
//! `(alpha_1 (0,1; u^s,0), alpha_2, .., alpha_n)` has phi-matrices
//! `alpha_1 (0, u^S_1; u^T_1, 0)` and `alpha_i diag(u^S_i, u^T_i)`, with
//! `S_1 = p x_1 - y_2`, `T_1 = s + p y_1 - x_2` and, for `i >= 2`,
//! `S_i = p x_i - x_(i+1)`, `T_i = p y_i - y_(i+1)` (indices mod `n`).
//! Everything here works on the `t`-vector alone; `s_i = e - t_i`.

use serde::Serialize;

use super::{PfTrace, Phase};
use crate::certify::MoveDir;
use crate::error::{Error, Result};

/// A slot move on a diagonal lattice: forward is `x += 1, y -= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TMove {
    /// 0-based.
    pub slot: usize,
    pub dir: MoveDir,
}

impl TMove {
    pub fn forward(slot: usize) -> TMove {
        TMove { slot, dir: MoveDir::Forward }
    }
    pub fn inverse(slot: usize) -> TMove {
        TMove { slot, dir: MoveDir::Inverse }
    }
}

/// Exponent data of the reference lattice and of one endpoint relative to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrreducibleState {
    pub p: i64,
    pub e: i64,
    pub t: Vec<i64>,
    /// Relative exponents: the compared lattice is `diag(u^-a_i, u^a_i)` times
    /// the reference.
    pub a: Vec<i64>,
    /// `v_u` of the off-diagonal relative parameters, where known.
    pub r: Vec<Option<i64>>,
}

impl IrreducibleState {
    pub fn new(p: i64, e: i64, t: Vec<i64>) -> IrreducibleState {
        let n = t.len();
        IrreducibleState { p, e, t, a: vec![0; n], r: vec![None; n] }
    }
    pub fn n(&self) -> usize {
        self.t.len()
    }
    pub fn s(&self) -> Vec<i64> {
        self.t.iter().map(|t| self.e - t).collect()
    }
    pub fn gap(&self) -> i64 {
        self.t.iter().map(|t| (self.e - 2 * t).abs()).sum()
    }
    pub fn max_gap(&self) -> i64 {
        self.t.iter().map(|t| (self.e - 2 * t).abs()).max().unwrap_or(0)
    }
    /// `h_i = (-1)^floor((i-2)/n) (s_i - t_i)` for any integer `i` (1-based).
    pub fn h(&self, i: i64) -> i64 {
        let n = self.n() as i64;
        let idx = (i - 1).rem_euclid(n) as usize;
        let d = self.e - 2 * self.t[idx];
        if (i - 2).div_euclid(n) % 2 == 0 {
            d
        } else {
            -d
        }
    }
    /// The `S`-exponents of the compared diagonal lattice:
    /// `s_1 - p a_1 - a_2` and `s_i - p a_i + a_(i+1)`.
    pub fn shifted_s(&self) -> Vec<i64> {
        let n = self.n();
        let s = self.s();
        (0..n)
            .map(|i| {
                let next = self.a[(i + 1) % n];
                if i == 0 {
                    s[0] - self.p * self.a[0] - next
                } else {
                    s[i] - self.p * self.a[i] + next
                }
            })
            .collect()
    }
    pub fn constraints_hold(&self) -> bool {
        self.shifted_s().iter().all(|&c| (0..=self.e).contains(&c))
    }
}

/// Effect of a slot move on the `t`-vector (`n >= 2`).
pub fn apply_tmove(t: &mut [i64], p: i64, mv: TMove) {
    let n = t.len();
    let sign = match mv.dir {
        MoveDir::Forward => 1,
        MoveDir::Inverse => -1,
    };
    t[mv.slot] -= sign * p;
    if mv.slot == 1 {
        t[0] -= sign;
    } else {
        t[(mv.slot + n - 1) % n] += sign;
    }
}

/// Apply a slot move to diagonal exponents.
pub fn apply_to_diagonal(x: &mut [i64], y: &mut [i64], mv: TMove) {
    let d = match mv.dir {
        MoveDir::Forward => 1,
        MoveDir::Inverse => -1,
    };
    x[mv.slot] += d;
    y[mv.slot] -= d;
}

/// `(S_i, T_i)` of a diagonal lattice.
pub fn diagonal_exponents(p: i64, s_amb: i64, x: &[i64], y: &[i64]) -> Vec<(i64, i64)> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            if i == 0 {
                (p * x[0] - y[j], s_amb + p * y[0] - x[j])
            } else {
                (p * x[i] - x[j], p * y[i] - y[j])
            }
        })
        .collect()
}

/// Moves produced by [`pf_balance_exponents`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Balancing {
    /// Moves bringing `t_1` into `[0, e]`; the intermediate lattices need
    /// not be moduli points.
    pub normalize: Vec<TMove>,
    /// Moves between moduli points reaching `|s_i - t_i| <= p + 1`.
    pub balance: Vec<TMove>,
    pub t: Vec<i64>,
}

fn ensure_in_window(st: &IrreducibleState, what: &str) -> Result<()> {
    if st.t.iter().all(|&t| (0..=st.e).contains(&t)) {
        Ok(())
    } else {
        Err(Error::InternalInvariantViolation(format!("{what}: t = {:?} left [0, {}]", st.t, st.e)))
    }
}

/// Normalize and balance the exponents of a diagonal lattice.
///
/// Requires `0 <= t_i <= e` for `i >= 2` and `t_1 >= 0`.
pub fn pf_balance_exponents(state: &IrreducibleState, trace: &mut PfTrace) -> Result<Balancing> {
    let n = state.n();
    let (p, e) = (state.p, state.e);
    if n < 2 {
        return Err(Error::InvalidInstance("balancing needs n >= 2".into()));
    }
    if state.t[0] < 0 || state.t[1..].iter().any(|&t| !(0..=e).contains(&t)) {
        return Err(Error::InternalInvariantViolation(format!("balancing precondition fails: t = {:?}", state.t)));
    }
    let mut st = state.clone();
    let mut normalize = Vec::new();
    let run = trace.begin(Phase::Normalize);
    while st.t[0] > e {
        let m = (0..n).rev().find(|&i| st.t[i] != e).expect("t_1 differs from e");
        let mut seq: Vec<usize> = (m + 1..n).collect();
        seq.push(0);
        for slot in seq {
            apply_tmove(&mut st.t, p, TMove::forward(slot));
            normalize.push(TMove::forward(slot));
        }
        trace.record(run, "normalize", st.t.clone(), st.t[0]);
        if normalize.len() > 64 * n * (state.t[0].unsigned_abs() as usize + 1) {
            return Err(Error::InternalInvariantViolation("normalization does not terminate".into()));
        }
    }
    if st.t[0] < 0 {
        let msg = format!("exceptional configuration t = {:?} with e = {e}: the ambient is reducible", st.t);
        trace.contradiction(&msg);
        return Err(Error::IrreducibilityViolation(msg));
    }
    ensure_in_window(&st, "normalization")?;

    let bound = p + 1;
    let mut balance = Vec::new();
    let run = trace.begin(Phase::Balance);
    trace.record(run, "start", st.t.clone(), st.gap());
    while st.max_gap() > bound {
        let two_n = 2 * n as i64;
        let j0 = (1..=two_n)
            .find(|&j| st.h(j) >= p + 2 && st.h(j - 1) < e)
            .ok_or_else(|| Error::InternalInvariantViolation(format!("no balancing index for t = {:?}", st.t)))?;
        let slot = ((j0 - 1) % n as i64) as usize;
        let mv = if (2..=n as i64 + 1).contains(&j0) { TMove::inverse(slot) } else { TMove::forward(slot) };
        let before = st.gap();
        apply_tmove(&mut st.t, p, mv);
        ensure_in_window(&st, "balancing")?;
        if st.gap() > before - 2 {
            return Err(Error::InternalInvariantViolation(format!(
                "balancing move {mv:?} changed the potential from {before} to {}",
                st.gap()
            )));
        }
        balance.push(mv);
        trace.record(run, "balance", st.t.clone(), st.gap());
    }
    trace.balanced(st.max_gap(), bound);
    Ok(Balancing { normalize, balance, t: st.t })
}

/// Greedy moves taking every `a_i` to zero while all constraints
/// `0 <= shifted_s_i <= e` hold. Requires `|a_i| <= 1`.
pub fn pf_reduce_a(state: &IrreducibleState, trace: &mut PfTrace) -> Result<Vec<TMove>> {
    let (p, e) = (state.p, state.e);
    if state.a.iter().any(|a| a.abs() > 1) {
        return Err(Error::InternalInvariantViolation(format!("a = {:?} exceeds the window |a_i| <= 1", state.a)));
    }
    if !state.constraints_hold() {
        return Err(Error::InternalInvariantViolation(format!(
            "a = {:?} violates the stability constraints {:?}",
            state.a,
            state.shifted_s()
        )));
    }
    if e == p - 1 && state.a.iter().any(|&a| a != 0) {
        let msg = format!("a = {:?} is nonzero although e = p - 1", state.a);
        trace.contradiction(&msg);
        return Err(Error::InternalInvariantViolation(msg));
    }
    let mut st = state.clone();
    let mut moves = Vec::new();
    let run = trace.begin(Phase::ReduceA);
    let potential = |s: &IrreducibleState| s.a.iter().map(|a| a.abs()).sum::<i64>();
    trace.record(run, "start", st.a.clone(), potential(&st));
    while st.a.iter().any(|&a| a != 0) {
        let mut done = false;
        for j in 0..st.n() {
            if st.a[j] == 0 {
                continue;
            }
            let mut next = st.clone();
            next.a[j] -= st.a[j].signum();
            if next.constraints_hold() {
                moves.push(if st.a[j] > 0 { TMove::forward(j) } else { TMove::inverse(j) });
                st = next;
                done = true;
                break;
            }
        }
        if !done {
            let msg = format!("a-reduction stuck at a = {:?}", st.a);
            trace.contradiction(&msg);
            return Err(Error::InternalInvariantViolation(msg));
        }
        trace.record(run, "reduce", st.a.clone(), potential(&st));
    }
    Ok(moves)
}
