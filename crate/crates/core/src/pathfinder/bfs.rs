//! Breadth-first search over oracle edges between enumerated points.

use std::collections::{HashMap, VecDeque};

use super::{reverse_step, PfOptions};
use crate::certify::EdgeWitness;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lattice::LatticePoint;
use crate::moduli::{mod_adjacent, mod_enumerate, SearchStatus};

pub(super) fn connect(
    inst: &Instance,
    l1: &LatticePoint,
    l2: &LatticePoint,
    opts: &PfOptions,
) -> Result<Vec<EdgeWitness>> {
    let bounds = opts.bounds.clone().unwrap_or_else(|| inst.file.bounds.clone());
    let (points, explored) = match &opts.points {
        Some(p) => (p.clone(), 0),
        None => {
            let en = mod_enumerate(&inst.params, inst.tuple(), &bounds)?;
            if en.status == SearchStatus::BudgetExceeded {
                return Err(Error::SearchBudgetExceeded { explored: en.explored });
            }
            (en.points, en.explored)
        }
    };
    let find = |l: &LatticePoint| points.iter().position(|p| p.basis == l.basis);
    let (Some(start), Some(goal)) = (find(l1), find(l2)) else {
        return Err(Error::InvalidInstance("endpoint missing from the enumerated points".into()));
    };
    let mut prev: HashMap<usize, (usize, EdgeWitness)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut seen = vec![false; points.len()];
    seen[start] = true;
    while let Some(cur) = queue.pop_front() {
        if cur == goal {
            break;
        }
        for next in 0..points.len() {
            if seen[next] {
                continue;
            }
            let w = match mod_adjacent(&inst.params, &points[cur], &points[next], &bounds.oracle)? {
                Some(w) => Some(w),
                None => match mod_adjacent(&inst.params, &points[next], &points[cur], &bounds.oracle)? {
                    Some(back) => Some(reverse_step(inst, &back)?),
                    None => None,
                },
            };
            if let Some(w) = w {
                seen[next] = true;
                prev.insert(next, (cur, w));
                queue.push_back(next);
            }
        }
    }
    if !seen[goal] {
        return Err(Error::SearchBudgetExceeded { explored: explored + points.len() as u64 });
    }
    let mut steps = Vec::new();
    let mut at = goal;
    while at != start {
        let (from, w) = prev.remove(&at).expect("visited vertices have parents");
        steps.push(w);
        at = from;
    }
    steps.reverse();
    Ok(steps)
}
