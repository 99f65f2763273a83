//! Affine solution spaces of linear systems over a finite field (codes).

use std::sync::Arc;

use crate::algebra::FieldCtx;

/// Solutions of `M x = rhs` as `particular + span(kernel)`, or `None` if the
/// system is inconsistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSpace {
    pub particular: Vec<u32>,
    pub kernel: Vec<Vec<u32>>,
}

pub fn solve_affine(ctx: &FieldCtx, rows: &[Vec<u32>], rhs: &[u32], nvars: usize) -> Option<AffineSpace> {
    let mut m: Vec<Vec<u32>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, &b)| {
            let mut row = r.clone();
            row.push(b);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..nvars {
        let Some(found) = (r..m.len()).find(|&i| m[i][col] != 0) else { continue };
        m.swap(r, found);
        let inv = ctx.inv(m[r][col]).expect("nonzero pivot");
        for x in m[r].iter_mut() {
            *x = ctx.mul(*x, inv);
        }
        for i in 0..m.len() {
            if i != r && m[i][col] != 0 {
                let f = m[i][col];
                for j in 0..=nvars {
                    let t = ctx.mul(f, m[r][j]);
                    m[i][j] = ctx.sub(m[i][j], t);
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if m[r..].iter().any(|row| row[nvars] != 0) {
        return None;
    }
    let mut particular = vec![0u32; nvars];
    for (i, &c) in pivots.iter().enumerate() {
        particular[c] = m[i][nvars];
    }
    let free: Vec<usize> = (0..nvars).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&f| {
            let mut v = vec![0u32; nvars];
            v[f] = 1;
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = ctx.neg(m[i][f]);
            }
            v
        })
        .collect();
    Some(AffineSpace { particular, kernel })
}

impl AffineSpace {
    pub fn dimension(&self) -> usize {
        self.kernel.len()
    }

    /// Every point of the space, given `q = |F|`; callers bound `q^dim`.
    pub fn points(&self, ctx: &Arc<FieldCtx>) -> impl Iterator<Item = Vec<u32>> + '_ {
        let q = ctx.size() as u64;
        let total = q.pow(self.dimension() as u32);
        let ctx = ctx.clone();
        (0..total).map(move |mut idx| {
            let mut x = self.particular.clone();
            for k in &self.kernel {
                let c = (idx % q) as u32;
                idx /= q;
                if c != 0 {
                    for (xi, &ki) in x.iter_mut().zip(k) {
                        *xi = ctx.add(*xi, ctx.mul(c, ki));
                    }
                }
            }
            x
        })
    }
}
