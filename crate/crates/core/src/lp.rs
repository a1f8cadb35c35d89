//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min c·x  s.t.  A x = b, x ≥ 0` over any [`Scalar`]. With
//! `BigRational` every pivot is exact, which is what certificate checks use;
//! with `f64` pivot decisions use the scalar tolerance. Bland's rule
//! (smallest eligible entering index, smallest basic index among ratio ties)
//! rules out cycling on degenerate problems.
//!
//! The optimal dual vector is read off the artificial columns of the final
//! tableau: they hold `B⁻¹`, so `y = c_B B⁻¹` costs nothing extra.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("constraint matrix row {row} has {got} entries, expected {expected}")]
    Shape { row: usize, expected: usize, got: usize },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("pivot limit of {0} reached")]
    IterationLimit(usize),
}

/// `min c·x` subject to `A x = b`, `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct StandardForm<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub c: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal(LpSolution<S>),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub value: S,
    /// Equality-row duals: `Aᵀy ≤ c` and `b·y = value` at optimality.
    pub duals: Vec<S>,
    pub basis: Vec<usize>,
    pub pivots: usize,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    /// Reduced-cost row; last entry is minus the objective value.
    cost: Vec<S>,
    basis: Vec<usize>,
    n: usize,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn width(&self) -> usize {
        self.rows.first().map_or(self.n, |r| r.len())
    }

    fn rhs(&self) -> usize {
        self.width() - 1
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col].clone();
            if f == S::zero() {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        let f = self.cost[col].clone();
        if f != S::zero() {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    fn reset_costs(&mut self, c: &[S]) {
        let w = self.width();
        let mut cost = vec![S::zero(); w];
        cost[..c.len()].clone_from_slice(c);
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            let cb = cost_of(c, bv);
            if cb == S::zero() {
                continue;
            }
            for (v, rv) in cost.iter_mut().zip(row) {
                *v = v.clone() - cb.clone() * rv.clone();
            }
        }
        self.cost = cost;
    }

    /// Runs Bland pivots over columns `< allowed`. `Ok(false)` on unbounded.
    fn optimize(&mut self, allowed: usize, limit: usize) -> Result<bool, LpError> {
        let rhs = self.rhs();
        loop {
            let Some(col) = (0..allowed).find(|&j| self.cost[j].is_negative()) else {
                return Ok(true);
            };
            let mut best: Option<(usize, S)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = row[rhs].clone() / row[col].clone();
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else {
                return Ok(false);
            };
            if self.pivots >= limit {
                return Err(LpError::IterationLimit(limit));
            }
            self.pivot(r, col);
        }
    }
}

fn cost_of<S: Scalar>(c: &[S], j: usize) -> S {
    c.get(j).cloned().unwrap_or_else(S::zero)
}

/// Solves the standard-form problem. Rows may be redundant.
pub fn solve<S: Scalar>(problem: &StandardForm<S>) -> Result<LpOutcome<S>, LpError> {
    let m = problem.b.len();
    let n = problem.c.len();
    for (row, r) in problem.a.iter().enumerate() {
        if r.len() != n {
            return Err(LpError::Shape {
                row,
                expected: n,
                got: r.len(),
            });
        }
    }
    if problem.a.len() != m {
        return Err(LpError::Shape {
            row: problem.a.len(),
            expected: m,
            got: problem.a.len(),
        });
    }
    let limit = 50_000 + 200 * (n + m);

    // Rows flipped so b ≥ 0, artificial identity appended.
    let mut signs = vec![S::one(); m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = problem.b[i] < S::zero();
        let mut row = Vec::with_capacity(n + m + 1);
        for v in &problem.a[i] {
            row.push(if flip { -v.clone() } else { v.clone() });
        }
        for k in 0..m {
            row.push(if k == i { S::one() } else { S::zero() });
        }
        row.push(if flip { -problem.b[i].clone() } else { problem.b[i].clone() });
        if flip {
            signs[i] = -S::one();
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis: (n..n + m).collect(),
        n,
        pivots: 0,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![S::zero(); n + m];
    for v in &mut phase1[n..] {
        *v = S::one();
    }
    t.reset_costs(&phase1);
    if m > 0 {
        t.optimize(n + m, limit)?;
    }
    let rhs = t.rhs();
    let infeasibility = -t.cost[rhs].clone();
    if infeasibility.is_positive() {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive artificials out of the basis where a structural pivot exists.
    for r in 0..m {
        if t.basis[r] < n {
            continue;
        }
        if let Some(col) = (0..n).find(|&j| !t.rows[r][j].is_negligible()) {
            t.pivot(r, col);
        }
    }

    // Phase 2 on structural columns only.
    t.reset_costs(&problem.c);
    if !t.optimize(n, limit)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![S::zero(); n];
    for (row, &bv) in t.rows.iter().zip(&t.basis) {
        if bv < n {
            x[bv] = row[rhs].clone();
        }
    }
    let value = -t.cost[rhs].clone();
    let duals = (0..m)
        .map(|i| {
            let mut y = S::zero();
            for (row, &bv) in t.rows.iter().zip(&t.basis) {
                let cb = cost_of(&problem.c, bv);
                if cb != S::zero() && bv < n {
                    y = y + cb * row[n + i].clone();
                }
            }
            y * signs[i].clone()
        })
        .collect();
    Ok(LpOutcome::Optimal(LpSolution {
        x,
        value,
        duals,
        basis: t.basis,
        pivots: t.pivots,
    }))
}
