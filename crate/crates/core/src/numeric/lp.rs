//! Dense two-phase simplex for small linear programs with variable bounds.
//!
//! Solves `max cᵀx  s.t.  A x = b,  0 ≤ x ≤ ub` where entries of `ub` may be
//! infinite. Finite upper bounds become explicit slack rows. Dantzig pricing
//! is used until a run of degenerate pivots is seen, after which Bland's rule
//! takes over for the rest of the phase.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    /// rows × (cols + 1); last column is the right-hand side.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[(r, self.cols)]
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: Option<&mut [f64]>) {
        let p = self.t[(row, col)];
        let width = self.cols + 1;
        for j in 0..width {
            self.t[(row, j)] /= p;
        }
        let pivot_row: Vec<(usize, f64)> = (0..width)
            .filter_map(|j| {
                let v = self.t[(row, j)];
                (v != 0.0).then_some((j, v))
            })
            .collect();
        for r in 0..self.t.nrows() {
            if r == row {
                continue;
            }
            let f = self.t[(r, col)];
            if f != 0.0 {
                for &(j, v) in &pivot_row {
                    self.t[(r, j)] -= f * v;
                }
                self.t[(r, col)] = 0.0;
            }
        }
        if let Some(rc) = reduced {
            let f = rc[col];
            if f != 0.0 {
                for &(j, v) in &pivot_row {
                    if j < self.cols {
                        rc[j] -= f * v;
                    }
                }
                rc[col] = 0.0;
            }
        }
        self.is_basic[self.basis[row]] = false;
        self.is_basic[col] = true;
        self.basis[row] = col;
    }

    /// Maximizes `cost` from the current basis using only columns below `limit`.
    fn optimize(&mut self, cost: &[f64], limit: usize, max_iter: usize) -> (LpStatus, usize) {
        let m = self.t.nrows();
        let mut rc: Vec<f64> = (0..self.cols)
            .map(|j| {
                let mut v = cost[j];
                for r in 0..m {
                    let a = self.t[(r, j)];
                    if a != 0.0 {
                        v -= cost[self.basis[r]] * a;
                    }
                }
                v
            })
            .collect();
        let mut degenerate = 0;
        let mut bland = false;
        for it in 0..max_iter {
            let mut enter = None;
            let mut best = 1e-10;
            for j in 0..limit {
                if self.is_basic[j] || rc[j] <= best {
                    continue;
                }
                enter = Some(j);
                if bland {
                    break;
                }
                best = rc[j];
            }
            let Some(col) = enter else {
                return (LpStatus::Optimal, it);
            };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for r in 0..m {
                let a = self.t[(r, col)];
                if a > PIVOT_TOL {
                    let q = self.rhs(r).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => q < ratio - 1e-12 || (q <= ratio + 1e-12 && self.basis[r] < self.basis[l]),
                    };
                    if better {
                        ratio = q;
                        leave = Some(r);
                    }
                }
            }
            let Some(row) = leave else {
                return (LpStatus::Unbounded, it);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(row, col, Some(&mut rc));
        }
        (LpStatus::IterationLimit, max_iter)
    }
}

/// Solves `max cᵀx s.t. A x = b, 0 ≤ x ≤ ub`.
pub fn solve(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>, ub: &[f64]) -> LpSolution {
    let (m0, n) = a.shape();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m0);
    assert_eq!(ub.len(), n);
    let bounded: Vec<usize> = (0..n).filter(|&j| ub[j].is_finite()).collect();
    let m = m0 + bounded.len();
    let n_slack = bounded.len();
    let n_art = m;
    let cols = n + n_slack + n_art;
    let mut t = DMatrix::zeros(m, cols + 1);
    for r in 0..m0 {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(r, j)] = sign * a[(r, j)];
        }
        t[(r, cols)] = sign * b[r];
    }
    for (k, &j) in bounded.iter().enumerate() {
        let r = m0 + k;
        t[(r, j)] = 1.0;
        t[(r, n + k)] = 1.0;
        t[(r, cols)] = ub[j];
    }
    for r in 0..m {
        t[(r, n + n_slack + r)] = 1.0;
    }
    let mut basis: Vec<usize> = (0..m).map(|r| n + n_slack + r).collect();
    // slack rows start feasible with the slack basic
    for k in 0..n_slack {
        basis[m0 + k] = n + k;
    }
    let mut is_basic = vec![false; cols];
    for &j in &basis {
        is_basic[j] = true;
    }
    let mut tab = Tableau { t, basis, is_basic, cols };
    let max_iter = 50 * (m + cols) + 1000;

    // phase 1: maximize -Σ artificials
    let mut cost1 = vec![0.0; cols];
    for r in 0..m {
        cost1[n + n_slack + r] = -1.0;
    }
    let (st1, it1) = tab.optimize(&cost1, cols, max_iter);
    let infeas: f64 = (0..m).filter(|&r| tab.basis[r] >= n + n_slack).map(|r| tab.rhs(r).abs()).sum();
    let scale = 1.0 + b.amax() + ub.iter().copied().filter(|u| u.is_finite()).fold(0.0, f64::max);
    if st1 == LpStatus::IterationLimit || infeas > 1e-9 * scale {
        return LpSolution {
            status: if st1 == LpStatus::IterationLimit { LpStatus::IterationLimit } else { LpStatus::Infeasible },
            x: DVector::zeros(n),
            objective: f64::NAN,
            iterations: it1,
        };
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= n + n_slack {
            if let Some(j) = (0..n + n_slack).find(|&j| tab.t[(r, j)].abs() > 1e-9 && !tab.is_basic[j]) {
                tab.pivot(r, j, None);
            }
        }
    }
    let first_art = n + n_slack;
    let mut cost2 = vec![0.0; cols];
    for j in 0..n {
        cost2[j] = c[j];
    }
    let (st2, it2) = tab.optimize(&cost2, first_art, max_iter);
    let mut x = DVector::zeros(n);
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    for j in 0..n {
        if ub[j].is_finite() {
            x[j] = x[j].min(ub[j]);
        }
    }
    LpSolution { objective: c.dot(&x), status: st2, x, iterations: it1 + it2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_bounded_problem() {
        // max x + y  s.t.  x - y = 0,  0 ≤ x ≤ 2, 0 ≤ y ≤ 3  → x = y = 2
        let sol = solve(
            &DVector::from_vec(vec![1.0, 1.0]),
            &DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            &DVector::from_vec(vec![0.0]),
            &[2.0, 3.0],
        );
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 4.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let sol = solve(&DVector::from_vec(vec![1.0]), &DMatrix::from_row_slice(1, 1, &[1.0]), &DVector::from_vec(vec![5.0]), &[1.0]);
        assert_eq!(sol.status, LpStatus::Infeasible);
        let sol = solve(
            &DVector::from_vec(vec![1.0, 0.0]),
            &DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            &DVector::from_vec(vec![0.0]),
            &[f64::INFINITY, f64::INFINITY],
        );
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        // x + y = -(-1), duplicated row; max 2x + y with x ≤ 0.25
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let sol = solve(&DVector::from_vec(vec![2.0, 1.0]), &a, &b, &[0.25, f64::INFINITY]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 0.25).abs() < 1e-12);
        assert!((sol.x[1] - 0.75).abs() < 1e-12);
    }
}
