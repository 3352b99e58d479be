//! Bounded-variable least squares, `min ‖M x − w‖  s.t.  lo ≤ x ≤ hi`.
//!
//! Active-set method in the style of Stark and Parker: variables at a bound
//! are released one at a time by gradient sign, the free subproblem is solved
//! by minimum-norm least squares, and steps that leave the box are cut back
//! to the first bound hit.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct BvlsSolution {
    pub x: DVector<f64>,
    /// `‖M x − w‖₂`.
    pub residual_norm: f64,
    pub iterations: usize,
}

fn free_least_squares(m: &DMatrix<f64>, free: &[usize], rhs: &DVector<f64>) -> DVector<f64> {
    let sub = DMatrix::from_fn(m.nrows(), free.len(), |r, c| m[(r, free[c])]);
    let svd = sub.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(1e-300);
    svd.solve(rhs, eps).expect("svd computed with both factors")
}

pub fn bvls(m: &DMatrix<f64>, w: &DVector<f64>, lo: &[f64], hi: &[f64], max_iter: usize) -> BvlsSolution {
    let n = m.ncols();
    assert_eq!(lo.len(), n);
    assert_eq!(hi.len(), n);
    let mut x = DVector::from_fn(n, |j, _| lo[j]);
    let mut free = vec![false; n];
    let mut it = 0;
    let tol = 1e-12 * (1.0 + m.amax() * w.amax());
    'outer: while it < max_iter {
        it += 1;
        let grad = m.transpose() * (w - m * &x);
        // release the bound variable whose gradient points furthest inward
        let mut best: Option<usize> = None;
        let mut best_val = tol;
        for j in 0..n {
            if free[j] {
                continue;
            }
            let inward = if x[j] <= lo[j] {
                grad[j]
            } else if x[j] >= hi[j] {
                -grad[j]
            } else {
                grad[j].abs()
            };
            if inward > best_val {
                best_val = inward;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        free[j] = true;
        loop {
            it += 1;
            if it > max_iter {
                break 'outer;
            }
            let idx: Vec<usize> = (0..n).filter(|&k| free[k]).collect();
            if idx.is_empty() {
                break;
            }
            let mut rhs = w.clone();
            for k in 0..n {
                if !free[k] {
                    let col = m.column(k);
                    rhs.axpy(-x[k], &col, 1.0);
                }
            }
            let z = free_least_squares(m, &idx, &rhs);
            let inside = idx.iter().zip(z.iter()).all(|(&k, &v)| v > lo[k] && v < hi[k]);
            if inside {
                for (&k, &v) in idx.iter().zip(z.iter()) {
                    x[k] = v;
                }
                break;
            }
            // step towards z until the first bound is hit
            let mut step = 1.0f64;
            for (&k, &v) in idx.iter().zip(z.iter()) {
                let d = v - x[k];
                if v <= lo[k] && d < 0.0 {
                    step = step.min((lo[k] - x[k]) / d);
                } else if v >= hi[k] && d > 0.0 {
                    step = step.min((hi[k] - x[k]) / d);
                }
            }
            step = step.max(0.0);
            for (&k, &v) in idx.iter().zip(z.iter()) {
                x[k] += step * (v - x[k]);
                if x[k] <= lo[k] + 1e-15 * (1.0 + lo[k].abs()) {
                    x[k] = lo[k];
                    free[k] = false;
                } else if x[k] >= hi[k] - 1e-15 * (1.0 + hi[k].abs()) {
                    x[k] = hi[k];
                    free[k] = false;
                }
            }
            if !idx.iter().any(|&k| !free[k]) {
                // numerical corner: nothing got fixed, accept the clipped point
                for &k in &idx {
                    x[k] = x[k].clamp(lo[k], hi[k]);
                }
                break;
            }
        }
    }
    BvlsSolution { residual_norm: (w - m * &x).norm(), x, iterations: it }
}
