//! `min  (a/2)‖v‖² + ½‖B v‖² + qᵀv   s.t.  0 ≤ v ≤ ub`  with `a > 0`.
//!
//! Splitting `z = B v` gives the dual
//! `φ(y) = (a/2)‖v‖² + (q − Bᵀy)ᵀv − ½‖y‖²`, `v(y) = clip((Bᵀy − q)/a)`,
//! which is strongly concave in `y`. Its generalized Hessian
//! `−(I + B_F B_Fᵀ / a)` is always invertible, so semismooth Newton with a
//! backtracking search converges in a handful of steps.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct PenalizedQpSolution {
    pub v: DVector<f64>,
    pub y: DVector<f64>,
    pub iterations: usize,
}

fn primal(b: &DMatrix<f64>, q: &DVector<f64>, a: f64, ub: f64, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let z = (b.transpose() * y - q) / a;
    let v = z.map(|x| x.clamp(0.0, ub));
    (z, v)
}

fn dual(b: &DMatrix<f64>, q: &DVector<f64>, a: f64, v: &DVector<f64>, y: &DVector<f64>) -> f64 {
    0.5 * a * v.norm_squared() + q.dot(v) - y.dot(&(b * v)) - 0.5 * y.norm_squared()
}

pub fn solve(b: &DMatrix<f64>, q: &DVector<f64>, a: f64, ub: f64, warm: Option<&DVector<f64>>) -> PenalizedQpSolution {
    assert!(a > 0.0);
    let rows = b.nrows();
    let mut y = warm.cloned().unwrap_or_else(|| DVector::zeros(rows));
    let (mut z, mut v) = primal(b, q, a, ub, &y);
    let mut phi = dual(b, q, a, &v, &y);
    let mut it = 0;
    let pattern = |z: &DVector<f64>| -> Vec<u8> { z.iter().map(|&x| (x > 0.0) as u8 + (x >= ub) as u8).collect() };
    let mut active = pattern(&z);
    for _ in 0..100 {
        let grad = -(b * &v) - &y;
        let scale = 1.0 + y.amax() + b.amax() * ub * (b.ncols() as f64).sqrt();
        if grad.amax() <= 1e-13 * scale {
            break;
        }
        it += 1;
        let mut h = DMatrix::<f64>::identity(rows, rows);
        for j in 0..b.ncols() {
            if z[j] > 0.0 && z[j] < ub {
                let col = b.column(j);
                h.ger(1.0 / a, &col, &col, 1.0);
            }
        }
        let d = h.cholesky().expect("I + BBᵀ/a is positive definite").solve(&grad);
        let slope = d.dot(&grad);
        let mut t = 1.0;
        let mut moved = false;
        let mut exact = false;
        for _ in 0..50 {
            let y_try = &y + t * &d;
            let (z_try, v_try) = primal(b, q, a, ub, &y_try);
            let phi_try = dual(b, q, a, &v_try, &y_try);
            if phi_try >= phi + 1e-4 * t * slope {
                let next = pattern(&z_try);
                // a full step on an unchanged piece is exact
                exact = t == 1.0 && next == active;
                active = next;
                y = y_try;
                z = z_try;
                v = v_try;
                phi = phi_try;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || exact {
            break;
        }
    }
    PenalizedQpSolution { v, y, iterations: it }
}
