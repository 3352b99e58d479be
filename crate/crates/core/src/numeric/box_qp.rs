//! Minimum-norm point of `{v : M v = w, 0 ≤ v ≤ ub}`.
//!
//! Works on the concave dual `φ(y) = min_{0≤v≤ub} ½‖v‖² − yᵀ(M v − w)`, whose
//! inner minimizer is `v = clip(Mᵀy)`. The dual has as many unknowns as `M`
//! has rows (six for a wrench), so a regularized semismooth Newton step with
//! an Armijo search is cheap and converges to machine precision on feasible
//! problems. On infeasible problems the dual is unbounded and the residual
//! stalls away from zero.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct BoxQpSolution {
    pub v: DVector<f64>,
    pub multipliers: DVector<f64>,
    /// `‖M v − w‖∞` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clip(z: &DVector<f64>, ub: f64) -> DVector<f64> {
    z.map(|x| x.clamp(0.0, ub))
}

fn dual_value(m: &DMatrix<f64>, w: &DVector<f64>, y: &DVector<f64>, ub: f64) -> (f64, DVector<f64>, DVector<f64>) {
    let z = m.transpose() * y;
    let v = clip(&z, ub);
    let val = 0.5 * v.norm_squared() - z.dot(&v) + y.dot(w);
    (val, z, v)
}

/// Solves `min ½‖v‖²  s.t.  M v = w,  0 ≤ v ≤ ub`.
///
/// `tol` is the absolute target on `‖M v − w‖∞`.
pub fn min_norm_box(m: &DMatrix<f64>, w: &DVector<f64>, ub: f64, tol: f64, max_iter: usize) -> BoxQpSolution {
    let rows = m.nrows();
    let gram = m * m.transpose();
    let scale = gram.trace().max(1e-300) / rows as f64;
    let reg0 = 1e-12 * scale;
    let mut y = {
        let mut g = gram.clone();
        for i in 0..rows {
            g[(i, i)] += reg0;
        }
        g.cholesky().map(|c| c.solve(w)).unwrap_or_else(|| DVector::zeros(rows))
    };
    let (mut phi, mut z, mut v) = dual_value(m, w, &y, ub);
    let mut r = w - m * &v;
    let mut it = 0;
    while it < max_iter {
        if r.amax() <= tol {
            return BoxQpSolution { v, multipliers: y, residual: r.amax(), iterations: it, converged: true };
        }
        it += 1;
        // generalized Hessian over the free set, regularized in proportion to
        // the residual so that rank-deficient free sets still give a step
        let mut h = DMatrix::zeros(rows, rows);
        for j in 0..m.ncols() {
            if z[j] > 0.0 && z[j] < ub {
                let col = m.column(j);
                h.ger(1.0, &col, &col, 1.0);
            }
        }
        let reg = reg0.max(1e-10 * scale * r.norm().min(1.0));
        for i in 0..rows {
            h[(i, i)] += reg;
        }
        let Some(ch) = h.cholesky() else { break };
        let d = ch.solve(&r);
        let slope = d.dot(&r);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let y_try = &y + step * &d;
            let (phi_try, z_try, v_try) = dual_value(m, w, &y_try, ub);
            if phi_try >= phi + 1e-4 * step * slope {
                y = y_try;
                phi = phi_try;
                z = z_try;
                v = v_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        r = w - m * &v;
        if !accepted || !phi.is_finite() {
            break;
        }
    }
    BoxQpSolution { residual: r.amax(), converged: r.amax() <= tol, v, multipliers: y, iterations: it }
}
