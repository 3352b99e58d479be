//! Augmented Lagrangian over the task equalities and clearance inequalities.
//!
//! For fixed angles the inputs of each task only see a strongly convex box
//! QP, so they are eliminated exactly and the outer variables are the angles
//! alone. The reduced function is minimized by projected BFGS on the angle
//! box; its gradient follows from the envelope theorem. After convergence, the inputs are recomputed as exact
//! minimum-norm solutions at the final angles, and those define the result.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::downwash::{clearance_constraints, clearance_gradients, CapsuleExtent};
use crate::error::{Error, Result};
use crate::graph::{AngleVector, AssemblyGraph};
use crate::kinematics::{actuation_matrix, jacobian_from, pose_derivatives, poses_unchecked};
use crate::numeric::{box_qp, bvls, penalized_qp};
use crate::params::ModuleParams;

use super::task::WrenchTask;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Random restarts on top of the planar start.
    pub restarts: usize,
    pub seed: u64,
    /// Half-width of the uniform angle perturbation for restarts (rad).
    pub perturbation: f64,
    /// Equality tolerance, relative to `max(1, ‖b_k‖∞)`.
    pub tol_eq: f64,
    /// Clearance tolerance on `dist² − 4r²` (m²).
    pub tol_ineq: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Capsule extent; `None` uses the parameter default.
    pub extent: Option<CapsuleExtent>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restarts: 4,
            seed: 0,
            perturbation: 0.3,
            tol_eq: 1e-6,
            tol_ineq: 1e-6,
            max_outer: 500,
            max_inner: 200,
            extent: None,
        }
    }
}

impl SolverOptions {
    pub fn extent(&self, params: &ModuleParams) -> CapsuleExtent {
        self.extent.unwrap_or_else(|| CapsuleExtent::from_params(params))
    }
}

/// Decision-variable and constraint counts of the full problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSize {
    pub variables: usize,
    pub equalities: usize,
    pub inequalities: usize,
}

impl ProblemSize {
    pub fn new(n: usize, k: usize) -> Self {
        ProblemSize { variables: (n + 1) + 4 * n * k, equalities: 6 * k, inequalities: n * n.saturating_sub(1) / 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub alpha: AngleVector,
    /// Squared rotor speeds per task, each of length `4n`.
    pub inputs: Vec<Vec<f64>>,
    pub cost: f64,
    pub feasible: bool,
    /// Largest `‖A u_k − b_k‖∞ / max(1, ‖b_k‖∞)`.
    pub max_eq_residual: f64,
    /// Largest violation of `0 ≤ u ≤ u_max`.
    pub max_bound_violation: f64,
    /// Smallest `dist² − 4r²` over module pairs (m²); infinite for one module, stored as `null`.
    #[serde(with = "unbounded")]
    pub min_clearance_margin: f64,
    pub iterations: usize,
    pub solve_time_s: f64,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Residuals recomputed from scratch for an angle vector and inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualCheck {
    pub max_eq_residual: f64,
    pub max_bound_violation: f64,
    pub min_clearance_margin: f64,
}

impl ResidualCheck {
    pub fn passes(&self, tol_eq: f64, tol_bound: f64, tol_ineq: f64) -> bool {
        self.max_eq_residual <= tol_eq && self.max_bound_violation <= tol_bound && self.min_clearance_margin >= -tol_ineq
    }
}

/// Evaluates equality, bound and clearance residuals without any solver state.
pub fn check_solution(
    graph: &AssemblyGraph,
    alpha: &AngleVector,
    inputs: &[Vec<f64>],
    task: &WrenchTask,
    params: &ModuleParams,
    extent: CapsuleExtent,
) -> Result<ResidualCheck> {
    alpha.check(graph)?;
    if inputs.len() != task.len() {
        return Err(Error::DimensionMismatch(format!("{} input sets for {} wrenches", inputs.len(), task.len())));
    }
    let pose = poses_unchecked(graph, alpha.as_slice(), params);
    let a = actuation_matrix(&pose, params);
    let u_max = params.u_max();
    let mut eq = 0.0f64;
    let mut bound = 0.0f64;
    for (u, b) in inputs.iter().zip(&task.wrenches) {
        if u.len() != 4 * graph.n {
            return Err(Error::DimensionMismatch(format!("{} inputs for {} modules", u.len(), graph.n)));
        }
        let w = &a * DVector::from_column_slice(u);
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for r in 0..6 {
            eq = eq.max((w[r] - b[r]).abs() / scale);
        }
        for &x in u {
            bound = bound.max(-x).max(x - u_max);
        }
    }
    let report = clearance_constraints(&pose, params, extent);
    Ok(ResidualCheck { max_eq_residual: eq, max_bound_violation: bound, min_clearance_margin: report.min_margin })
}

/// Best inputs at fixed angles: exact minimum-norm solutions where the task
/// is reachable, bounded least squares otherwise.
pub fn evaluate_at(
    graph: &AssemblyGraph,
    alpha: &AngleVector,
    task: &WrenchTask,
    params: &ModuleParams,
    opts: &SolverOptions,
) -> Result<OptimizationResult> {
    graph.validate()?;
    task.validate()?;
    alpha.check(graph)?;
    let start = Instant::now();
    let mut r = polish(graph, alpha.as_slice(), task, params, opts);
    r.solve_time_s = start.elapsed().as_secs_f64();
    Ok(r)
}

fn polish(graph: &AssemblyGraph, alpha: &[f64], task: &WrenchTask, params: &ModuleParams, opts: &SolverOptions) -> OptimizationResult {
    let pose = poses_unchecked(graph, alpha, params);
    let u_max = params.u_max();
    let a_hat = actuation_matrix(&pose, params) * u_max;
    let n_in = a_hat.ncols();
    let mut inputs = Vec::with_capacity(task.len());
    let mut iterations = 0;
    for b in &task.wrenches {
        let w = DVector::from_column_slice(b);
        let scale = w.amax().max(1.0);
        let qp = box_qp::min_norm_box(&a_hat, &w, 1.0, 1e-13 * scale, 200);
        iterations += qp.iterations;
        let v = if qp.converged {
            qp.v
        } else {
            let ls = bvls::bvls(&a_hat, &w, &vec![0.0; n_in], &vec![1.0; n_in], 10 * n_in + 50);
            iterations += ls.iterations;
            if ls.residual_norm < (&w - &a_hat * &qp.v).norm() {
                ls.x
            } else {
                qp.v
            }
        };
        inputs.push(v.iter().map(|x| x.clamp(0.0, 1.0) * u_max).collect::<Vec<f64>>());
    }
    let alpha = AngleVector(alpha.to_vec());
    let extent = opts.extent(params);
    let check = check_solution(graph, &alpha, &inputs, task, params, extent).expect("dimensions are consistent");
    let cost = inputs.iter().zip(&task.weights).map(|(u, l)| l * u.iter().map(|x| x * x).sum::<f64>()).sum();
    OptimizationResult {
        feasible: check.passes(opts.tol_eq, 1e-9, opts.tol_ineq),
        alpha,
        inputs,
        cost,
        max_eq_residual: check.max_eq_residual,
        max_bound_violation: check.max_bound_violation,
        min_clearance_margin: check.min_clearance_margin,
        iterations,
        solve_time_s: 0.0,
    }
}

/// Multiplier state of the outer loop.
struct Multipliers {
    eq: Vec<DVector<f64>>,
    ineq: Vec<f64>,
    rho: f64,
}

struct Evaluation {
    value: f64,
    grad: Vec<f64>,
    /// Scaled equality residuals per task.
    eq: Vec<DVector<f64>>,
    /// Scaled clearance values (≥ 0 is clear).
    ineq: Vec<f64>,
}

/// Scaled reduced problem.
struct Reduced<'a> {
    graph: &'a AssemblyGraph,
    params: &'a ModuleParams,
    extent: CapsuleExtent,
    /// Row scaling of wrenches: forces by `n m g`, torques by `n m g l_c`.
    row_scale: [f64; 6],
    targets: Vec<DVector<f64>>,
    /// `2 λ_k / Σλ n`, floored to keep each QP strongly convex.
    curvature: Vec<f64>,
    clearance_scale: f64,
    clearance_buffer: f64,
    dual_warm: Vec<DVector<f64>>,
    pub evaluations: usize,
}

impl<'a> Reduced<'a> {
    fn new(graph: &'a AssemblyGraph, task: &WrenchTask, params: &'a ModuleParams, extent: CapsuleExtent) -> Self {
        let f_ref = params.weight(graph.n);
        let t_ref = f_ref * params.l_c;
        let row_scale = [1.0 / f_ref, 1.0 / f_ref, 1.0 / f_ref, 1.0 / t_ref, 1.0 / t_ref, 1.0 / t_ref];
        let targets = task.wrenches.iter().map(|b| DVector::from_fn(6, |r, _| b[r] * row_scale[r])).collect();
        let total: f64 = task.weights.iter().sum();
        let obj_scale = if total > 0.0 { total * graph.n as f64 } else { graph.n as f64 };
        let curvature = task.weights.iter().map(|l| (2.0 * l / obj_scale).max(1e-10)).collect();
        let limit = 4.0 * params.r * params.r;
        Reduced {
            graph,
            params,
            extent,
            row_scale,
            targets,
            curvature,
            clearance_scale: 1.0 / limit,
            clearance_buffer: 1e-4,
            dual_warm: vec![DVector::zeros(6); task.len()],
            evaluations: 0,
        }
    }

    fn scale_rows(&self, m: &mut DMatrix<f64>) {
        for r in 0..6 {
            let s = self.row_scale[r];
            m.row_mut(r).scale_mut(s);
        }
    }

    fn evaluate(&mut self, alpha: &[f64], mult: &Multipliers) -> Evaluation {
        self.evaluations += 1;
        let u_max = self.params.u_max();
        let (pose, d) = pose_derivatives(self.graph, alpha, self.params);
        let mut m = actuation_matrix(&pose, self.params) * u_max;
        self.scale_rows(&mut m);
        let mut jac = jacobian_from(&pose, &d, self.params);
        for j in jac.iter_mut() {
            *j *= u_max;
            self.scale_rows(j);
        }
        let rho = mult.rho;
        let sqrt_rho = rho.sqrt();
        let b = &m * sqrt_rho;
        let mut value = 0.0;
        let mut grad = vec![0.0; alpha.len()];
        let mut eq = Vec::with_capacity(self.targets.len());
        for k in 0..self.targets.len() {
            let w = &self.targets[k];
            let y = &mult.eq[k];
            let a = self.curvature[k];
            let q = m.transpose() * (y - rho * w);
            let sol = penalized_qp::solve(&b, &q, a, 1.0, Some(&self.dual_warm[k]));
            self.dual_warm[k] = sol.y;
            let v = sol.v;
            let c = &m * &v - w;
            value += 0.5 * a * v.norm_squared() + y.dot(&c) + 0.5 * rho * c.norm_squared();
            let lam = y + rho * &c;
            for (j, dj) in jac.iter().enumerate() {
                grad[j] += lam.dot(&(dj * &v));
            }
            eq.push(c);
        }
        let report = clearance_constraints(&pose, self.params, self.extent);
        let gradients = clearance_gradients(&pose, &d, &report, self.extent);
        let mut ineq = Vec::with_capacity(report.pairs.len());
        for (p, (pc, g)) in report.pairs.iter().zip(&gradients).enumerate() {
            let h = pc.margin * self.clearance_scale - self.clearance_buffer;
            let mu = mult.ineq[p];
            let act = (mu - rho * h).max(0.0);
            value += (act * act - mu * mu) / (2.0 * rho);
            if act > 0.0 {
                for (gj, dg) in grad.iter_mut().zip(g) {
                    *gj -= act * dg * self.clearance_scale;
                }
            }
            ineq.push(h);
        }
        Evaluation { value, grad, eq, ineq }
    }
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(-FRAC_PI_2, FRAC_PI_2);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64]) -> f64 {
    x.iter().zip(g).map(|(&xi, &gi)| ((xi - gi).clamp(-FRAC_PI_2, FRAC_PI_2) - xi).abs()).fold(0.0, f64::max)
}

/// Projected BFGS on the angle box: quasi-Newton steps on the variables not
/// held at a bound, projected backtracking along the step. Returns the final
/// evaluation, iteration count and whether the tolerance was met.
fn projected_bfgs(prob: &mut Reduced, x: &mut Vec<f64>, mult: &Multipliers, tol: f64, max_iter: usize) -> (Evaluation, usize, bool) {
    let m = x.len();
    let mut ev = prob.evaluate(x, mult);
    let g0 = ev.grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut h = DMatrix::<f64>::identity(m, m) * if g0 > 0.0 { (0.1 / g0).min(1.0) } else { 1.0 };
    for it in 0..max_iter {
        let pg = projected_gradient_norm(x, &ev.grad);
        if pg <= tol {
            return (ev, it, true);
        }
        let eps = pg.min(1e-8);
        let held: Vec<bool> =
            (0..m).map(|i| (x[i] <= -FRAC_PI_2 + eps && ev.grad[i] > 0.0) || (x[i] >= FRAC_PI_2 - eps && ev.grad[i] < 0.0)).collect();
        let g = DVector::from_fn(m, |i, _| if held[i] { 0.0 } else { ev.grad[i] });
        let mut d = -(&h * &g);
        for i in 0..m {
            if held[i] {
                d[i] = 0.0;
            }
        }
        if d.dot(&g) >= -1e-12 * d.norm() * g.norm() {
            h = DMatrix::identity(m, m) * (0.1 / g.amax()).min(1.0);
            d = -(&h * &g);
        }
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..40 {
            let mut xt: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + t * di).collect();
            project(&mut xt);
            let decrease: f64 = xt.iter().zip(x.iter()).zip(&ev.grad).map(|((a, b), gi)| (a - b) * gi).sum();
            let et = prob.evaluate(&xt, mult);
            if et.value <= ev.value + 1e-4 * decrease.min(0.0) && et.value <= ev.value {
                accepted = Some((xt, et));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, en)) = accepted else {
            return (ev, it, false);
        };
        let s = DVector::from_fn(m, |i, _| xn[i] - x[i]);
        let y = DVector::from_fn(m, |i, _| en.grad[i] - ev.grad[i]);
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if it == 0 {
                h = DMatrix::identity(m, m) * (sy / y.norm_squared());
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let stalled = s.amax() <= 1e-15 && (ev.value - en.value).abs() <= 1e-15 * ev.value.abs().max(1.0);
        *x = xn;
        ev = en;
        if stalled {
            let done = projected_gradient_norm(x, &ev.grad) <= tol;
            return (ev, it + 1, done);
        }
    }
    let done = projected_gradient_norm(x, &ev.grad) <= tol;
    (ev, max_iter, done)
}

fn violation(ev: &Evaluation) -> f64 {
    let eq = ev.eq.iter().map(|c| c.amax()).fold(0.0, f64::max);
    let ineq = ev.ineq.iter().map(|h| (-h).max(0.0)).fold(0.0, f64::max);
    eq.max(ineq)
}

/// One local run of the augmented Lagrangian from `alpha0`.
fn local_solve(
    graph: &AssemblyGraph,
    task: &WrenchTask,
    params: &ModuleParams,
    opts: &SolverOptions,
    alpha0: Vec<f64>,
) -> (Vec<f64>, usize) {
    const RHO_MAX: f64 = 1e7;
    const MULT_MAX: f64 = 1e6;
    let extent = opts.extent(params);
    let mut prob = Reduced::new(graph, task, params, extent);
    let pairs = graph.n * graph.n.saturating_sub(1) / 2;
    let mut mult = Multipliers { eq: vec![DVector::zeros(6); task.len()], ineq: vec![0.0; pairs], rho: 10.0 };
    let mut x = alpha0;
    project(&mut x);
    let mut tol_inner = 1e-3;
    let mut prev_viol = f64::INFINITY;
    let mut stalled = 0;
    let mut at_cap = 0;
    let mut iterations = 0;
    for _ in 0..opts.max_outer {
        let (ev, it, converged) = projected_bfgs(&mut prob, &mut x, &mult, tol_inner, opts.max_inner);
        iterations += it.max(1);
        let viol = violation(&ev);
        let settled = converged || it < opts.max_inner;
        if viol <= 1e-9 && settled && tol_inner <= 1e-5 {
            break;
        }
        // safeguarded first-order updates
        for (y, c) in mult.eq.iter_mut().zip(&ev.eq) {
            *y += mult.rho * c;
            y.apply(|v| *v = v.clamp(-MULT_MAX, MULT_MAX));
        }
        for (mu, h) in mult.ineq.iter_mut().zip(&ev.ineq) {
            *mu = (*mu - mult.rho * h).clamp(0.0, MULT_MAX);
        }
        let improved = viol < 0.99 * prev_viol;
        if viol > 0.25 * prev_viol && viol > 1e-9 {
            if mult.rho >= RHO_MAX && !improved {
                at_cap += 1;
                if at_cap >= 2 {
                    break;
                }
            }
            mult.rho = (mult.rho * 10.0).min(RHO_MAX);
        }
        if improved {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 8 {
                break;
            }
        }
        prev_viol = prev_viol.min(viol);
        tol_inner = (tol_inner * 0.1).max(1e-7);
    }
    (x, iterations)
}

/// Better of two results: feasible first, then lower cost, then lower residual.
fn better(a: &OptimizationResult, b: &OptimizationResult) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.cost < b.cost,
        (false, false) => a.max_eq_residual < b.max_eq_residual,
    }
}

/// Solves the configuration problem from the planar start plus seeded restarts.
pub fn solve_single(graph: &AssemblyGraph, task: &WrenchTask, params: &ModuleParams, opts: &SolverOptions) -> Result<OptimizationResult> {
    graph.validate()?;
    task.validate()?;
    params.validate()?;
    let start = Instant::now();
    let m = graph.angle_count();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<OptimizationResult> = None;
    let mut iterations = 0;
    for r in 0..=opts.restarts {
        let alpha0: Vec<f64> =
            if r == 0 { vec![0.0; m] } else { (0..m).map(|_| rng.random_range(-opts.perturbation..=opts.perturbation)).collect() };
        let (alpha, it) = local_solve(graph, task, params, opts, alpha0);
        iterations += it;
        let cand = polish(graph, &alpha, task, params, opts);
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = iterations;
    best.solve_time_s = start.elapsed().as_secs_f64();
    Ok(best)
}
