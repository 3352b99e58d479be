//! Geometric tracking controller on SE(3) with regularized allocation.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ActuationMatrix, AssemblyPose};
use crate::numeric::bvls::bvls;
use crate::params::ModuleParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyState {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
    /// Body-frame angular velocity.
    pub omega: Vector3<f64>,
}

impl RigidBodyState {
    pub fn at_rest(p: Vector3<f64>) -> Self {
        RigidBodyState { p, v: Vector3::zeros(), attitude: UnitQuaternion::identity(), omega: Vector3::zeros() }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        *self.attitude.to_rotation_matrix().matrix()
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.v.iter()).chain(self.omega.iter()).all(|x| x.is_finite())
            && self.attitude.coords.iter().all(|x| x.is_finite())
    }
}

/// Mass and COM inertia of a rigid assembly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyInertia {
    pub mass: f64,
    pub j: Matrix3<f64>,
}

impl AssemblyInertia {
    pub fn new(mass: f64, j: Matrix3<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if (j - j.transpose()).amax() > 1e-12 * j.amax().max(1e-300) || j.cholesky().is_none() {
            return Err(Error::InvalidParameter("inertia must be symmetric positive definite".into()));
        }
        Ok(AssemblyInertia { mass, j })
    }

    /// Point masses at the module centres plus a thin disk of radius `l_arm`
    /// per module in its own plane.
    pub fn from_pose(pose: &AssemblyPose, params: &ModuleParams) -> Self {
        let m = params.m;
        let r2 = params.l_arm * params.l_arm;
        let disk = Matrix3::from_diagonal(&Vector3::new(m * r2 / 4.0, m * r2 / 4.0, m * r2 / 2.0));
        let mut j = Matrix3::zeros();
        for (o, r) in pose.positions.iter().zip(&pose.rotations) {
            j += m * (o.norm_squared() * Matrix3::identity() - o * o.transpose());
            j += r * disk * r.transpose();
        }
        let j = 0.5 * (j + j.transpose());
        AssemblyInertia { mass: m * pose.n() as f64, j }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// Diagonals of `K_P`, `K_D`, `K_R`, `K_ω`.
    pub kp: Vector3<f64>,
    pub kd: Vector3<f64>,
    pub kr: Vector3<f64>,
    pub kw: Vector3<f64>,
    pub delta: f64,
}

impl ControllerGains {
    pub fn defaults(inertia: &AssemblyInertia) -> Self {
        let tr = inertia.j.trace();
        ControllerGains {
            kp: Vector3::repeat(6.0 * inertia.mass),
            kd: Vector3::repeat(4.0 * inertia.mass),
            kr: Vector3::repeat(0.9 * tr),
            kw: Vector3::repeat(0.25 * tr),
            delta: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.kp.iter().chain(self.kd.iter()).chain(self.kr.iter()).chain(self.kw.iter());
        if all.clone().any(|g| !(*g > 0.0 && g.is_finite())) || !(self.delta > 0.0) {
            return Err(Error::InvalidParameter("gains and delta must be positive".into()));
        }
        Ok(())
    }
}

/// `[M]^∨` of a skew-symmetric matrix.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// `e_R = ½ (R_dᵀ R − Rᵀ R_d)^∨`.
pub fn attitude_error(r: &Matrix3<f64>, r_d: &Matrix3<f64>) -> Vector3<f64> {
    0.5 * vee(&(r_d.transpose() * r - r.transpose() * r_d))
}

/// Angle of `R_dᵀ R` in degrees.
pub fn orientation_error_deg(r: &Matrix3<f64>, r_d: &Matrix3<f64>) -> f64 {
    let c = (((r_d.transpose() * r).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

/// `u = Aᵀ (A Aᵀ + δ I)⁻¹ W`, clamped to `[0, u_max]`.
pub fn allocate(a: &ActuationMatrix, w: &Vector6<f64>, delta: f64, u_max: f64) -> DVector<f64> {
    allocate_unclamped(a, w, delta).map(|u| u.clamp(0.0, u_max))
}

/// The regularized right inverse without the input clamp.
pub fn allocate_unclamped(a: &ActuationMatrix, w: &Vector6<f64>, delta: f64) -> DVector<f64> {
    let mut g = a * a.transpose();
    for i in 0..g.nrows() {
        g[(i, i)] += delta;
    }
    let y = g.cholesky().expect("A Aᵀ + δ I is positive definite").solve(&DVector::from_column_slice(w.as_slice()));
    a.transpose() * y
}

/// Minimizer of `‖A u − W‖² + δ‖u‖²` over `0 ≤ u ≤ u_max`. Identical to
/// [`allocate`] whenever the unclamped solution already lies in the box.
pub fn allocate_bounded(a: &ActuationMatrix, w: &Vector6<f64>, delta: f64, u_max: f64) -> DVector<f64> {
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut m = DMatrix::zeros(rows + cols, cols);
    m.view_mut((0, 0), (rows, cols)).copy_from(a);
    m.view_mut((rows, 0), (cols, cols)).fill_diagonal(delta.sqrt());
    let mut rhs = DVector::zeros(rows + cols);
    rhs.rows_mut(0, rows).copy_from(w);
    bvls(&m, &rhs, &vec![0.0; cols], &vec![u_max; cols], 20 * cols).x
}

/// How a wrench is turned into rotor inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    /// Closed-form right inverse, then element-wise clamp.
    Clamped,
    /// Same objective with the input bounds enforced inside the minimization.
    #[default]
    Bounded,
}

/// Desired motion at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub a: Vector3<f64>,
    /// Attitude target, used as is when the assembly can hold any attitude.
    pub attitude: Matrix3<f64>,
}

/// Net force directions available at zero torque, in the body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForceSubspace {
    Full,
    /// Forces confined to the plane with this body normal; `mean` is the
    /// in-plane direction of the uniform-input thrust.
    Plane {
        normal: Vector3<f64>,
        mean: Vector3<f64>,
    },
    /// Forces along a single body direction.
    Line {
        axis: Vector3<f64>,
    },
}

impl ForceSubspace {
    pub fn dimension(&self) -> usize {
        match self {
            ForceSubspace::Full => 3,
            ForceSubspace::Plane { .. } => 2,
            ForceSubspace::Line { .. } => 1,
        }
    }

    /// Classifies `A` by the rank of its force rows restricted to the
    /// null space of its torque rows.
    pub fn of(a: &ActuationMatrix) -> Self {
        let k = a.ncols();
        let scale_f = a.rows(0, 3).amax().max(1e-300);
        let scale_t = a.rows(3, 3).amax().max(scale_f * 1e-9);
        let at = a.rows(3, 3) / scale_t;
        let svd_t = DMatrix::from(at).svd(false, true);
        let vt = svd_t.v_t.expect("requested");
        let tol_t = 1e-9 * svd_t.singular_values.max().max(1e-300);
        let rank_t = svd_t.singular_values.iter().filter(|&&s| s > tol_t).count();
        // rows of vt beyond the torque rank span its null space; vt is only
        // min(3, k) x k here, so complete the basis by projection
        let mut proj = DMatrix::<f64>::identity(k, k);
        for i in 0..rank_t {
            let r = vt.row(i).transpose();
            proj -= &r * r.transpose();
        }
        let forces = (a.rows(0, 3) / scale_f) * &proj;
        let svd_f = forces.clone().svd(true, false);
        let u = svd_f.u.expect("requested");
        let s = &svd_f.singular_values;
        let tol_f = 1e-7 * s.max().max(1e-300);
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
        let rank = order.iter().filter(|&&i| s[i] > tol_f).count();
        let col = |i: usize| Vector3::new(u[(0, i)], u[(1, i)], u[(2, i)]);
        let uniform = forces * DVector::from_element(k, 1.0);
        let uniform = Vector3::new(uniform[0], uniform[1], uniform[2]);
        match rank {
            3.. => ForceSubspace::Full,
            2 => {
                let normal = col(order[0]).cross(&col(order[1])).normalize();
                let mut mean = uniform - normal * normal.dot(&uniform);
                if mean.norm() < 1e-9 {
                    mean = col(order[0]);
                }
                ForceSubspace::Plane { normal, mean: mean.normalize() }
            }
            _ => {
                let mut axis = col(order[0]);
                if axis.dot(&uniform) < 0.0 {
                    axis = -axis;
                }
                ForceSubspace::Line { axis }
            }
        }
    }
}

fn min_rotation(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    match Rotation3::rotation_between(from, to) {
        Some(r) => *r.matrix(),
        // antiparallel: any half turn about an orthogonal axis
        None => {
            let helper = if from.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            let axis = nalgebra::Unit::new_normalize(from.cross(&helper));
            *Rotation3::from_axis_angle(&axis, std::f64::consts::PI).matrix()
        }
    }
}

/// Attitude the controller steers to: the target itself when fully actuated,
/// otherwise the target tilted so that the commanded force is producible.
pub fn desired_attitude(subspace: &ForceSubspace, target: &Matrix3<f64>, force_world: &Vector3<f64>) -> Matrix3<f64> {
    match subspace {
        ForceSubspace::Full => *target,
        ForceSubspace::Plane { normal, mean } => {
            let f_b = target.transpose() * force_world;
            let axis = mean.cross(normal);
            let theta = f_b.dot(normal).atan2(f_b.dot(mean));
            let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), theta);
            target * rot.matrix()
        }
        ForceSubspace::Line { axis } => {
            if force_world.norm() < 1e-12 {
                return *target;
            }
            min_rotation(&(target * axis), &force_world.normalize()) * target
        }
    }
}

/// Controller output for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlOutput {
    pub wrench: Vector6<f64>,
    pub inputs: DVector<f64>,
    pub desired_attitude: Matrix3<f64>,
}

/// Geometric controller bound to one assembly.
#[derive(Clone, Debug)]
pub struct Controller {
    pub actuation: ActuationMatrix,
    pub inertia: AssemblyInertia,
    pub gains: ControllerGains,
    pub u_max: f64,
    pub g: f64,
    pub subspace: ForceSubspace,
    pub allocation: AllocationMode,
}

impl Controller {
    pub fn new(actuation: ActuationMatrix, inertia: AssemblyInertia, gains: ControllerGains, u_max: f64, g: f64) -> Result<Self> {
        gains.validate()?;
        if actuation.nrows() != 6 {
            return Err(Error::DimensionMismatch(format!("actuation matrix has {} rows", actuation.nrows())));
        }
        let subspace = ForceSubspace::of(&actuation);
        Ok(Controller { actuation, inertia, gains, u_max, g, subspace, allocation: AllocationMode::default() })
    }

    pub fn with_allocation(mut self, mode: AllocationMode) -> Self {
        self.allocation = mode;
        self
    }

    /// Commanded world force `F_d'`.
    pub fn force_command(&self, state: &RigidBodyState, r: &Reference) -> Vector3<f64> {
        let m = self.inertia.mass;
        self.gains.kp.component_mul(&(r.p - state.p)) + self.gains.kd.component_mul(&(r.v - state.v)) + m * r.a + m * self.g * Vector3::z()
    }

    /// Desired body wrench for the current state, without allocation.
    pub fn wrench(&self, state: &RigidBodyState, r: &Reference) -> (Vector6<f64>, Matrix3<f64>) {
        let f_world = self.force_command(state, r);
        let r_d = desired_attitude(&self.subspace, &r.attitude, &f_world);
        let rot = state.rotation();
        let f_body = rot.transpose() * f_world;
        let e_r = attitude_error(&rot, &r_d);
        let e_w = state.omega;
        let jw = self.inertia.j * state.omega;
        let tau = -self.gains.kr.component_mul(&e_r) - self.gains.kw.component_mul(&e_w) + state.omega.cross(&jw);
        let mut w = Vector6::zeros();
        w.fixed_rows_mut::<3>(0).copy_from(&f_body);
        w.fixed_rows_mut::<3>(3).copy_from(&tau);
        (w, r_d)
    }

    /// Wrench plus bounded inputs. Allocation runs on `A u_max` so that the
    /// regularizer is weighed against O(1) entries.
    pub fn compute(&self, state: &RigidBodyState, r: &Reference) -> ControlOutput {
        let (w, r_d) = self.wrench(state, r);
        let a_hat = &self.actuation * self.u_max;
        let v = match self.allocation {
            AllocationMode::Clamped => allocate(&a_hat, &w, self.gains.delta, 1.0),
            AllocationMode::Bounded => allocate_bounded(&a_hat, &w, self.gains.delta, 1.0),
        };
        ControlOutput { wrench: w, inputs: v * self.u_max, desired_attitude: r_d }
    }
}
