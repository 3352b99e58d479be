//! Fixed-step rigid-body simulation of an assembly under the controller.

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix3, Quaternion, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::control::{orientation_error_deg, AllocationMode, AssemblyInertia, Controller, ControllerGains, Reference, RigidBodyState};
use crate::downwash::{clearance_constraints, CapsuleExtent};
use crate::error::{Error, Result};
use crate::graph::{AngleVector, AssemblyGraph};
use crate::kinematics::{actuation_matrix, propagate_poses, rot_x, rot_z, ActuationMatrix};
use crate::params::ModuleParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Hover,
    Circle,
    Figure8,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    #[serde(default = "one")]
    pub l0: f64,
    #[serde(default = "ten")]
    pub tc: f64,
    #[serde(default = "one")]
    pub h0: f64,
    /// Fixed roll target (rad).
    #[serde(default)]
    pub roll: f64,
    /// Fixed yaw target (rad).
    #[serde(default)]
    pub yaw: f64,
}

fn one() -> f64 {
    1.0
}

fn ten() -> f64 {
    10.0
}

impl TrajectorySpec {
    pub fn new(kind: TrajectoryKind) -> Self {
        TrajectorySpec { kind, l0: 1.0, tc: 10.0, h0: 1.0, roll: 0.0, yaw: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tc > 0.0) || !(self.l0 >= 0.0) || ![self.h0, self.roll, self.yaw].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("trajectory needs tc > 0, l0 >= 0 and finite values".into()));
        }
        Ok(())
    }

    pub fn attitude(&self) -> Matrix3<f64> {
        rot_z(self.yaw) * rot_x(self.roll)
    }

    /// Position, velocity and acceleration at time `t`.
    pub fn reference(&self, t: f64) -> Reference {
        let w = 2.0 * PI / self.tc;
        let (s, c) = (w * t).sin_cos();
        let l = self.l0;
        let (p, v, a) = match self.kind {
            TrajectoryKind::Hover => (Vector3::new(0.0, 0.0, self.h0), Vector3::zeros(), Vector3::zeros()),
            TrajectoryKind::Circle => (
                Vector3::new(l * c, l * s, self.h0),
                Vector3::new(-l * w * s, l * w * c, 0.0),
                Vector3::new(-l * w * w * c, -l * w * w * s, 0.0),
            ),
            TrajectoryKind::Figure8 => {
                // x = l sin cos = (l/2) sin 2wt
                let (s2, c2) = (2.0 * w * t).sin_cos();
                (
                    Vector3::new(0.5 * l * s2, l * s, self.h0 - l / 3.0 * s),
                    Vector3::new(l * w * c2, l * w * c, -l / 3.0 * w * c),
                    Vector3::new(-2.0 * l * w * w * s2, -l * w * w * s, l / 3.0 * w * w * s),
                )
            }
        };
        Reference { p, v, a, attitude: self.attitude() }
    }
}

/// Rigid-body plant driven by rotor inputs.
#[derive(Clone, Debug)]
pub struct Plant {
    pub actuation: ActuationMatrix,
    pub inertia: AssemblyInertia,
    j_inv: Matrix3<f64>,
    pub g: f64,
    /// Speed and rate limits beyond which the run is declared diverged.
    pub max_speed: f64,
    pub max_rate: f64,
}

#[derive(Clone, Copy)]
struct Deriv {
    dp: Vector3<f64>,
    dv: Vector3<f64>,
    dq: Quaternion<f64>,
    dw: Vector3<f64>,
}

impl Plant {
    pub fn new(actuation: ActuationMatrix, inertia: AssemblyInertia, g: f64) -> Self {
        let j_inv = inertia.j.try_inverse().expect("inertia is positive definite");
        Plant { actuation, inertia, j_inv, g, max_speed: 1e3, max_rate: 1e3 }
    }

    fn deriv(&self, p: &Vector3<f64>, v: &Vector3<f64>, q: &Quaternion<f64>, w: &Vector3<f64>, wrench: &Vector6<f64>) -> Deriv {
        let _ = p;
        let rot = UnitQuaternion::new_normalize(*q);
        let f = wrench.fixed_rows::<3>(0).into_owned();
        let tau = wrench.fixed_rows::<3>(3).into_owned();
        let dv = rot * f / self.inertia.mass - self.g * Vector3::z();
        let dq = q * Quaternion::new(0.0, w.x, w.y, w.z) * 0.5;
        let dw = self.j_inv * (tau - w.cross(&(self.inertia.j * w)));
        Deriv { dp: *v, dv, dq, dw }
    }

    /// One RK4 step with the inputs held constant.
    pub fn step(&self, s: &RigidBodyState, u: &DVector<f64>, dt: f64, t: f64) -> Result<RigidBodyState> {
        let wrench = Vector6::from_column_slice((&self.actuation * u).as_slice());
        let q0 = *s.attitude.quaternion();
        let k1 = self.deriv(&s.p, &s.v, &q0, &s.omega, &wrench);
        let k2 = self.deriv(
            &(s.p + 0.5 * dt * k1.dp),
            &(s.v + 0.5 * dt * k1.dv),
            &(q0 + k1.dq * (0.5 * dt)),
            &(s.omega + 0.5 * dt * k1.dw),
            &wrench,
        );
        let k3 = self.deriv(
            &(s.p + 0.5 * dt * k2.dp),
            &(s.v + 0.5 * dt * k2.dv),
            &(q0 + k2.dq * (0.5 * dt)),
            &(s.omega + 0.5 * dt * k2.dw),
            &wrench,
        );
        let k4 = self.deriv(&(s.p + dt * k3.dp), &(s.v + dt * k3.dv), &(q0 + k3.dq * dt), &(s.omega + dt * k3.dw), &wrench);
        let h = dt / 6.0;
        let next = RigidBodyState {
            p: s.p + h * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp),
            v: s.v + h * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
            attitude: UnitQuaternion::new_normalize(q0 + (k1.dq + k2.dq * 2.0 + k3.dq * 2.0 + k4.dq) * h),
            omega: s.omega + h * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw),
        };
        let t = t + dt;
        if !next.is_finite() {
            return Err(Error::NumericalDivergence { t, reason: "non-finite state".into() });
        }
        if next.v.norm() > self.max_speed {
            return Err(Error::NumericalDivergence { t, reason: format!("speed {:.3e} m/s", next.v.norm()) });
        }
        if next.omega.norm() > self.max_rate {
            return Err(Error::NumericalDivergence { t, reason: format!("rate {:.3e} rad/s", next.omega.norm()) });
        }
        Ok(next)
    }

    pub fn kinetic_energy(&self, s: &RigidBodyState) -> f64 {
        0.5 * self.inertia.mass * s.v.norm_squared() + 0.5 * s.omega.dot(&(self.inertia.j * s.omega))
    }
}

/// One logged sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSample {
    pub t: f64,
    pub p: [f64; 3],
    pub v: [f64; 3],
    /// `w, x, y, z`.
    pub quat: [f64; 4],
    pub omega: [f64; 3],
    pub ref_p: [f64; 3],
    pub err_ang_deg: f64,
    pub wrench: [f64; 6],
    pub u_min: f64,
    pub u_max_used: f64,
    pub min_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub rms_position_error: f64,
    pub final_position_error: f64,
    pub max_orientation_error_deg: f64,
    /// Largest orientation error over the second half of the run.
    pub steady_orientation_error_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub dt: f64,
    pub samples: Vec<SimSample>,
    pub summary: SimSummary,
}

impl SimLog {
    pub const CSV_HEADER: &'static str =
        "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,ref_px,ref_py,ref_pz,err_ang_deg,u_min,u_max_used,min_margin";

    /// Writes every `stride`-th sample.
    pub fn to_csv(&self, stride: usize) -> String {
        let mut out = String::with_capacity(self.samples.len() / stride.max(1) * 200);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in self.samples.iter().step_by(stride.max(1)) {
            let vals: Vec<String> = std::iter::once(s.t)
                .chain(s.p)
                .chain(s.v)
                .chain(s.quat)
                .chain(s.omega)
                .chain(s.ref_p)
                .chain([s.err_ang_deg, s.u_min, s.u_max_used, s.min_margin])
                .map(|v| format!("{v:.9e}"))
                .collect();
            out.push_str(&vals.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub duration: f64,
    pub dt: f64,
    /// Gains; `None` uses the defaults for the assembly inertia.
    pub gains: Option<ControllerGains>,
    pub extent: Option<CapsuleExtent>,
    pub allocation: AllocationMode,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { duration: 10.0, dt: 1e-3, gains: None, extent: None, allocation: AllocationMode::default() }
    }
}

/// Closed-loop run of one assembly, starting on the reference.
pub fn run(graph: &AssemblyGraph, alpha: &AngleVector, params: &ModuleParams, traj: &TrajectorySpec, opts: &SimOptions) -> Result<SimLog> {
    traj.validate()?;
    params.validate()?;
    if !(opts.dt > 0.0 && opts.duration >= 0.0) {
        return Err(Error::InvalidParameter("dt must be positive and duration non-negative".into()));
    }
    let pose = propagate_poses(graph, alpha, params)?;
    let a = actuation_matrix(&pose, params);
    let inertia = AssemblyInertia::from_pose(&pose, params);
    let gains = opts.gains.unwrap_or_else(|| ControllerGains::defaults(&inertia));
    let controller = Controller::new(a.clone(), inertia, gains, params.u_max(), params.g)?.with_allocation(opts.allocation);
    let plant = Plant::new(a, inertia, params.g);
    let margin = clearance_constraints(&pose, params, opts.extent.unwrap_or_else(|| CapsuleExtent::from_params(params))).min_margin;

    let r0 = traj.reference(0.0);
    let mut state = RigidBodyState { p: r0.p, v: r0.v, attitude: UnitQuaternion::from_matrix(&r0.attitude), omega: Vector3::zeros() };
    let steps = (opts.duration / opts.dt).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = i as f64 * opts.dt;
        let r = traj.reference(t);
        let out = controller.compute(&state, &r);
        let q = state.attitude.quaternion();
        samples.push(SimSample {
            t,
            p: state.p.into(),
            v: state.v.into(),
            quat: [q.w, q.i, q.j, q.k],
            omega: state.omega.into(),
            ref_p: r.p.into(),
            err_ang_deg: orientation_error_deg(&state.rotation(), &out.desired_attitude),
            wrench: out.wrench.into(),
            u_min: out.inputs.min(),
            u_max_used: out.inputs.max(),
            min_margin: margin,
        });
        if i < steps {
            state = plant.step(&state, &out.inputs, opts.dt, t)?;
        }
    }
    let summary = summarize(&samples);
    Ok(SimLog { dt: opts.dt, samples, summary })
}

fn summarize(samples: &[SimSample]) -> SimSummary {
    let err = |s: &SimSample| (Vector3::from(s.p) - Vector3::from(s.ref_p)).norm();
    let n = samples.len().max(1) as f64;
    let rms = (samples.iter().map(|s| err(s).powi(2)).sum::<f64>() / n).sqrt();
    let half = samples.len() / 2;
    SimSummary {
        rms_position_error: rms,
        final_position_error: samples.last().map(err).unwrap_or(0.0),
        max_orientation_error_deg: samples.iter().map(|s| s.err_ang_deg).fold(0.0, f64::max),
        steady_orientation_error_deg: samples[half..].iter().map(|s| s.err_ang_deg).fold(0.0, f64::max),
    }
}
