//! World poses of an assembly and its actuation matrix.
//!
//! Body frames: connector 1 faces +y, 2 faces +x, 3 faces -y, 4 faces -x.
//! The root frame is `Rx(α0)·Ry(α1)`; each child is its parent's frame turned
//! by the edge angle about x (connectors 1/3) or y (connectors 2/4). Inputs are
//! squared rotor speeds ordered module-major, rotor-minor.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::Result;
use crate::graph::{AngleVector, AssemblyGraph, GraphEdge};
use crate::params::ModuleParams;

/// Wrench map, 6 x 4n.
pub type ActuationMatrix = DMatrix<f64>;

/// Rotor offsets in the body frame, unit arm length, X layout:
/// front-right, back-right, back-left, front-left (front is +x).
const ROTOR_DIRS: [(f64, f64); 4] = [(1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)];

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn d_rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn d_rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

/// Unit vector from a module's COM towards connector `c`.
pub fn face_direction(c: u8) -> Vector3<f64> {
    match c {
        1 => Vector3::y(),
        2 => Vector3::x(),
        3 => -Vector3::y(),
        4 => -Vector3::x(),
        _ => panic!("connector index {c} outside 1..=4"),
    }
}

/// Body-frame offset of rotor `q` (0-based).
pub fn rotor_offset(q: usize, l_arm: f64) -> Vector3<f64> {
    let k = l_arm / 2f64.sqrt();
    let (x, y) = ROTOR_DIRS[q];
    Vector3::new(k * x, k * y, 0.0)
}

/// Drag-torque sign `(-1)^q` with 1-based `q`.
pub fn spin_sign(q: usize) -> f64 {
    if (q + 1).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// COM-centred pose of every module and rotor.
#[derive(Clone, Debug)]
pub struct AssemblyPose {
    pub positions: Vec<Vector3<f64>>,
    pub rotations: Vec<Matrix3<f64>>,
    /// `4n` rotor centres, module-major.
    pub rotor_positions: Vec<Vector3<f64>>,
    /// COM in the root-anchored frame, before centring.
    pub com: Vector3<f64>,
    pub total_mass: f64,
}

impl AssemblyPose {
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Thrust axis `R_i e3` of module `i`.
    pub fn thrust_axis(&self, i: usize) -> Vector3<f64> {
        self.rotations[i].column(2).into_owned()
    }
}

fn hinge(edge: &GraphEdge, a: f64) -> Matrix3<f64> {
    if edge.hinges_about_x() {
        rot_x(a)
    } else {
        rot_y(a)
    }
}

fn d_hinge(edge: &GraphEdge, a: f64) -> Matrix3<f64> {
    if edge.hinges_about_x() {
        d_rot_x(a)
    } else {
        d_rot_y(a)
    }
}

/// Places every module by walking the tree from the root.
pub fn propagate_poses(graph: &AssemblyGraph, alpha: &AngleVector, params: &ModuleParams) -> Result<AssemblyPose> {
    graph.validate()?;
    alpha.check(graph)?;
    Ok(poses_unchecked(graph, alpha.as_slice(), params))
}

pub(crate) fn poses_unchecked(graph: &AssemblyGraph, a: &[f64], params: &ModuleParams) -> AssemblyPose {
    let n = graph.n;
    let mut rotations = vec![Matrix3::identity(); n];
    let mut raw = vec![Vector3::zeros(); n];
    rotations[0] = rot_x(a[0]) * rot_y(a[1]);
    for (e, edge) in graph.edges.iter().enumerate() {
        let rp = rotations[edge.parent];
        let rc = rp * hinge(edge, a[e + 2]);
        let t = face_direction(edge.cp);
        raw[edge.child] = raw[edge.parent] + params.l_c * (rp * t + rc * t);
        rotations[edge.child] = rc;
    }
    let com = raw.iter().sum::<Vector3<f64>>() / n as f64;
    let positions: Vec<_> = raw.iter().map(|p| p - com).collect();
    let rotor_positions = rotor_centres(&positions, &rotations, params.l_arm);
    AssemblyPose { positions, rotations, rotor_positions, com, total_mass: n as f64 * params.m }
}

fn rotor_centres(positions: &[Vector3<f64>], rotations: &[Matrix3<f64>], l_arm: f64) -> Vec<Vector3<f64>> {
    positions.iter().zip(rotations).flat_map(|(o, r)| (0..4).map(move |q| o + r * rotor_offset(q, l_arm))).collect()
}

/// One rotor of the assembly.
#[derive(Clone, Copy, Debug)]
pub struct Rotor {
    pub module: usize,
    pub position: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub spin_sign: f64,
}

pub fn rotor_layout(pose: &AssemblyPose, params: &ModuleParams) -> Vec<Rotor> {
    (0..pose.n())
        .flat_map(|i| {
            (0..4).map(move |q| Rotor {
                module: i,
                position: pose.positions[i] + pose.rotations[i] * rotor_offset(q, params.l_arm),
                axis: pose.thrust_axis(i),
                spin_sign: spin_sign(q),
            })
        })
        .collect()
}

/// Column of the wrench map for a rotor at `o` with thrust axis `z`.
fn wrench_column(o: &Vector3<f64>, z: &Vector3<f64>, sign: f64, params: &ModuleParams) -> [f64; 6] {
    let f = params.c_f * z;
    let t = params.c_f * o.cross(z) + sign * params.c_m * z;
    [f.x, f.y, f.z, t.x, t.y, t.z]
}

pub fn actuation_matrix(pose: &AssemblyPose, params: &ModuleParams) -> ActuationMatrix {
    let n = pose.n();
    let mut a = DMatrix::zeros(6, 4 * n);
    for i in 0..n {
        let z = pose.thrust_axis(i);
        for q in 0..4 {
            let col = wrench_column(&pose.rotor_positions[4 * i + q], &z, spin_sign(q), params);
            for (row, v) in col.into_iter().enumerate() {
                a[(row, 4 * i + q)] = v;
            }
        }
    }
    a
}

/// Derivatives of the COM-centred pose with respect to every angle.
#[derive(Clone, Debug)]
pub struct PoseDerivatives {
    /// `d_positions[j][i]` is `∂o_i/∂α_j`.
    pub d_positions: Vec<Vec<Vector3<f64>>>,
    /// `d_rotations[j][i]` is `∂R_i/∂α_j`.
    pub d_rotations: Vec<Vec<Matrix3<f64>>>,
}

/// Forward-mode derivatives along the tree, sharing the pose computation.
pub fn pose_derivatives(graph: &AssemblyGraph, a: &[f64], params: &ModuleParams) -> (AssemblyPose, PoseDerivatives) {
    let pose = poses_unchecked(graph, a, params);
    let n = graph.n;
    let m = graph.angle_count();
    let mut d_rot = vec![vec![Matrix3::zeros(); n]; m];
    let mut d_raw = vec![vec![Vector3::zeros(); n]; m];
    d_rot[0][0] = d_rot_x(a[0]) * rot_y(a[1]);
    d_rot[1][0] = rot_x(a[0]) * d_rot_y(a[1]);
    for (e, edge) in graph.edges.iter().enumerate() {
        let (p, c) = (edge.parent, edge.child);
        let h = hinge(edge, a[e + 2]);
        let t = face_direction(edge.cp);
        for j in 0..m {
            let mut dr = d_rot[j][p] * h;
            if j == e + 2 {
                dr += pose.rotations[p] * d_hinge(edge, a[e + 2]);
            }
            d_rot[j][c] = dr;
            d_raw[j][c] = d_raw[j][p] + params.l_c * (d_rot[j][p] * t + dr * t);
        }
    }
    for dp in d_raw.iter_mut() {
        let mean = dp.iter().sum::<Vector3<f64>>() / n as f64;
        for v in dp.iter_mut() {
            *v -= mean;
        }
    }
    (pose, PoseDerivatives { d_positions: d_raw, d_rotations: d_rot })
}

/// `∂A/∂α_j` for every angle, each 6 x 4n.
pub fn actuation_jacobian(graph: &AssemblyGraph, alpha: &AngleVector, params: &ModuleParams) -> Result<Vec<ActuationMatrix>> {
    graph.validate()?;
    alpha.check(graph)?;
    let (pose, d) = pose_derivatives(graph, alpha.as_slice(), params);
    Ok(jacobian_from(&pose, &d, params))
}

pub(crate) fn jacobian_from(pose: &AssemblyPose, d: &PoseDerivatives, params: &ModuleParams) -> Vec<ActuationMatrix> {
    let n = pose.n();
    let rho: Vec<_> = (0..4).map(|q| rotor_offset(q, params.l_arm)).collect();
    d.d_rotations
        .iter()
        .zip(&d.d_positions)
        .map(|(drs, dps)| {
            let mut da = DMatrix::zeros(6, 4 * n);
            for i in 0..n {
                let dr = &drs[i];
                if dr.iter().all(|v| *v == 0.0) && dps[i].iter().all(|v| *v == 0.0) {
                    continue;
                }
                let z = pose.thrust_axis(i);
                let dz = dr.column(2).into_owned();
                for q in 0..4 {
                    let o = pose.rotor_positions[4 * i + q];
                    let d_o = dps[i] + dr * rho[q];
                    let df = params.c_f * dz;
                    let dt = params.c_f * (d_o.cross(&z) + o.cross(&dz)) + spin_sign(q) * params.c_m * dz;
                    let col = 4 * i + q;
                    for k in 0..3 {
                        da[(k, col)] = df[k];
                        da[(k + 3, col)] = dt[k];
                    }
                }
            }
            da
        })
        .collect()
}
