//! Capsule model of each module's downwash and the pairwise clearance check.

use nalgebra::Vector3;

use crate::kinematics::{AssemblyPose, PoseDerivatives};
use crate::params::ModuleParams;

const EPS: f64 = 1e-14;

/// Closest points between two segments.
#[derive(Clone, Copy, Debug)]
pub struct SegmentClosest {
    pub dist_sq: f64,
    /// Parameter in `[0, 1]` along the first segment.
    pub s: f64,
    /// Parameter in `[0, 1]` along the second segment.
    pub t: f64,
    pub c1: Vector3<f64>,
    pub c2: Vector3<f64>,
}

/// Closest points of `[p1, q1]` and `[p2, q2]` by clamped minimization of the
/// squared distance; handles point-like and parallel segments.
pub fn closest_points(p1: &Vector3<f64>, q1: &Vector3<f64>, p2: &Vector3<f64>, q2: &Vector3<f64>) -> SegmentClosest {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= EPS && e <= EPS {
        s = 0.0;
        t = 0.0;
    } else if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > EPS * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    SegmentClosest { dist_sq: (c1 - c2).norm_squared(), s, t, c1, c2 }
}

/// Minimum Euclidean distance between two closed segments.
pub fn segment_segment_distance(p1: &Vector3<f64>, q1: &Vector3<f64>, p2: &Vector3<f64>, q2: &Vector3<f64>) -> f64 {
    closest_points(p1, q1, p2, q2).dist_sq.sqrt()
}

/// Axial extent of the capsule below the module, `μ ∈ [a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CapsuleExtent {
    pub a: f64,
    pub b: f64,
}

impl CapsuleExtent {
    /// `[r/2, r/2 + 10 l_arm]`.
    pub fn from_params(params: &ModuleParams) -> Self {
        CapsuleExtent { a: params.r / 2.0, b: params.r / 2.0 + 10.0 * params.l_arm }
    }
}

/// Downwash capsule of one module.
#[derive(Clone, Copy, Debug)]
pub struct DownwashCapsule {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    pub radius: f64,
}

impl DownwashCapsule {
    pub fn new(origin: &Vector3<f64>, thrust_axis: &Vector3<f64>, extent: CapsuleExtent, radius: f64) -> Self {
        DownwashCapsule { start: origin - extent.a * thrust_axis, end: origin - extent.b * thrust_axis, radius }
    }
}

pub fn capsules(pose: &AssemblyPose, params: &ModuleParams, extent: CapsuleExtent) -> Vec<DownwashCapsule> {
    (0..pose.n()).map(|i| DownwashCapsule::new(&pose.positions[i], &pose.thrust_axis(i), extent, params.r)).collect()
}

/// Clearance of one unordered module pair.
#[derive(Clone, Copy, Debug)]
pub struct PairClearance {
    pub i: usize,
    pub j: usize,
    pub dist_sq: f64,
    /// `dist_sq - 4 r^2`; non-negative when the capsules do not overlap.
    pub margin: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ClearanceReport {
    /// Pairs `(i, j)` with `i < j` in lexicographic order.
    pub pairs: Vec<PairClearance>,
    pub min_margin: f64,
}

impl ClearanceReport {
    pub fn is_clear(&self, tol: f64) -> bool {
        self.min_margin >= -tol
    }

    /// CSV dump `i,j,distance,margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,distance,margin\n");
        for p in &self.pairs {
            out.push_str(&format!("{},{},{:.12e},{:.12e}\n", p.i, p.j, p.dist_sq.sqrt(), p.margin));
        }
        out
    }
}

pub fn clearance_constraints(pose: &AssemblyPose, params: &ModuleParams, extent: CapsuleExtent) -> ClearanceReport {
    let caps = capsules(pose, params, extent);
    let limit = 4.0 * params.r * params.r;
    let n = caps.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut min_margin = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let cp = closest_points(&caps[i].start, &caps[i].end, &caps[j].start, &caps[j].end);
            let margin = cp.dist_sq - limit;
            min_margin = min_margin.min(margin);
            pairs.push(PairClearance { i, j, dist_sq: cp.dist_sq, margin, s: cp.s, t: cp.t });
        }
    }
    ClearanceReport { pairs, min_margin }
}

/// Gradient of every pair's squared distance with respect to the angles,
/// holding the closest-point parameters fixed (valid wherever they are
/// locally unique).
pub fn clearance_gradients(pose: &AssemblyPose, d: &PoseDerivatives, report: &ClearanceReport, extent: CapsuleExtent) -> Vec<Vec<f64>> {
    let m = d.d_positions.len();
    report
        .pairs
        .iter()
        .map(|pc| {
            let mu_i = extent.a + pc.s * (extent.b - extent.a);
            let mu_j = extent.a + pc.t * (extent.b - extent.a);
            let zi = pose.thrust_axis(pc.i);
            let zj = pose.thrust_axis(pc.j);
            let ci = pose.positions[pc.i] - mu_i * zi;
            let cj = pose.positions[pc.j] - mu_j * zj;
            let diff = ci - cj;
            (0..m)
                .map(|k| {
                    let dzi = d.d_rotations[k][pc.i].column(2).into_owned();
                    let dzj = d.d_rotations[k][pc.j].column(2).into_owned();
                    let dci = d.d_positions[k][pc.i] - mu_i * dzi;
                    let dcj = d.d_positions[k][pc.j] - mu_j * dzj;
                    2.0 * diff.dot(&(dci - dcj))
                })
                .collect()
        })
        .collect()
}
