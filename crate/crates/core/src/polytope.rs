//! Zero-torque force polytope: the forces an assembly can produce with
//! bounded inputs while its net torque is exactly zero.

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::ActuationMatrix;
use crate::numeric::{bvls, lp};

/// Rescales `A` so inputs live in `[0, 1]` and every row is O(1).
/// Returns the scaled matrix, the force unit and the torque unit.
fn normalized(a: &ActuationMatrix, u_max: f64) -> (DMatrix<f64>, f64, f64) {
    let a_hat = a * u_max;
    let f_unit = a_hat.rows(0, 3).column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let t_unit = a_hat.rows(3, 3).column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(f_unit * 1e-6);
    let mut m = a_hat;
    for r in 0..3 {
        m.row_mut(r).scale_mut(1.0 / f_unit);
        m.row_mut(r + 3).scale_mut(1.0 / t_unit);
    }
    (m, f_unit, t_unit)
}

fn check_inputs(a: &ActuationMatrix, u_max: f64) -> Result<()> {
    if a.nrows() != 6 || a.ncols() == 0 || !a.ncols().is_multiple_of(4) {
        return Err(Error::DimensionMismatch(format!("actuation matrix is {}x{}", a.nrows(), a.ncols())));
    }
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("u_max must be positive, got {u_max}")));
    }
    Ok(())
}

fn unit(dir: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = dir.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParameter("direction must be a nonzero finite vector".into()));
    }
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("direction must have unit length, has {n}")));
    }
    Ok(*dir)
}

/// Largest `s` with `offset + s·dir` reachable at zero torque, or `None` when
/// `offset` itself is not reachable.
pub fn radial_extent(a: &ActuationMatrix, dir: &Vector3<f64>, u_max: f64, offset: &Vector3<f64>) -> Result<Option<f64>> {
    check_inputs(a, u_max)?;
    let d = unit(dir)?;
    let (m, f_unit, _) = normalized(a, u_max);
    let k = m.ncols();
    // variables [v; s], rows: M_f v − s d = offset, M_τ v = 0
    let mut lhs = DMatrix::zeros(6, k + 1);
    lhs.columns_mut(0, k).copy_from(&m);
    for r in 0..3 {
        lhs[(r, k)] = -d[r];
    }
    let mut rhs = DVector::zeros(6);
    for r in 0..3 {
        rhs[r] = offset[r] / f_unit;
    }
    let mut c = DVector::zeros(k + 1);
    c[k] = 1.0;
    let mut ub = vec![1.0; k];
    ub.push(f64::INFINITY);
    let sol = lp::solve(&c, &lhs, &rhs, &ub);
    match sol.status {
        lp::LpStatus::Optimal => Ok(Some(sol.x[k].max(0.0) * f_unit)),
        lp::LpStatus::Infeasible => Ok(None),
        status => Err(Error::ResourceLimit(format!("support LP ended with {status:?}"))),
    }
}

/// Largest force magnitude reachable along `dir` with zero torque.
pub fn support_in_direction(a: &ActuationMatrix, dir: &Vector3<f64>, u_max: f64) -> Result<f64> {
    Ok(radial_extent(a, dir, u_max, &Vector3::zeros())?.unwrap_or(0.0))
}

/// Independent check of [`support_in_direction`]: bisection on `s` with a
/// bounded least-squares feasibility test.
pub fn support_by_bisection(a: &ActuationMatrix, dir: &Vector3<f64>, u_max: f64) -> Result<f64> {
    check_inputs(a, u_max)?;
    let d = unit(dir)?;
    let (m, f_unit, _) = normalized(a, u_max);
    let k = m.ncols();
    let (lo_b, hi_b) = (vec![0.0; k], vec![1.0; k]);
    let reachable = |s: f64| {
        let w = DVector::from_fn(6, |r, _| if r < 3 { s * d[r] } else { 0.0 });
        bvls::bvls(&m, &w, &lo_b, &hi_b, 20 * k + 100).residual_norm <= 1e-10
    };
    // the force rows of M have unit max column norm, so s ≤ k
    let (mut lo, mut hi) = (0.0, k as f64 + 1.0);
    while hi - lo > 1e-11 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if reachable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo * f_unit)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub feasible: bool,
    /// `γ − 1`, where `γ` is the largest stretch with
    /// `b_hover + γ (b − b_hover)` reachable (capped). Positive means strictly
    /// inside; `−1` when even `b_hover` is unreachable.
    pub margin: f64,
    /// Inputs realizing `b` when feasible.
    pub inputs: Option<Vec<f64>>,
}

/// Cap on the stretch factor reported by [`membership`].
pub const MAX_STRETCH: f64 = 1e3;

/// Whether wrench `b` is reachable within `0 ≤ u ≤ u_max`, and by how much.
pub fn membership(a: &ActuationMatrix, b: &[f64; 6], u_max: f64, b_hover: &[f64; 6]) -> Result<Membership> {
    check_inputs(a, u_max)?;
    if b.iter().chain(b_hover).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite wrench".into()));
    }
    let (m, f_unit, t_unit) = normalized(a, u_max);
    let k = m.ncols();
    let scale = |r: usize| if r < 3 { 1.0 / f_unit } else { 1.0 / t_unit };
    // variables [v; γ]: M v − γ (b − b_h) = b_h, 0 ≤ γ ≤ cap
    let mut lhs = DMatrix::zeros(6, k + 1);
    lhs.columns_mut(0, k).copy_from(&m);
    for r in 0..6 {
        lhs[(r, k)] = -(b[r] - b_hover[r]) * scale(r);
    }
    let rhs = DVector::from_fn(6, |r, _| b_hover[r] * scale(r));
    let mut c = DVector::zeros(k + 1);
    c[k] = 1.0;
    let mut ub = vec![1.0; k];
    ub.push(MAX_STRETCH);
    let mut pinned = ub.clone();
    pinned[k] = 0.0;
    match lp::solve(&c, &lhs, &rhs, &pinned).status {
        lp::LpStatus::Optimal => {}
        lp::LpStatus::Infeasible => return Ok(Membership { feasible: false, margin: -1.0, inputs: None }),
        status => return Err(Error::ResourceLimit(format!("membership LP ended with {status:?}"))),
    }
    let sol = lp::solve(&c, &lhs, &rhs, &ub);
    let gamma = match sol.status {
        lp::LpStatus::Optimal => sol.x[k],
        lp::LpStatus::Infeasible => {
            return Ok(Membership { feasible: false, margin: -1.0, inputs: None });
        }
        status => return Err(Error::ResourceLimit(format!("membership LP ended with {status:?}"))),
    };
    let feasible = gamma >= 1.0 - 1e-9;
    let inputs = feasible.then(|| {
        // re-solve at γ = 1 for inputs that hit b exactly
        let w = DVector::from_fn(6, |r, _| b[r] * scale(r));
        let s = bvls::bvls(&m, &w, &vec![0.0; k], &vec![1.0; k], 20 * k + 100);
        s.x.iter().map(|v| v * u_max).collect()
    });
    Ok(Membership { feasible, margin: gamma - 1.0, inputs })
}

/// Unit-sphere directions from a subdivided icosahedron;
/// `10·4^level + 2` points (642 at level 3).
pub fn icosphere(level: usize) -> Vec<Vector3<f64>> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::new(v[0], v[1], v[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache = std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = mid(f[0], f[1], &mut verts);
            let bc = mid(f[1], f[2], &mut verts);
            let ca = mid(f[2], f[0], &mut verts);
            next.extend([[f[0], ab, ca], [f[1], bc, ab], [f[2], ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    verts
}

/// Radial extents of the zero-torque force set over a direction sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcePolytope {
    pub directions: Vec<[f64; 3]>,
    /// Extent along each direction (N); `None` where the offset is unreachable.
    pub extents: Vec<Option<f64>>,
    /// Force subtracted before measuring (zero for raw forces).
    pub offset: [f64; 3],
}

impl ForcePolytope {
    /// Samples every direction in parallel. With a nonzero `offset` (e.g. the
    /// weight `[0, 0, n m g]`) the extents describe the gravity-compensated set.
    pub fn sample(a: &ActuationMatrix, u_max: f64, directions: &[Vector3<f64>], offset: Vector3<f64>) -> Result<Self> {
        let extents = directions.par_iter().map(|d| radial_extent(a, d, u_max, &offset)).collect::<Result<Vec<_>>>()?;
        Ok(ForcePolytope {
            directions: directions.iter().map(|d| [d.x, d.y, d.z]).collect(),
            extents,
            offset: [offset.x, offset.y, offset.z],
        })
    }

    /// `dir_x,dir_y,dir_z,s` with an empty `s` where undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dir_x,dir_y,dir_z,s\n");
        for (d, s) in self.directions.iter().zip(&self.extents) {
            let s = s.map(|v| format!("{v:.12e}")).unwrap_or_default();
            out.push_str(&format!("{:.12e},{:.12e},{:.12e},{s}\n", d[0], d[1], d[2]));
        }
        out
    }
}
