mod common;

use modasm_core::optimizer::{check_solution, ProblemSize};
use modasm_core::polytope::{icosphere, support_by_bisection};
use modasm_core::{
    actuation_matrix, augment_wrench_set, extract_graph, membership, propagate_poses, solve_single, support_in_direction, AngleVector,
    AssemblyGraph, ForcePolytope, LatticeConfig, ModuleParams, SolverOptions, WrenchTask,
};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::Rng;

fn domino() -> AssemblyGraph {
    let c = LatticeConfig::single().attach(LatticeConfig::single().available_connectors()[0]).unwrap();
    extract_graph(&c).unwrap()
}

fn toy_task(p: &ModuleParams) -> WrenchTask {
    augment_wrench_set(&WrenchTask::from_forces(&[[0.0, 0.36, 0.0], [0.0, -0.36, 0.0]]).unwrap(), 2, p)
}

#[test]
fn lp_support_matches_bisection_oracle() {
    let p = ModuleParams::default();
    let mut rng = common::rng(20);
    let mut compared = 0;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 5;
        let g = common::random_graph(n, &mut rng);
        let a = common::random_alpha(&g, 0.05, &mut rng);
        let am = actuation_matrix(&propagate_poses(&g, &a, &p).unwrap(), &p);
        let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.2..1.0)).normalize();
        let lp = support_in_direction(&am, &dir, p.u_max()).unwrap();
        let oracle = support_by_bisection(&am, &dir, p.u_max()).unwrap();
        let scale = 4.0 * n as f64 * p.c_f * p.u_max();
        let err = (lp - oracle).abs() / scale;
        worst = worst.max(err);
        compared += 1;
    }
    assert_eq!(compared, 100);
    assert!(worst <= 1e-6, "worst relative gap {worst}");
}

#[test]
fn membership_examples() {
    let p = ModuleParams::default();
    let g = AssemblyGraph::single();
    let am = actuation_matrix(&propagate_poses(&g, &AngleVector::planar(&g), &p).unwrap(), &p);
    let hover = [0.0, 0.0, p.m * p.g, 0.0, 0.0, 0.0];
    let full = 4.0 * p.c_f * p.u_max();

    let inside = membership(&am, &hover, p.u_max(), &hover).unwrap();
    assert!(inside.feasible && inside.margin > 0.0);
    let u = inside.inputs.unwrap();
    assert!(u.iter().all(|x| (x - p.hover_input()).abs() < 1e-6 * p.hover_input()));

    let top = [0.0, 0.0, full, 0.0, 0.0, 0.0];
    let edge = membership(&am, &top, p.u_max(), &hover).unwrap();
    assert!(edge.feasible && edge.margin.abs() < 1e-9);

    let sideways = [0.5 * p.m * p.g, 0.0, p.m * p.g, 0.0, 0.0, 0.0];
    let out = membership(&am, &sideways, p.u_max(), &hover).unwrap();
    assert!(!out.feasible && out.margin < 0.0);

    let down = [0.0, 0.0, -1.0, 0.0, 0.0, 0.0];
    let none = membership(&am, &hover, p.u_max(), &down).unwrap();
    assert_eq!(none.margin, -1.0);
}

#[test]
fn sampled_polytope_contains_hover_offset() {
    let p = ModuleParams::default();
    let g = AssemblyGraph::single();
    let am = actuation_matrix(&propagate_poses(&g, &AngleVector::planar(&g), &p).unwrap(), &p);
    let dirs = icosphere(1);
    let poly = ForcePolytope::sample(&am, p.u_max(), &dirs, Vector3::zeros()).unwrap();
    assert_eq!(poly.extents.len(), 42);
    let up = dirs.iter().position(|d| (d - Vector3::z()).norm() < 1e-12);
    if let Some(k) = up {
        assert!((poly.extents[k].unwrap() - 4.0 * p.c_f * p.u_max()).abs() < 1e-9);
    }
    assert!(poly.to_csv().starts_with("dir_x,dir_y,dir_z,s"));
}

#[test]
fn optimizer_residuals_survive_independent_check() {
    let p = ModuleParams::default();
    let g = domino();
    let task = toy_task(&p);
    let opts = SolverOptions::default();
    let r = solve_single(&g, &task, &p, &opts).unwrap();
    assert!(r.feasible);
    let check = check_solution(&g, &r.alpha, &r.inputs, &task, &p, opts.extent(&p)).unwrap();
    assert!(check.passes(1e-6, 1e-9, 1e-6));
    assert_eq!(check.max_eq_residual, r.max_eq_residual);
    assert_eq!(check.min_clearance_margin, r.min_clearance_margin);
    let cost: f64 = r.inputs.iter().zip(&task.weights).map(|(u, w)| w * u.iter().map(|x| x * x).sum::<f64>()).sum();
    assert!((cost - r.cost).abs() <= 1e-9 * cost);
}

#[test]
fn more_restarts_never_hurt() {
    let p = ModuleParams::default();
    let g = domino();
    let task = toy_task(&p);
    let mut last: Option<(bool, f64)> = None;
    for restarts in [0, 1, 3, 6] {
        let r = solve_single(&g, &task, &p, &SolverOptions { restarts, seed: 5, ..Default::default() }).unwrap();
        if let Some((was_feasible, cost)) = last {
            assert!(r.feasible || !was_feasible);
            if was_feasible {
                assert!(r.cost <= cost * (1.0 + 1e-12));
            }
        }
        last = Some((r.feasible, r.cost));
    }
    assert!(last.unwrap().0);
}

#[test]
fn weight_scaling_scales_cost_only() {
    let p = ModuleParams::default();
    let g = domino();
    let task = toy_task(&p);
    let opts = SolverOptions { restarts: 1, ..Default::default() };
    let base = solve_single(&g, &task, &p, &opts).unwrap();
    let scaled = solve_single(&g, &task.scaled_weights(3.5), &p, &opts).unwrap();
    assert!((scaled.cost / base.cost - 3.5).abs() < 1e-9);
    for (x, y) in base.alpha.0.iter().zip(&scaled.alpha.0) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn problem_size_formulas() {
    assert_eq!(ProblemSize::new(90, 10), ProblemSize { variables: 3691, equalities: 60, inequalities: 4005 });
    assert_eq!(ProblemSize::new(1, 1), ProblemSize { variables: 6, equalities: 6, inequalities: 0 });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn support_is_positively_homogeneous_in_u_max(seed in any::<u64>(), k in 0.5f64..3.0) {
        let p = ModuleParams::default();
        let mut rng = common::rng(seed);
        let g = common::random_graph(3, &mut rng);
        let a = common::random_alpha(&g, 0.05, &mut rng);
        let am = actuation_matrix(&propagate_poses(&g, &a, &p).unwrap(), &p);
        let dir = Vector3::new(0.1, 0.2, 1.0).normalize();
        let s1 = support_in_direction(&am, &dir, p.u_max()).unwrap();
        let s2 = support_in_direction(&am, &dir, k * p.u_max()).unwrap();
        prop_assert!((s2 - k * s1).abs() <= 1e-7 * (1.0 + s2.abs()));
    }
}
