//! Design automation for assemblies of identical quadrotor modules.
//!
//! The pipeline enumerates non-isomorphic lattice assemblies, lifts each to a
//! connection tree with hinge angles, optimizes those angles together with the
//! rotor inputs for a set of task wrenches under downwash clearance, and flies
//! the chosen assembly in a rigid-body simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod control;
pub mod downwash;
pub mod error;
pub mod graph;
pub mod kinematics;
pub mod lattice;
pub mod numeric;
pub mod optimizer;
pub mod params;
pub mod polytope;
pub mod sampling;
pub mod sim;

pub use control::{allocate, allocate_bounded, AllocationMode, AssemblyInertia, Controller, ControllerGains, RigidBodyState};
pub use error::{Error, Result};
pub use graph::{extract_graph, AngleVector, AssemblyGraph, GraphEdge};
pub use kinematics::{actuation_jacobian, actuation_matrix, propagate_poses, ActuationMatrix, AssemblyPose};
pub use lattice::{canonicalize, enumerate_exhaustive, radius_of_gyration, CanonicalKey, LatticeConfig};
pub use optimizer::{
    augment_wrench_set, select_across, select_with_spec, solve_single, OptimizationResult, SelectionOutcome, SolverOptions, TaskSpec,
    WrenchTask,
};
pub use params::ModuleParams;
pub use polytope::{membership, support_in_direction, ForcePolytope, Membership};
pub use sampling::{sample_configs, sample_enumerate, SamplingParams};
pub use sim::{run as simulate, SimLog, SimOptions, TrajectoryKind, TrajectorySpec};
