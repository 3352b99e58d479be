//! Joint angle and input optimization per configuration, and selection of
//! the smallest assembly that can realize a task.

mod select;
mod solver;
mod task;

pub use select::{select_across, select_with_spec, CandidateResult, SelectionOutcome};
pub use solver::{check_solution, evaluate_at, solve_single, OptimizationResult, ProblemSize, ResidualCheck, SolverOptions};
pub use task::{augment_wrench_set, TaskSpec, Wrench, WrenchTask};
