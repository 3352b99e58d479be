//! Small dense solvers used by the optimizer, the polytope and the tests.

pub mod box_qp;
pub mod bvls;
pub mod lp;
pub mod penalized_qp;
