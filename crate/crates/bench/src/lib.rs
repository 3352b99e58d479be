//! Shared fixtures for the benchmarks.

use modasm_core::lattice::EnumerationLimits;
use modasm_core::{enumerate_exhaustive, extract_graph, AngleVector, AssemblyGraph, LatticeConfig, ModuleParams, WrenchTask};

/// All configurations of `n` modules.
pub fn configs(n: usize) -> Vec<LatticeConfig> {
    enumerate_exhaustive(n, EnumerationLimits::default()).expect("small n enumerates")
}

/// Graph of the first enumerated configuration of `n` modules.
pub fn graph(n: usize) -> AssemblyGraph {
    extract_graph(&configs(n)[0]).expect("enumerated configs are connected")
}

/// A fixed, nonzero angle vector for `graph`.
pub fn angles(graph: &AssemblyGraph) -> AngleVector {
    AngleVector((0..=graph.n).map(|i| 0.3 * ((i as f64) * 1.7).sin()).collect())
}

/// Sideways forces of half the assembly weight along x and y.
pub fn lateral_task(n: usize, params: &ModuleParams) -> WrenchTask {
    let w = params.weight(n);
    WrenchTask::from_forces(&[[0.5 * w, 0.0, 0.0], [0.0, 0.5 * w, 0.0]]).expect("finite task")
}
