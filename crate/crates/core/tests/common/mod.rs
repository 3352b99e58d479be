#![allow(dead_code)]

use modasm_core::{extract_graph, AngleVector, AssemblyGraph, LatticeConfig};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grows a random tree assembly one module at a time.
pub fn random_config<R: Rng>(n: usize, rng: &mut R) -> LatticeConfig {
    let mut c = LatticeConfig::single();
    while c.n() < n {
        let open = c.available_connectors();
        let pick = open[rng.random_range(0..open.len())];
        if let Ok(next) = c.attach(pick) {
            c = next;
        }
    }
    c
}

pub fn random_graph<R: Rng>(n: usize, rng: &mut R) -> AssemblyGraph {
    extract_graph(&random_config(n, rng)).unwrap()
}

/// Angles strictly inside the bounds, away from the edges by `margin`.
pub fn random_alpha<R: Rng>(graph: &AssemblyGraph, margin: f64, rng: &mut R) -> AngleVector {
    let hi = FRAC_PI_2 - margin;
    AngleVector((0..graph.angle_count()).map(|_| rng.random_range(-hi..hi)).collect())
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}
