//! Connection trees with connector labels and hinge angles.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{connector_for_offset, Cell, LatticeConfig, CONNECTED, FACE_OFFSETS};

/// One rigid connection, oriented from the BFS parent to the child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphEdge {
    pub parent: usize,
    pub child: usize,
    /// Connector used on the parent (1 north, 2 east, 3 south, 4 west).
    pub cp: u8,
    /// Connector used on the child.
    pub cc: u8,
}

impl GraphEdge {
    /// Whether the hinge on this edge turns about the body x-axis.
    pub fn hinges_about_x(&self) -> bool {
        matches!(self.cp, 1 | 3) || matches!(self.cc, 1 | 3)
    }
}

/// Edge-labelled tree over modules `0..n`, numbered in BFS order from the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssemblyGraph {
    pub n: usize,
    pub edges: Vec<GraphEdge>,
}

impl AssemblyGraph {
    pub fn single() -> Self {
        AssemblyGraph { n: 1, edges: Vec::new() }
    }

    /// Number of hinge angles including the two root angles.
    pub fn angle_count(&self) -> usize {
        self.n + 1
    }

    /// Parent of every vertex (`None` for the root) and the edge reaching it.
    pub fn parent_edges(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n];
        for (e, edge) in self.edges.iter().enumerate() {
            out[edge.child] = Some(e);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedConfig(m));
        if self.n == 0 {
            return bad("graph has no modules".into());
        }
        if self.edges.len() != self.n - 1 {
            return bad(format!("{} edges for {} modules", self.edges.len(), self.n));
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        for (i, e) in self.edges.iter().enumerate() {
            if !(1..=4).contains(&e.cp) || !(1..=4).contains(&e.cc) {
                return bad(format!("edge {i} has connector outside 1..=4"));
            }
            if e.child != i + 1 || e.parent >= e.child || !seen[e.parent] {
                return bad(format!("edge {i} does not follow BFS numbering"));
            }
            seen[e.child] = true;
        }
        Ok(())
    }
}

/// Builds the connection tree of a lattice assembly.
///
/// The root is the first module in row-major order (topmost, then leftmost);
/// neighbours are visited in connector order north, east, south, west.
pub fn extract_graph(config: &LatticeConfig) -> Result<AssemblyGraph> {
    config.validate()?;
    let centers = config.centers();
    let index: HashMap<Cell, usize> = centers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut order = vec![usize::MAX; centers.len()];
    let mut edges = Vec::with_capacity(centers.len().saturating_sub(1));
    let mut queue = VecDeque::from([0usize]);
    order[0] = 0;
    let mut next_id = 1;
    while let Some(v) = queue.pop_front() {
        let (r, c) = centers[v];
        for (dr, dc) in FACE_OFFSETS {
            if config.code(r + dr, c + dc) != CONNECTED {
                continue;
            }
            let w = index[&(r + 2 * dr, c + 2 * dc)];
            if order[w] != usize::MAX {
                continue;
            }
            order[w] = next_id;
            next_id += 1;
            edges.push(GraphEdge {
                parent: order[v],
                child: order[w],
                cp: connector_for_offset((dr, dc)).unwrap(),
                cc: connector_for_offset((-dr, -dc)).unwrap(),
            });
            queue.push_back(w);
        }
    }
    let graph = AssemblyGraph { n: centers.len(), edges };
    graph.validate()?;
    Ok(graph)
}

/// Lattice center of every module, indexed by graph vertex id.
pub fn vertex_cells(config: &LatticeConfig) -> Result<Vec<Cell>> {
    let centers = config.centers();
    let index: HashMap<Cell, usize> = centers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut out = vec![centers[0]];
    let mut queue = VecDeque::from([centers[0]]);
    let mut seen = vec![false; centers.len()];
    seen[0] = true;
    while let Some((r, c)) = queue.pop_front() {
        for (dr, dc) in FACE_OFFSETS {
            if config.code(r + dr, c + dc) != CONNECTED {
                continue;
            }
            let w = (r + 2 * dr, c + 2 * dc);
            let wi = index[&w];
            if !seen[wi] {
                seen[wi] = true;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    if out.len() != centers.len() {
        return Err(Error::MalformedConfig("connections do not span the modules".into()));
    }
    Ok(out)
}

/// Root orientation angles followed by one hinge angle per edge, in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleVector(pub Vec<f64>);

impl AngleVector {
    /// The planar assembly: every angle zero.
    pub fn planar(graph: &AssemblyGraph) -> Self {
        AngleVector(vec![0.0; graph.angle_count()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks length against `graph` and every entry against ±π/2.
    pub fn check(&self, graph: &AssemblyGraph) -> Result<()> {
        if self.0.len() != graph.angle_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} angles for {} modules (expected {})",
                self.0.len(),
                graph.n,
                graph.angle_count()
            )));
        }
        for &a in &self.0 {
            check_angle(a)?;
        }
        Ok(())
    }
}

fn check_angle(a: f64) -> Result<()> {
    if !(a.abs() <= FRAC_PI_2 + 1e-12) {
        return Err(Error::OutOfRange { what: "hinge angle", value: a, lo: -FRAC_PI_2, hi: FRAC_PI_2 });
    }
    Ok(())
}

/// Relative angle between the two module frames of a connection, `π + α`.
pub fn edge_angle_to_theta(alpha: f64) -> Result<f64> {
    check_angle(alpha)?;
    Ok(PI + alpha)
}

/// Angle set on each of the two connectors of an edge (half of `θ`).
pub fn connector_angle(alpha: f64) -> Result<f64> {
    Ok(edge_angle_to_theta(alpha)? / 2.0)
}

/// Graph plus optional angles, as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n: usize,
    pub edges: Vec<GraphEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

impl GraphDocument {
    pub fn new(graph: &AssemblyGraph, alpha: Option<&AngleVector>) -> Self {
        GraphDocument { n: graph.n, edges: graph.edges.clone(), alpha: alpha.map(|a| a.0.clone()) }
    }

    pub fn graph(&self) -> Result<AssemblyGraph> {
        let g = AssemblyGraph { n: self.n, edges: self.edges.clone() };
        g.validate()?;
        Ok(g)
    }

    pub fn angles(&self) -> Option<AngleVector> {
        self.alpha.clone().map(AngleVector)
    }
}
