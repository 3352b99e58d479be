//! Square-lattice encoding of planar assemblies and their exhaustive enumeration.
//!
//! Module centers sit at even `(row, col)` coordinates. The cell halfway between
//! two neighbouring centers is the interface shared by both modules, so each
//! center owns the four cells at distance one along the lattice axes. Rows grow
//! southwards and columns eastwards.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice coordinate `(row, col)`.
pub type Cell = (i32, i32);

pub const EMPTY: u8 = 0;
pub const AVAILABLE: u8 = 1;
pub const CONNECTED: u8 = 2;
pub const BLOCKED: u8 = 3;
pub const CENTER: u8 = 6;

/// Offsets from a center to its interface cells, indexed by connector - 1
/// (north, east, south, west).
pub const FACE_OFFSETS: [(i32, i32); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

/// Connector index (1..=4) of the face pointing along `offset`.
pub fn connector_for_offset(offset: (i32, i32)) -> Option<u8> {
    FACE_OFFSETS.iter().position(|&o| o == offset).map(|i| i as u8 + 1)
}

/// A planar assembly on the lattice.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ConfigRecord", into = "ConfigRecord")]
pub struct LatticeConfig {
    n: usize,
    cells: BTreeMap<Cell, u8>,
}

#[derive(Serialize, Deserialize)]
struct ConfigRecord {
    n: usize,
    cells: Vec<[i32; 3]>,
}

impl From<LatticeConfig> for ConfigRecord {
    fn from(c: LatticeConfig) -> Self {
        ConfigRecord { n: c.n, cells: c.cells.iter().map(|(&(r, col), &code)| [r, col, code as i32]).collect() }
    }
}

impl TryFrom<ConfigRecord> for LatticeConfig {
    type Error = Error;

    fn try_from(rec: ConfigRecord) -> Result<Self> {
        let mut cells = BTreeMap::new();
        for [r, c, code] in rec.cells {
            let code = u8::try_from(code).map_err(|_| Error::MalformedConfig(format!("bad cell code {code}")))?;
            if code == EMPTY {
                continue;
            }
            if cells.insert((r, c), code).is_some() {
                return Err(Error::MalformedConfig(format!("duplicate cell ({r}, {c})")));
            }
        }
        let config = LatticeConfig { n: rec.n, cells };
        config.validate()?;
        Ok(config)
    }
}

impl fmt::Debug for LatticeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LatticeConfig(n = {})", self.n)?;
        let (r0, r1, c0, c1) = self.cell_bounds();
        for r in r0..=r1 {
            for c in c0..=c1 {
                match self.code(r, c) {
                    EMPTY => write!(f, ".")?,
                    code => write!(f, "{code}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl LatticeConfig {
    /// A single module at the origin with four available connectors.
    pub fn single() -> Self {
        let mut cells = BTreeMap::new();
        cells.insert((0, 0), CENTER);
        for (dr, dc) in FACE_OFFSETS {
            cells.insert((dr, dc), AVAILABLE);
        }
        LatticeConfig { n: 1, cells }
    }

    /// Builds a config from center positions and the list of connected pairs
    /// (indices into `centers`). Every other adjacency is blocked.
    pub fn from_tree(centers: &[Cell], connections: &[(usize, usize)]) -> Result<Self> {
        let mut cells = BTreeMap::new();
        for &(r, c) in centers {
            if r.rem_euclid(2) != 0 || c.rem_euclid(2) != 0 {
                return Err(Error::MalformedConfig(format!("center ({r}, {c}) is not on the even sublattice")));
            }
            if cells.insert((r, c), CENTER).is_some() {
                return Err(Error::MalformedConfig(format!("duplicate center ({r}, {c})")));
            }
        }
        for &(r, c) in centers {
            for (dr, dc) in FACE_OFFSETS {
                let beyond = (r + 2 * dr, c + 2 * dc);
                let code = if cells.get(&beyond) == Some(&CENTER) { BLOCKED } else { AVAILABLE };
                cells.insert((r + dr, c + dc), code);
            }
        }
        for &(a, b) in connections {
            let (pa, pb) = (centers[a], centers[b]);
            let diff = (pb.0 - pa.0, pb.1 - pa.1);
            if !matches!(diff, (2, 0) | (-2, 0) | (0, 2) | (0, -2)) {
                return Err(Error::MalformedConfig(format!("centers {pa:?} and {pb:?} are not lattice neighbours")));
            }
            cells.insert((pa.0 + diff.0 / 2, pa.1 + diff.1 / 2), CONNECTED);
        }
        let config = LatticeConfig { n: centers.len(), cells };
        config.validate()?;
        Ok(config)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn code(&self, row: i32, col: i32) -> u8 {
        self.cells.get(&(row, col)).copied().unwrap_or(EMPTY)
    }

    /// Non-empty cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Cell, u8)> + '_ {
        self.cells.iter().map(|(&k, &v)| (k, v))
    }

    /// Module centers in row-major order.
    pub fn centers(&self) -> Vec<Cell> {
        self.cells.iter().filter(|(_, &v)| v == CENTER).map(|(&k, _)| k).collect()
    }

    /// Interface cells currently coded as available connectors.
    pub fn available_connectors(&self) -> Vec<Cell> {
        self.cells.iter().filter(|(_, &v)| v == AVAILABLE).map(|(&k, _)| k).collect()
    }

    /// Connected interface cells.
    pub fn connections(&self) -> Vec<Cell> {
        self.cells.iter().filter(|(_, &v)| v == CONNECTED).map(|(&k, _)| k).collect()
    }

    fn cell_bounds(&self) -> (i32, i32, i32, i32) {
        let mut b = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for &(r, c) in self.cells.keys() {
            b.0 = b.0.min(r);
            b.1 = b.1.max(r);
            b.2 = b.2.min(c);
            b.3 = b.3.max(c);
        }
        b
    }

    /// The two centers an interface cell lies between.
    fn interface_ends(cell: Cell) -> [Cell; 2] {
        let (r, c) = cell;
        if r.rem_euclid(2) != 0 {
            [(r - 1, c), (r + 1, c)]
        } else {
            [(r, c - 1), (r, c + 1)]
        }
    }

    /// Attaches a new module across the available connector at `connector`.
    ///
    /// The new module is connected through that interface; any other of its
    /// faces touching an existing module is blocked. The result is translated
    /// so that the smallest center row and column are zero.
    pub fn attach(&self, connector: Cell) -> Result<LatticeConfig> {
        let code = self.code(connector.0, connector.1);
        if code != AVAILABLE {
            return Err(Error::NotAvailable(connector.0, connector.1));
        }
        let [a, b] = Self::interface_ends(connector);
        let target = match (self.code(a.0, a.1), self.code(b.0, b.1)) {
            (CENTER, CENTER) => return Err(Error::OccupiedCell(b.0, b.1)),
            (CENTER, _) => b,
            (_, CENTER) => a,
            _ => return Err(Error::MalformedConfig(format!("connector {connector:?} has no owning module"))),
        };
        let mut cells = self.cells.clone();
        cells.insert(target, CENTER);
        cells.insert(connector, CONNECTED);
        for (dr, dc) in FACE_OFFSETS {
            let face = (target.0 + dr, target.1 + dc);
            if face == connector {
                continue;
            }
            let beyond = (target.0 + 2 * dr, target.1 + 2 * dc);
            let code = if cells.get(&beyond) == Some(&CENTER) { BLOCKED } else { AVAILABLE };
            cells.insert(face, code);
        }
        Ok(LatticeConfig { n: self.n + 1, cells }.normalized())
    }

    /// Translates so the minimal center row and column are both zero.
    pub fn normalized(&self) -> LatticeConfig {
        let (mut r0, mut c0) = (i32::MAX, i32::MAX);
        for (&(r, c), &v) in &self.cells {
            if v == CENTER {
                r0 = r0.min(r);
                c0 = c0.min(c);
            }
        }
        if r0 == 0 && c0 == 0 {
            return self.clone();
        }
        LatticeConfig { n: self.n, cells: self.cells.iter().map(|(&(r, c), &v)| ((r - r0, c - c0), v)).collect() }
    }

    /// Quarter turn counter-clockwise about the lattice normal, normalized.
    pub fn rotate90(&self) -> LatticeConfig {
        LatticeConfig { n: self.n, cells: self.cells.iter().map(|(&(r, c), &v)| ((-c, r), v)).collect() }.normalized()
    }

    /// Row-major serialization of the normalized grid, prefixed by width and
    /// height of the bounding box.
    fn serialize_grid(&self) -> Vec<u8> {
        let (r0, r1, c0, c1) = self.cell_bounds();
        let h = (r1 - r0 + 1) as usize;
        let w = (c1 - c0 + 1) as usize;
        let mut grid = vec![EMPTY; w * h];
        for (&(r, c), &v) in &self.cells {
            grid[(r - r0) as usize * w + (c - c0) as usize] = v;
        }
        let mut out = Vec::with_capacity(4 + w * h);
        out.extend_from_slice(&(w as u16).to_be_bytes());
        out.extend_from_slice(&(h as u16).to_be_bytes());
        out.extend_from_slice(&grid);
        out
    }

    /// Checks every structural invariant of the encoding.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedConfig(msg));
        let centers = self.centers();
        if centers.len() != self.n {
            return bad(format!("n = {} but {} centers", self.n, centers.len()));
        }
        if self.n == 0 {
            return bad("empty configuration".into());
        }
        for (&(r, c), &v) in &self.cells {
            let (er, ec) = (r.rem_euclid(2) == 0, c.rem_euclid(2) == 0);
            match v {
                CENTER if !(er && ec) => return bad(format!("center ({r}, {c}) off the even sublattice")),
                CENTER => {
                    for (dr, dc) in FACE_OFFSETS {
                        if !matches!(self.code(r + dr, c + dc), AVAILABLE | CONNECTED | BLOCKED) {
                            return bad(format!("center ({r}, {c}) missing an interface"));
                        }
                    }
                }
                AVAILABLE | CONNECTED | BLOCKED => {
                    if er == ec {
                        return bad(format!("interface ({r}, {c}) at a non-interface position"));
                    }
                    let [a, b] = Self::interface_ends((r, c));
                    let occupied = [a, b].iter().filter(|p| self.code(p.0, p.1) == CENTER).count();
                    match (occupied, v) {
                        (0, _) => return bad(format!("orphan interface ({r}, {c})")),
                        (1, AVAILABLE) | (2, CONNECTED) | (2, BLOCKED) => {}
                        (1, _) => return bad(format!("interface ({r}, {c}) coded {v} faces no module")),
                        _ => return bad(format!("dangling connector ({r}, {c}) between modules")),
                    }
                }
                _ => return bad(format!("unknown code {v} at ({r}, {c})")),
            }
        }
        let edges = self.connections();
        if edges.len() != self.n - 1 {
            return bad(format!("{} connections for {} modules; expected a tree", edges.len(), self.n));
        }
        let index: HashMap<Cell, usize> = centers.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut adj = vec![Vec::new(); self.n];
        for e in edges {
            let [a, b] = Self::interface_ends(e);
            let (ia, ib) = (index[&a], index[&b]);
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        if count != self.n {
            return bad("connections do not form a spanning tree".into());
        }
        Ok(())
    }
}

/// Rotation-invariant identity of a configuration.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CanonicalKey(pub Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Canonical key together with the rotation of `config` that attains it.
pub fn canonical_form(config: &LatticeConfig) -> (CanonicalKey, LatticeConfig) {
    let mut current = config.normalized();
    let mut best_key = current.serialize_grid();
    let mut best = current.clone();
    for _ in 0..3 {
        current = current.rotate90();
        let key = current.serialize_grid();
        if key < best_key {
            best_key = key;
            best = current.clone();
        }
    }
    (CanonicalKey(best_key), best)
}

/// Lexicographically smallest serialization over the four quarter turns.
pub fn canonicalize(config: &LatticeConfig) -> CanonicalKey {
    canonical_form(config).0
}

/// Caps for exhaustive enumeration.
#[derive(Clone, Copy, Debug)]
pub struct EnumerationLimits {
    /// Largest number of configurations allowed at any level.
    pub max_configs: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits { max_configs: 2_000_000 }
    }
}

/// Grows every configuration by one module at each available connector and
/// keeps one canonical representative per isomorphism class, sorted by key.
pub fn expand_level(configs: &[LatticeConfig]) -> Vec<(CanonicalKey, LatticeConfig)> {
    let merged = configs
        .par_iter()
        .fold(HashMap::new, |mut seen: HashMap<CanonicalKey, LatticeConfig>, parent| {
            for connector in parent.available_connectors() {
                let child = parent.attach(connector).expect("available connector always admits a module");
                let (key, canon) = canonical_form(&child);
                seen.entry(key).or_insert(canon);
            }
            seen
        })
        .reduce(HashMap::new, |mut a, b| {
            if a.len() < b.len() {
                return merge(b, a);
            }
            for (k, v) in b {
                a.entry(k).or_insert(v);
            }
            a
        });
    let mut out: Vec<_> = merged.into_iter().collect();
    out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    out
}

fn merge(mut a: HashMap<CanonicalKey, LatticeConfig>, b: HashMap<CanonicalKey, LatticeConfig>) -> HashMap<CanonicalKey, LatticeConfig> {
    for (k, v) in b {
        a.entry(k).or_insert(v);
    }
    a
}

/// All non-isomorphic assemblies of `n` modules, sorted by canonical key.
pub fn enumerate_exhaustive(n: usize, limits: EnumerationLimits) -> Result<Vec<LatticeConfig>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut level = vec![canonical_form(&LatticeConfig::single()).1];
    for i in 2..=n {
        let next = expand_level(&level);
        if next.len() > limits.max_configs {
            return Err(Error::ResourceLimit(format!("{} configurations at n = {i} exceed the cap of {}", next.len(), limits.max_configs)));
        }
        level = next.into_iter().map(|(_, c)| c).collect();
    }
    Ok(level)
}

/// Root-mean-square distance of module centers from their centroid, in
/// lattice units.
pub fn radius_of_gyration(config: &LatticeConfig) -> f64 {
    let centers = config.centers();
    let n = centers.len() as f64;
    let (sr, sc) = centers.iter().fold((0.0, 0.0), |acc, &(r, c)| (acc.0 + r as f64, acc.1 + c as f64));
    let (mr, mc) = (sr / n, sc / n);
    let ss: f64 = centers.iter().map(|&(r, c)| (r as f64 - mr).powi(2) + (c as f64 - mc).powi(2)).sum();
    (ss / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, vertical: bool) -> LatticeConfig {
        let centers: Vec<Cell> = (0..n as i32).map(|i| if vertical { (2 * i, 0) } else { (0, 2 * i) }).collect();
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        LatticeConfig::from_tree(&centers, &edges).unwrap()
    }

    #[test]
    fn attach_north_makes_vertical_domino() {
        let one = LatticeConfig::single();
        let two = one.attach((-1, 0)).unwrap();
        assert_eq!(two.n(), 2);
        assert_eq!(two.centers(), vec![(0, 0), (2, 0)]);
        assert_eq!(two.connections(), vec![(1, 0)]);
        assert_eq!(two.available_connectors().len(), 6);
        two.validate().unwrap();
    }

    #[test]
    fn closing_the_square_blocks_the_second_adjacency() {
        // L of three: (0,0)-(0,2) and (0,0)-(2,0); the free corner is (2,2).
        let l = LatticeConfig::from_tree(&[(0, 0), (0, 2), (2, 0)], &[(0, 1), (0, 2)]).unwrap();
        let square = l.attach((1, 2)).unwrap();
        assert_eq!(square.n(), 4);
        assert_eq!(square.code(1, 2), CONNECTED);
        assert_eq!(square.code(2, 1), BLOCKED);
        assert_eq!(square.connections().len(), 3);
        square.validate().unwrap();
    }

    #[test]
    fn attach_rejects_non_connector_and_occupied() {
        let two = LatticeConfig::single().attach((1, 0)).unwrap();
        assert!(matches!(two.attach((0, 0)), Err(Error::NotAvailable(0, 0))));
        assert!(matches!(two.attach((1, 0)), Err(Error::NotAvailable(1, 0))));

        // A hand-built grid whose available connector points at a module.
        let mut bogus = two.clone();
        bogus.cells.insert((1, 0), AVAILABLE);
        assert!(matches!(bogus.attach((1, 0)), Err(Error::OccupiedCell(..))));
    }

    #[test]
    fn straight_chains_share_a_key() {
        assert_eq!(canonicalize(&chain(3, true)), canonicalize(&chain(3, false)));
    }

    #[test]
    fn chain_and_corner_differ() {
        let corner = LatticeConfig::from_tree(&[(0, 0), (0, 2), (2, 0)], &[(0, 1), (0, 2)]).unwrap();
        assert_ne!(canonicalize(&chain(3, false)), canonicalize(&corner));
    }

    #[test]
    fn same_shape_different_topology_differs() {
        // P pentomino: a 2x2 square with a tail; which square edge is left
        // unconnected changes the topology but not the occupied cells.
        let centers = [(0, 0), (0, 2), (2, 0), (2, 2), (4, 0)];
        let open_top = LatticeConfig::from_tree(&centers, &[(0, 2), (1, 3), (2, 3), (2, 4)]).unwrap();
        let open_bottom = LatticeConfig::from_tree(&centers, &[(0, 1), (0, 2), (1, 3), (2, 4)]).unwrap();
        assert_eq!(open_top.centers(), open_bottom.centers());
        assert_ne!(canonicalize(&open_top), canonicalize(&open_bottom));
    }

    #[test]
    fn square_spanning_trees_are_rotations() {
        let centers = [(0, 0), (0, 2), (2, 0), (2, 2)];
        let a = LatticeConfig::from_tree(&centers, &[(0, 1), (0, 2), (1, 3)]).unwrap();
        let b = LatticeConfig::from_tree(&centers, &[(0, 2), (2, 3), (3, 1)]).unwrap();
        assert_eq!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn small_counts() {
        let counts: Vec<usize> = (1..=6).map(|n| enumerate_exhaustive(n, EnumerationLimits::default()).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 7, 24, 97]);
    }

    #[test]
    fn canonical_domino_is_vertical() {
        let two = enumerate_exhaustive(2, EnumerationLimits::default()).unwrap();
        assert_eq!(two[0].centers(), vec![(0, 0), (2, 0)]);
    }

    #[test]
    fn resource_limit_is_reported() {
        let err = enumerate_exhaustive(5, EnumerationLimits { max_configs: 10 }).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }

    #[test]
    fn gyration_values() {
        assert_eq!(radius_of_gyration(&LatticeConfig::single()), 0.0);
        assert!((radius_of_gyration(&chain(2, true)) - 1.0).abs() < 1e-15);
        let square = LatticeConfig::from_tree(&[(0, 0), (0, 2), (2, 0), (2, 2)], &[(0, 1), (0, 2), (1, 3)]).unwrap();
        assert!((radius_of_gyration(&square) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_record_round_trip_and_validation() {
        let c = chain(3, false);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.starts_with("{\"n\":3,\"cells\":[["));
        let back: LatticeConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let broken = s.replace("[0,1,2]", "[0,1,3]");
        assert!(serde_json::from_str::<LatticeConfig>(&broken).is_err());
    }
}
