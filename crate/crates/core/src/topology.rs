//! Sensor layouts and range-derived adjacency.
//!
//! Two sensors share a link iff their distance is at most the communication
//! range. The comparison allows a relative slack of [`RANGE_TOLERANCE`] so
//! that spokes constructed at exactly the range (the star) survive rounding
//! in `cos`/`sin`.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_COMM_RANGE: f64 = 400.0;
pub const RANGE_TOLERANCE: f64 = 1e-9;
pub const MAX_LAYOUT_ATTEMPTS: usize = 10_000;

pub type Position = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SensorId(pub usize);

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sensor {}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Line,
    Ring,
    Star,
    Grid,
    Random,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 5] = [
        TopologyKind::Line,
        TopologyKind::Ring,
        TopologyKind::Star,
        TopologyKind::Grid,
        TopologyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Line => "line",
            TopologyKind::Ring => "ring",
            TopologyKind::Star => "star",
            TopologyKind::Grid => "grid",
            TopologyKind::Random => "random",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned deployment rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Default for Area {
    fn default() -> Self {
        Self {
            x: [100.0, 1000.0],
            y: [100.0, 1000.0],
        }
    }
}

pub fn distance(a: Position, b: Position) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn within_range(a: Position, b: Position, comm_range: f64) -> bool {
    distance(a, b) <= comm_range * (1.0 + RANGE_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    kind: TopologyKind,
    comm_range: f64,
    positions: Vec<Position>,
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    /// Derives adjacency from positions. Neighbour lists are sorted.
    pub fn from_positions(kind: TopologyKind, positions: Vec<Position>, comm_range: f64) -> Self {
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                if within_range(positions[a], positions[b], comm_range) {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
        Self {
            kind,
            comm_range,
            positions,
            adjacency,
        }
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn neighbors(&self, sensor: usize) -> &[usize] {
        &self.adjacency[sensor]
    }

    pub fn degree(&self, sensor: usize) -> usize {
        self.adjacency[sensor].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Undirected edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    pub fn to_json(&self) -> TopologyJson {
        TopologyJson {
            kind: self.kind,
            comm_range: self.comm_range,
            positions: self.positions.clone(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }

    /// Rebuilds a topology from its export. The stored edge list must agree
    /// with the range rule.
    pub fn from_json(json: &TopologyJson) -> Result<Self> {
        if !(json.comm_range > 0.0) {
            return Err(Error::InvalidParameter("comm_range must be positive".into()));
        }
        let t = Self::from_positions(json.kind, json.positions.clone(), json.comm_range);
        let mut edges: Vec<(usize, usize)> = json.edges.iter().map(|&[a, b]| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        edges.dedup();
        if edges != t.edges() {
            return Err(Error::InvalidParameter(
                "edge list disagrees with positions and communication range".into(),
            ));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyJson {
    pub kind: TopologyKind,
    pub comm_range: f64,
    pub positions: Vec<Position>,
    pub edges: Vec<[usize; 2]>,
}

/// Breadth-first reachability of every sensor from sensor 0.
pub fn is_connected(t: &Topology) -> bool {
    if t.len() <= 1 {
        return true;
    }
    let mut seen = vec![false; t.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(s) = queue.pop_front() {
        for &n in t.neighbors(s) {
            if !seen[n] {
                seen[n] = true;
                reached += 1;
                queue.push_back(n);
            }
        }
    }
    reached == t.len()
}

/// Five sensors on the diagonal, 200 apart on each axis.
pub fn build_line() -> Topology {
    let positions = (0..5).map(|k| [100.0 + 200.0 * k as f64; 2]).collect();
    Topology::from_positions(TopologyKind::Line, positions, DEFAULT_COMM_RANGE)
}

fn grid_position(i: usize, j: usize) -> Position {
    [100.0 + 300.0 * i as f64, 100.0 + 300.0 * j as f64]
}

/// 4x4 lattice with spacing 300; sensor `4i + j` sits at `(100+300i, 100+300j)`.
pub fn build_grid() -> Topology {
    let positions = (0..4).flat_map(|i| (0..4).map(move |j| grid_position(i, j))).collect();
    Topology::from_positions(TopologyKind::Grid, positions, DEFAULT_COMM_RANGE)
}

/// The 12 perimeter sensors of the 4x4 grid, listed in cycle order.
pub fn build_ring() -> Topology {
    let mut cells = Vec::with_capacity(12);
    cells.extend((0..4).map(|j| (0, j)));
    cells.extend((1..4).map(|i| (i, 3)));
    cells.extend((0..3).rev().map(|j| (3, j)));
    cells.extend((1..3).rev().map(|i| (i, 0)));
    let positions = cells.into_iter().map(|(i, j)| grid_position(i, j)).collect();
    Topology::from_positions(TopologyKind::Ring, positions, DEFAULT_COMM_RANGE)
}

/// Centre at (500, 500) plus a regular pentagon of radius 400 at 72k degrees.
pub fn build_star() -> Topology {
    let mut positions = vec![[500.0, 500.0]];
    for k in 0..5 {
        let theta = (72.0 * k as f64) * PI / 180.0;
        positions.push([500.0 + 400.0 * theta.cos(), 500.0 + 400.0 * theta.sin()]);
    }
    Topology::from_positions(TopologyKind::Star, positions, DEFAULT_COMM_RANGE)
}

/// Uniform layout over `area`, redrawn from scratch until connected.
pub fn build_random<R: Rng + ?Sized>(n: usize, area: Area, comm_range: f64, rng: &mut R) -> Result<Topology> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "a random topology needs at least 2 sensors".into(),
        ));
    }
    if !(comm_range > 0.0) {
        return Err(Error::InvalidParameter("comm_range must be positive".into()));
    }
    if !(area.x[0] <= area.x[1] && area.y[0] <= area.y[1]) {
        return Err(Error::InvalidParameter("area bounds are inverted".into()));
    }
    let coord = |rng: &mut R, [lo, hi]: [f64; 2]| if lo == hi { lo } else { rng.random_range(lo..hi) };
    for _ in 0..MAX_LAYOUT_ATTEMPTS {
        let positions = (0..n).map(|_| [coord(rng, area.x), coord(rng, area.y)]).collect();
        let t = Topology::from_positions(TopologyKind::Random, positions, comm_range);
        if is_connected(&t) {
            return Ok(t);
        }
    }
    Err(Error::LayoutInfeasible {
        attempts: MAX_LAYOUT_ATTEMPTS,
    })
}
