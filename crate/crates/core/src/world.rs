//! Target area raster, node placement, random-waypoint mobility, sensing
//! footprints and per-slot map files.

use std::f64::consts::PI;

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Boundary tolerance for the footprint half-plane test: centers exactly on
/// an edge count as inside.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub extent_x: f64,
    pub extent_y: f64,
    pub cell_side: f64,
    pub cols: usize,
    pub rows: usize,
}

impl GridMap {
    pub fn cell_count(&self) -> usize {
        self.cols * self.rows
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_side * self.cell_side
    }

    /// Row-major cell id → center coordinate.
    pub fn cell_center(&self, id: usize) -> [f64; 2] {
        let (r, c) = (id / self.cols, id % self.cols);
        [
            (c as f64 + 0.5) * self.cell_side,
            (r as f64 + 0.5) * self.cell_side,
        ]
    }

    pub fn cell_centers(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.cell_count()).map(|id| self.cell_center(id))
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..=self.extent_x).contains(&p[0]) && (0.0..=self.extent_y).contains(&p[1])
    }
}

pub fn build_grid(cfg: &ScenarioConfig) -> Result<GridMap> {
    let a = &cfg.area;
    let mut dims = [0usize; 2];
    for (slot, (name, extent)) in dims.iter_mut().zip([("extent_x_m", a.extent_x_m), ("extent_y_m", a.extent_y_m)]) {
        let ratio = extent / a.cell_side_m;
        if !(ratio.is_finite() && ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() <= 1e-9) {
            return Err(Error::Config(format!(
                "area.{name} = {extent} is not a positive multiple of area.cell_side_m = {}",
                a.cell_side_m
            )));
        }
        *slot = ratio.round() as usize;
    }
    Ok(GridMap {
        extent_x: a.extent_x_m,
        extent_y: a.extent_y_m,
        cell_side: a.cell_side_m,
        cols: dims[0],
        rows: dims[1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    SensingUav,
    CoopUav,
    GroundVehicle,
}

/// Regular-polygon sensing footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorShape {
    pub apothem: f64,
    pub sides: usize,
}

impl SensorShape {
    pub fn circumradius(&self) -> f64 {
        self.apothem / (PI / self.sides as f64).cos()
    }

    /// Whether `offset` (relative to the polygon center) lies inside. Edge
    /// normals sit at angles `2πj/n`, so one normal points along +x.
    pub fn contains_offset(&self, dx: f64, dy: f64) -> bool {
        (0..self.sides).all(|j| {
            let th = 2.0 * PI * j as f64 / self.sides as f64;
            dx * th.cos() + dy * th.sin() <= self.apothem + EDGE_EPS
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: usize,
    pub kind: NodeKind,
    pub position: [f64; 3],
    pub waypoint: [f64; 2],
    pub speed: f64,
    pub sensor: Option<SensorShape>,
}

impl NodeState {
    pub fn ground(&self) -> [f64; 2] {
        [self.position[0], self.position[1]]
    }
}

/// A map segment captured by one SU in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub owner_su: usize,
    pub size_bits: f64,
    pub coverage: Vec<usize>,
    pub slot: usize,
}

/// Ids of cells whose centers lie inside the SU's footprint polygon.
pub fn sensing_footprint(su: &NodeState, grid: &GridMap) -> Vec<usize> {
    let Some(shape) = su.sensor else {
        return Vec::new();
    };
    let [cx, cy] = su.ground();
    let r = shape.circumradius();
    let s = grid.cell_side;
    let col_range = |lo: f64, hi: f64, n: usize| {
        let a = ((lo / s) - 0.5).floor().max(0.0) as usize;
        let b = (((hi / s) - 0.5).ceil().max(0.0) as usize).min(n.saturating_sub(1));
        (a, b)
    };
    let (c0, c1) = col_range(cx - r, cx + r, grid.cols);
    let (r0, r1) = col_range(cy - r, cy + r, grid.rows);
    let mut cells = Vec::new();
    if grid.cols == 0 || grid.rows == 0 {
        return cells;
    }
    for row in r0..=r1 {
        for col in c0..=c1 {
            let id = row * grid.cols + col;
            let [x, y] = grid.cell_center(id);
            if shape.contains_offset(x - cx, y - cy) {
                cells.push(id);
            }
        }
    }
    cells
}

fn clamp_to_area(p: [f64; 2], grid: &GridMap) -> [f64; 2] {
    [p[0].clamp(0.0, grid.extent_x), p[1].clamp(0.0, grid.extent_y)]
}

fn random_point<R: Rng + ?Sized>(grid: &GridMap, rng: &mut R) -> [f64; 2] {
    [rng.random_range(0.0..=grid.extent_x), rng.random_range(0.0..=grid.extent_y)]
}

/// Advances every UAV toward its waypoint; a UAV that reaches its waypoint
/// this step draws a fresh one. The ground vehicle never moves.
pub fn step_mobility<R: Rng + ?Sized>(nodes: &mut [NodeState], grid: &GridMap, rng: &mut R, dt: f64) {
    debug_assert!(dt > 0.0);
    for node in nodes.iter_mut() {
        if node.kind == NodeKind::GroundVehicle {
            continue;
        }
        let [x, y] = node.ground();
        let dx = node.waypoint[0] - x;
        let dy = node.waypoint[1] - y;
        let dist = (dx * dx + dy * dy).sqrt();
        let reach = node.speed * dt;
        let next = if dist <= reach {
            let arrived = node.waypoint;
            node.waypoint = random_point(grid, rng);
            arrived
        } else {
            [x + dx / dist * reach, y + dy / dist * reach]
        };
        let [nx, ny] = clamp_to_area(next, grid);
        node.position = [nx, ny, node.position[2]];
    }
}

/// `Z = u · |L|` with `u` uniform over the per-cell content range.
pub fn sample_file_size<R: Rng + ?Sized>(content_bits_per_cell: [f64; 2], cells: usize, rng: &mut R) -> f64 {
    let [lo, hi] = content_bits_per_cell;
    let u = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    u * cells as f64
}

/// Node population of one scenario instance.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub grid: GridMap,
    pub sensing: Vec<NodeState>,
    pub coop: Vec<NodeState>,
    pub ground: NodeState,
}

impl World {
    /// Places SUs and CUs uniformly at flight altitude with uniform
    /// waypoints; the ground vehicle sits at the area center.
    pub fn generate<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Self> {
        let grid = build_grid(cfg)?;
        let n = &cfg.nodes;
        let shape = SensorShape {
            apothem: n.apothem_m,
            sides: n.polygon_sides,
        };
        let mut spawn = |id, kind, sensor| {
            let [x, y] = random_point(&grid, rng);
            NodeState {
                id,
                kind,
                position: [x, y, n.altitude_m],
                waypoint: random_point(&grid, rng),
                speed: n.speed_mps,
                sensor,
            }
        };
        let sensing: Vec<_> = (0..n.sensing_uavs).map(|i| spawn(i, NodeKind::SensingUav, Some(shape))).collect();
        let coop: Vec<_> = (0..n.coop_uavs).map(|i| spawn(i, NodeKind::CoopUav, None)).collect();
        let ground = NodeState {
            id: 0,
            kind: NodeKind::GroundVehicle,
            position: [grid.extent_x / 2.0, grid.extent_y / 2.0, 0.0],
            waypoint: [grid.extent_x / 2.0, grid.extent_y / 2.0],
            speed: 0.0,
            sensor: None,
        };
        Ok(Self { grid, sensing, coop, ground })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, dt: f64) {
        step_mobility(&mut self.sensing, &self.grid, rng, dt);
        step_mobility(&mut self.coop, &self.grid, rng, dt);
    }

    /// Samples this slot's map file for every SU.
    pub fn capture_files<R: Rng + ?Sized>(&self, content_bits_per_cell: [f64; 2], slot: usize, rng: &mut R) -> Vec<MapFile> {
        self.sensing
            .iter()
            .map(|su| {
                let coverage = sensing_footprint(su, &self.grid);
                MapFile {
                    owner_su: su.id,
                    size_bits: sample_file_size(content_bits_per_cell, coverage.len(), rng),
                    coverage,
                    slot,
                }
            })
            .collect()
    }
}
