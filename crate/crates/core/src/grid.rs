//! Square and hexagonal host grids.
//!
//! Cells are addressed by [`CellId`], the row-major index `row * cols + col`
//! in the full grid. Restricting a grid keeps ids stable, so embeddings
//! computed on a restricted grid still render on the full one.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("restriction keeps no cells")]
    EmptyRestriction,
    #[error("cell {0} is not part of the grid")]
    UnknownCell(CellId),
    #[error("grid dimensions must be positive")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Square,
    Hex,
}

impl GridKind {
    /// Axial/lattice neighbor offsets `(dcol, drow)`, in counterclockwise
    /// order matching the polygon sides returned by [`GridKind::corners`].
    pub fn neighbor_offsets(self) -> &'static [(i32, i32)] {
        match self {
            GridKind::Square => &[(1, 0), (0, 1), (-1, 0), (0, -1)],
            GridKind::Hex => &[(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)],
        }
    }

    pub fn cell_area(self) -> f64 {
        match self {
            GridKind::Square => 1.0,
            GridKind::Hex => 1.5 * 3f64.sqrt(),
        }
    }

    pub fn cell_perimeter(self) -> f64 {
        match self {
            GridKind::Square => 4.0,
            GridKind::Hex => 6.0,
        }
    }

    /// Distance from a cell center to the middle of a side.
    pub fn apothem(self) -> f64 {
        match self {
            GridKind::Square => 0.5,
            GridKind::Hex => 3f64.sqrt() / 2.0,
        }
    }

    /// Polygon corners of a unit-edge cell around the origin.
    ///
    /// Side `k` runs from corner `k` to corner `k + 1` and faces the
    /// neighbor at `neighbor_offsets()[k]`.
    pub fn corners(self) -> Vec<Point2> {
        match self {
            GridKind::Square => vec![
                Point2::new(0.5, -0.5),
                Point2::new(0.5, 0.5),
                Point2::new(-0.5, 0.5),
                Point2::new(-0.5, -0.5),
            ],
            GridKind::Hex => (0..6)
                .map(|k| {
                    let a = (-30.0 + 60.0 * k as f64).to_radians();
                    Point2::new(a.cos(), a.sin())
                })
                .collect(),
        }
    }
}

impl std::str::FromStr for GridKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "square" | "sq" => Ok(GridKind::Square),
            "hex" | "hexagon" | "hexagonal" => Ok(GridKind::Hex),
            other => Err(format!("unknown grid kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist2(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point2) -> f64 {
        self.dist2(other).sqrt()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub edge_length: f64,
    pub cell_area: f64,
    pub cell_perimeter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: CellId,
    pub row: u32,
    pub col: u32,
    pub center: Point2,
}

/// Planar host graph of grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDump", into = "GridDump")]
pub struct HostGrid {
    kind: GridKind,
    rows: u32,
    cols: u32,
    cells: Vec<Cell>,
    adjacency: Vec<Vec<usize>>,
    index: HashMap<CellId, usize>,
}

/// JSON shape used for debugging dumps.
#[derive(Serialize, Deserialize)]
struct GridDump {
    kind: GridKind,
    rows: u32,
    cols: u32,
    cells: Vec<CellDump>,
}

#[derive(Serialize, Deserialize)]
struct CellDump {
    id: CellId,
    center: Point2,
    neighbors: Vec<CellId>,
}

impl From<HostGrid> for GridDump {
    fn from(g: HostGrid) -> Self {
        let cells = g
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| CellDump {
                id: c.id,
                center: c.center,
                neighbors: g.adjacency[i].iter().map(|&j| g.cells[j].id).collect(),
            })
            .collect();
        GridDump { kind: g.kind, rows: g.rows, cols: g.cols, cells }
    }
}

impl TryFrom<GridDump> for HostGrid {
    type Error = GridError;
    fn try_from(d: GridDump) -> Result<Self, GridError> {
        let full = build_grid(d.kind, d.rows, d.cols)?;
        let keep: BTreeSet<CellId> = d.cells.iter().map(|c| c.id).collect();
        full.restrict(&keep)
    }
}

/// Rows and columns for `n` elements: one spare row and column beyond the
/// smallest square that fits.
pub fn grid_size_for(n_elements: usize) -> (u32, u32) {
    let n = n_elements.max(1);
    let mut side = (n as f64).sqrt() as usize;
    while side * side < n {
        side += 1;
    }
    while side > 1 && (side - 1) * (side - 1) >= n {
        side -= 1;
    }
    let side = side as u32 + 1;
    (side, side)
}

pub fn build_grid(kind: GridKind, rows: u32, cols: u32) -> Result<HostGrid, GridError> {
    if rows == 0 || cols == 0 {
        return Err(GridError::EmptyGrid);
    }
    let sqrt3 = 3f64.sqrt();
    let mut cells = Vec::with_capacity((rows * cols) as usize);
    for row in 0..rows {
        for col in 0..cols {
            let center = match kind {
                GridKind::Square => Point2::new(col as f64, row as f64),
                GridKind::Hex => Point2::new(sqrt3 * (col as f64 + row as f64 / 2.0), 1.5 * row as f64),
            };
            cells.push(Cell { id: CellId(row * cols + col), row, col, center });
        }
    }
    let adjacency = cells
        .iter()
        .map(|c| {
            kind.neighbor_offsets()
                .iter()
                .filter_map(|&(dc, dr)| {
                    let col = c.col as i64 + dc as i64;
                    let row = c.row as i64 + dr as i64;
                    (col >= 0 && row >= 0 && col < cols as i64 && row < rows as i64)
                        .then(|| (row as u32 * cols + col as u32) as usize)
                })
                .collect()
        })
        .collect();
    let index = cells.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
    Ok(HostGrid { kind, rows, cols, cells, adjacency, index })
}

impl HostGrid {
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.iter().map(|c| c.id)
    }

    pub fn metrics(&self) -> CellMetrics {
        CellMetrics {
            edge_length: 1.0,
            cell_area: self.kind.cell_area(),
            cell_perimeter: self.kind.cell_perimeter(),
        }
    }

    /// Position of `id` in [`HostGrid::cells`].
    pub fn position(&self, id: CellId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn contains(&self, id: CellId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn center(&self, id: CellId) -> Option<Point2> {
        self.position(id).map(|i| self.cells[i].center)
    }

    pub fn neighbors(&self, id: CellId) -> impl Iterator<Item = CellId> + '_ {
        let adj = self.position(id).map(|i| self.adjacency[i].as_slice()).unwrap_or(&[]);
        adj.iter().map(|&j| self.cells[j].id)
    }

    /// Neighbor indices of the cell at position `i`.
    pub fn adjacent(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn are_adjacent(&self, a: CellId, b: CellId) -> bool {
        self.neighbors(a).any(|n| n == b)
    }

    /// Undirected edges as position pairs `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Full-grid cell id at `(row, col)` regardless of restriction.
    pub fn id_at(&self, row: i64, col: i64) -> Option<CellId> {
        (row >= 0 && col >= 0 && row < self.rows as i64 && col < self.cols as i64)
            .then(|| CellId(row as u32 * self.cols + col as u32))
    }

    /// Induced subgraph on `keep`; ids, centers and metrics are unchanged.
    pub fn restrict(&self, keep: &BTreeSet<CellId>) -> Result<HostGrid, GridError> {
        if keep.is_empty() {
            return Err(GridError::EmptyRestriction);
        }
        if let Some(&bad) = keep.iter().find(|id| !self.contains(**id)) {
            return Err(GridError::UnknownCell(bad));
        }
        let cells: Vec<Cell> = self.cells.iter().filter(|c| keep.contains(&c.id)).cloned().collect();
        let index: HashMap<CellId, usize> = cells.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
        let adjacency = cells
            .iter()
            .map(|c| {
                self.neighbors(c.id).filter_map(|n| index.get(&n).copied()).collect::<Vec<_>>()
            })
            .collect();
        Ok(HostGrid { kind: self.kind, rows: self.rows, cols: self.cols, cells, adjacency, index })
    }
}

/// Arithmetic mean of all cell centers.
pub fn grid_centroid(grid: &HostGrid) -> Point2 {
    centroid_of(grid.cells.iter().map(|c| c.center))
}

pub(crate) fn centroid_of(points: impl Iterator<Item = Point2>) -> Point2 {
    let (sum, n) = points.fold((Point2::new(0.0, 0.0), 0usize), |(s, n), p| (s + p, n + 1));
    if n == 0 {
        return sum;
    }
    sum * (1.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_rule() {
        assert_eq!(grid_size_for(51), (9, 9));
        assert_eq!(grid_size_for(71), (10, 10));
        assert_eq!(grid_size_for(1), (2, 2));
        assert_eq!(grid_size_for(64), (9, 9));
        assert_eq!(grid_size_for(178), (15, 15));
    }

    #[test]
    fn small_grids() {
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        assert_eq!((g.len(), g.edge_count()), (4, 4));
        let g = build_grid(GridKind::Hex, 2, 2).unwrap();
        assert_eq!((g.len(), g.edge_count()), (4, 5));
        let g = build_grid(GridKind::Square, 1, 3).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(build_grid(GridKind::Hex, 0, 3), Err(GridError::EmptyGrid));
    }

    #[test]
    fn centroids() {
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        assert_eq!(grid_centroid(&g), Point2::new(0.5, 0.5));
        let g = build_grid(GridKind::Square, 3, 3).unwrap();
        assert_eq!(grid_centroid(&g), g.center(CellId(4)).unwrap());
        let g = build_grid(GridKind::Hex, 1, 1).unwrap();
        assert_eq!(grid_centroid(&g), Point2::new(0.0, 0.0));
    }

    #[test]
    fn restriction() {
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let all: BTreeSet<CellId> = g.cell_ids().collect();
        assert_eq!(g.restrict(&all).unwrap(), g);
        let diag: BTreeSet<CellId> = [CellId(0), CellId(3)].into();
        let r = g.restrict(&diag).unwrap();
        assert_eq!((r.len(), r.edge_count()), (2, 0));
        assert_eq!(r.center(CellId(3)), g.center(CellId(3)));
        assert_eq!(g.restrict(&BTreeSet::new()), Err(GridError::EmptyRestriction));
    }

    #[test]
    fn hex_corners_face_neighbors() {
        // The midpoint of side k must lie halfway towards neighbor k.
        let g = build_grid(GridKind::Hex, 3, 3).unwrap();
        let corners = GridKind::Hex.corners();
        let mid = g.center(CellId(4)).unwrap();
        for (k, &(dc, dr)) in GridKind::Hex.neighbor_offsets().iter().enumerate() {
            let n = g.id_at(1 + dr as i64, 1 + dc as i64).unwrap();
            let side_mid = (corners[k] + corners[(k + 1) % 6]) * 0.5 + mid;
            let half = (mid + g.center(n).unwrap()) * 0.5;
            assert!(side_mid.dist(half) < 1e-12, "side {k}");
        }
    }

    #[test]
    fn dump_round_trip() {
        let g = build_grid(GridKind::Hex, 3, 4).unwrap();
        let keep: BTreeSet<CellId> = [1, 2, 5, 6, 9].map(CellId).into();
        let r = g.restrict(&keep).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: HostGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
