//! Grid geometry for the drawing canvas.
//!
//! The canvas is split into `rows × cols` equally sized cells, one image per
//! cell. A drawn stroke is a [`Polyline`] in canvas pixels; [`discretize`]
//! turns it into the [`CellTrace`] of cells the stroke enters, in order.
//!
//! Cells are 8-connected: a stroke that passes exactly through a shared
//! corner moves diagonally in a single step. Points lying on an interior
//! gridline belong to the cell on the right / below it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two crossing parameters closer than this are treated as a corner crossing.
const CORNER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid must have at least one row and one column and at least two cells (got {rows}x{cols})")]
    BadDimensions { rows: u32, cols: u32 },
    #[error("canvas dimensions must be finite and positive (got {width}x{height})")]
    BadCanvas { width: f64, height: f64 },
    #[error("point ({x}, {y}) lies outside the {width}x{height} canvas")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("polyline has no points")]
    EmptyPolyline,
    #[error("cell ({row}, {col}) lies outside the {rows}x{cols} grid")]
    CellOutOfBounds {
        row: u32,
        col: u32,
        rows: u32,
        cols: u32,
    },
    #[error("cells {from:?} and {to:?} are not 8-adjacent")]
    NotAdjacent { from: Cell, to: Cell },
    #[error("cell trace is empty")]
    EmptyTrace,
}

/// Grid dimensions together with the pixel size of the canvas it covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    rows: u32,
    cols: u32,
    canvas_width: f64,
    canvas_height: f64,
}

impl GridSpec {
    pub fn new(rows: u32, cols: u32, canvas_width: f64, canvas_height: f64) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::BadDimensions { rows, cols });
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(canvas_width) || !ok(canvas_height) {
            return Err(GridError::BadCanvas {
                width: canvas_width,
                height: canvas_height,
            });
        }
        Ok(Self {
            rows,
            cols,
            canvas_width,
            canvas_height,
        })
    }

    /// The prototype layout: 4 rows by 6 columns of 100px cells.
    pub fn prototype() -> Self {
        Self::new(4, 6, 600.0, 400.0).expect("prototype grid is valid")
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn canvas_width(&self) -> f64 {
        self.canvas_width
    }

    pub fn canvas_height(&self) -> f64 {
        self.canvas_height
    }

    pub fn cell_width(&self) -> f64 {
        self.canvas_width / f64::from(self.cols)
    }

    pub fn cell_height(&self) -> f64 {
        self.canvas_height / f64::from(self.rows)
    }

    pub fn cell_count(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    /// Same grid laid over a canvas of a different pixel size.
    pub fn with_canvas(&self, width: f64, height: f64) -> Result<Self, GridError> {
        Self::new(self.rows, self.cols, width, height)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn check_cell(&self, cell: Cell) -> Result<Cell, GridError> {
        if self.contains(cell) {
            Ok(cell)
        } else {
            Err(GridError::CellOutOfBounds {
                row: cell.row,
                col: cell.col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Row-major index of a cell.
    pub fn index_of(&self, cell: Cell) -> usize {
        cell.row as usize * self.cols as usize + cell.col as usize
    }

    pub fn cell_from_index(&self, index: usize) -> Cell {
        let cols = self.cols as usize;
        Cell::new((index / cols) as u32, (index % cols) as u32)
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_from_index(i))
    }

    /// Pixel coordinates of a cell's center.
    pub fn cell_center(&self, cell: Cell) -> Point {
        Point::new(
            (f64::from(cell.col) + 0.5) * self.cell_width(),
            (f64::from(cell.row) + 0.5) * self.cell_height(),
        )
    }

    /// Converts a pixel point into grid units (one unit per cell along each axis).
    fn to_units(self, p: Point) -> Result<(f64, f64), GridError> {
        let inside = |v: f64, max: f64| v.is_finite() && (0.0..=max).contains(&v);
        if !inside(p.x, self.canvas_width) || !inside(p.y, self.canvas_height) {
            return Err(GridError::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.canvas_width,
                height: self.canvas_height,
            });
        }
        Ok((
            p.x * f64::from(self.cols) / self.canvas_width,
            p.y * f64::from(self.rows) / self.canvas_height,
        ))
    }

    fn unit_cell(&self, u: f64, v: f64) -> Cell {
        // The far canvas edge belongs to the last row/column.
        let col = (u.floor() as u32).min(self.cols - 1);
        let row = (v.floor() as u32).min(self.rows - 1);
        Cell::new(row, col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    /// Number of king moves between two cells.
    pub fn chebyshev(self, other: Cell) -> u32 {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.chebyshev(other) == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// A single continuous stroke in canvas pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline(Vec<Point>);

impl Polyline {
    pub fn new(points: Vec<Point>) -> Result<Self, GridError> {
        if points.is_empty() {
            return Err(GridError::EmptyPolyline);
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }
}

/// Ordered cells entered by a stroke.
///
/// Consecutive cells are always 8-adjacent, so immediate repeats never
/// occur; a cell may be revisited after leaving it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Cell>", into = "Vec<Cell>")]
pub struct CellTrace(Vec<Cell>);

impl CellTrace {
    pub fn new(cells: Vec<Cell>) -> Result<Self, GridError> {
        if cells.is_empty() {
            return Err(GridError::EmptyTrace);
        }
        for pair in cells.windows(2) {
            if !pair[0].is_adjacent(pair[1]) {
                return Err(GridError::NotAdjacent {
                    from: pair[0],
                    to: pair[1],
                });
            }
        }
        Ok(Self(cells))
    }

    /// Builds a trace after dropping immediate repeats.
    pub fn from_dedup(mut cells: Vec<Cell>) -> Result<Self, GridError> {
        cells.dedup();
        Self::new(cells)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn first(&self) -> Cell {
        self.0[0]
    }

    pub fn last(&self) -> Cell {
        self.0[self.0.len() - 1]
    }

    /// Number of cell-entry events, counting re-entries.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<Cell>> for CellTrace {
    type Error = GridError;

    fn try_from(cells: Vec<Cell>) -> Result<Self, Self::Error> {
        Self::new(cells)
    }
}

impl From<CellTrace> for Vec<Cell> {
    fn from(trace: CellTrace) -> Self {
        trace.0
    }
}

/// Cell containing `point`. Points on an interior gridline belong to the
/// right/bottom cell; the far canvas edges belong to the last column/row.
pub fn cell_at(point: Point, grid: &GridSpec) -> Result<Cell, GridError> {
    let (u, v) = grid.to_units(point)?;
    Ok(grid.unit_cell(u, v))
}

/// Walks every segment of `stroke` across the grid lines and returns the
/// cells entered, in order.
///
/// The walk is exact: the crossing parameter of every gridline is computed
/// and crossings are merged in order along the segment. A simultaneous
/// crossing of a vertical and a horizontal line is a single diagonal step.
pub fn discretize(stroke: &Polyline, grid: &GridSpec) -> Result<CellTrace, GridError> {
    let units = stroke
        .points()
        .iter()
        .map(|&p| grid.to_units(p))
        .collect::<Result<Vec<_>, _>>()?;

    let (u0, v0) = units[0];
    let mut cells = vec![grid.unit_cell(u0, v0)];
    for pair in units.windows(2) {
        walk_segment(grid, pair[0], pair[1], &mut cells);
    }
    CellTrace::new(cells)
}

fn walk_segment(grid: &GridSpec, from: (f64, f64), to: (f64, f64), out: &mut Vec<Cell>) {
    let start = grid.unit_cell(from.0, from.1);
    let end = grid.unit_cell(to.0, to.1);
    if start == end {
        return;
    }
    let col_steps = crossings(from.0, to.0, start.col, end.col);
    let row_steps = crossings(from.1, to.1, start.row, end.row);
    let dcol: i64 = if end.col > start.col { 1 } else { -1 };
    let drow: i64 = if end.row > start.row { 1 } else { -1 };

    let (mut row, mut col) = (i64::from(start.row), i64::from(start.col));
    let (mut i, mut j) = (0, 0);
    while i < col_steps.len() || j < row_steps.len() {
        let tc = col_steps.get(i).copied().unwrap_or(f64::INFINITY);
        let tr = row_steps.get(j).copied().unwrap_or(f64::INFINITY);
        if (tc - tr).abs() <= CORNER_EPS {
            col += dcol;
            row += drow;
            i += 1;
            j += 1;
        } else if tc < tr {
            col += dcol;
            i += 1;
        } else {
            row += drow;
            j += 1;
        }
        out.push(Cell::new(row as u32, col as u32));
    }
}

/// Segment parameters at which the walk moves from `start` to `end` along
/// one axis, in increasing order.
fn crossings(a: f64, b: f64, start: u32, end: u32) -> Vec<f64> {
    let delta = b - a;
    let steps = start.abs_diff(end);
    (1..=steps)
        .map(|k| {
            // Moving forward the line sits at the new cell's low edge; moving
            // backward it is the low edge of the cell being left.
            let line = if end > start {
                f64::from(start + k)
            } else {
                f64::from(start - k + 1)
            };
            ((line - a) / delta).clamp(0.0, 1.0)
        })
        .collect()
}

/// Number of cell entries in a trace, counting re-entries.
pub fn trace_length(trace: &CellTrace) -> usize {
    trace.len()
}

/// Minimum trace length that visits `waypoints` in order: one for the
/// starting cell plus the king-move distance of every hop.
pub fn chain_min_length(waypoints: &[Cell]) -> usize {
    if waypoints.is_empty() {
        return 0;
    }
    1 + waypoints
        .windows(2)
        .map(|w| w[0].chebyshev(w[1]) as usize)
        .sum::<usize>()
}

/// One shortest king-move path from `from` to `to`, excluding `from`.
/// Diagonal moves are taken first.
pub fn shortest_path(from: Cell, to: Cell) -> Vec<Cell> {
    let mut path = Vec::with_capacity(from.chebyshev(to) as usize);
    let (mut r, mut c) = (i64::from(from.row), i64::from(from.col));
    let (tr, tc) = (i64::from(to.row), i64::from(to.col));
    while (r, c) != (tr, tc) {
        r += (tr - r).signum();
        c += (tc - c).signum();
        path.push(Cell::new(r as u32, c as u32));
    }
    path
}

/// A minimal-length trace through `waypoints` in order.
pub fn chain_trace(waypoints: &[Cell]) -> Result<CellTrace, GridError> {
    let first = *waypoints.first().ok_or(GridError::EmptyTrace)?;
    let mut cells = vec![first];
    for w in waypoints.windows(2) {
        cells.extend(shortest_path(w[0], w[1]));
    }
    CellTrace::new(cells)
}

/// A stroke through the centers of the given cells.
pub fn polyline_through(cells: &[Cell], grid: &GridSpec) -> Result<Polyline, GridError> {
    Polyline::new(cells.iter().map(|&c| grid.cell_center(c)).collect())
}
