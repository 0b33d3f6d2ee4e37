//! Grid geometry checked against independent oracles: breadth-first search
//! on the king-move graph and dense point sampling of strokes.

use std::collections::VecDeque;

use curvepass_core::grid::{cell_at, chain_min_length, discretize, trace_length};
use curvepass_core::{Cell, GridSpec, Point, Polyline};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bfs_distances(grid: &GridSpec, from: Cell) -> Vec<Option<u32>> {
    let mut dist = vec![None; grid.cell_count()];
    let mut queue = VecDeque::from([from]);
    dist[grid.index_of(from)] = Some(0);
    while let Some(cur) = queue.pop_front() {
        let d = dist[grid.index_of(cur)].unwrap();
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (r, c) = (i64::from(cur.row) + dr, i64::from(cur.col) + dc);
                if r < 0 || c < 0 || r >= i64::from(grid.rows()) || c >= i64::from(grid.cols()) {
                    continue;
                }
                let next = Cell::new(r as u32, c as u32);
                let slot = &mut dist[grid.index_of(next)];
                if slot.is_none() {
                    *slot = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
    }
    dist
}

/// Cells hit by `samples` evenly spaced points per segment, deduplicated.
fn sampled_trace(stroke: &[Point], grid: &GridSpec, samples: usize) -> Vec<Cell> {
    let mut cells = vec![cell_at(stroke[0], grid).unwrap()];
    for seg in stroke.windows(2) {
        for i in 1..=samples {
            let t = i as f64 / samples as f64;
            let p = Point::new(
                seg[0].x + (seg[1].x - seg[0].x) * t,
                seg[0].y + (seg[1].y - seg[0].y) * t,
            );
            cells.push(cell_at(p, grid).unwrap());
        }
    }
    cells.dedup();
    cells
}

/// Collapses corner ambiguities: in `a, x, b` with `a`/`b` diagonal
/// neighbours and `x` edge-adjacent to both, `x` is dropped.
fn collapse_corners(cells: &[Cell]) -> Vec<Cell> {
    let edge = |a: Cell, b: Cell| a.row.abs_diff(b.row) + a.col.abs_diff(b.col) == 1;
    let diag = |a: Cell, b: Cell| a.row.abs_diff(b.row) == 1 && a.col.abs_diff(b.col) == 1;
    let mut out: Vec<Cell> = Vec::with_capacity(cells.len());
    for &c in cells {
        if out.len() >= 2 {
            let (a, x) = (out[out.len() - 2], out[out.len() - 1]);
            if diag(a, c) && edge(a, x) && edge(x, c) {
                out.pop();
            }
        }
        out.push(c);
    }
    out
}

fn random_stroke(rng: &mut impl Rng, grid: &GridSpec) -> Vec<Point> {
    let n = rng.random_range(1..=6);
    (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(0.0..grid.canvas_width()),
                rng.random_range(0.0..grid.canvas_height()),
            )
        })
        .collect()
}

#[test]
fn chebyshev_equals_bfs_on_prototype_grid() {
    let grid = GridSpec::prototype();
    for a in grid.cells() {
        let dist = bfs_distances(&grid, a);
        for b in grid.cells() {
            assert_eq!(Some(a.chebyshev(b)), dist[grid.index_of(b)], "{a:?} -> {b:?}");
        }
    }
}

#[test]
fn chain_min_length_matches_bfs_on_all_small_grids() {
    for rows in 1..=6 {
        for cols in 1..=6 {
            if rows * cols < 2 {
                continue;
            }
            let grid = GridSpec::new(rows, cols, 60.0, 60.0).unwrap();
            for a in grid.cells() {
                let dist = bfs_distances(&grid, a);
                for b in grid.cells() {
                    let expected = dist[grid.index_of(b)].unwrap() as usize + 1;
                    assert_eq!(chain_min_length(&[a, b]), expected);
                }
            }
        }
    }
}

#[test]
fn multi_hop_chain_matches_bfs_per_hop() {
    let grid = GridSpec::prototype();
    let hops = [Cell::new(0, 0), Cell::new(0, 3), Cell::new(2, 3)];
    let expected = 1 + hops
        .windows(2)
        .map(|w| bfs_distances(&grid, w[0])[grid.index_of(w[1])].unwrap() as usize)
        .sum::<usize>();
    assert_eq!(expected, 6);
    assert_eq!(chain_min_length(&hops), expected);
}

#[test]
fn diagonal_through_corners_matches_dense_sampling() {
    let grid = GridSpec::prototype();
    let stroke = vec![Point::new(50.0, 50.0), Point::new(350.0, 350.0)];
    let exact = discretize(&Polyline::new(stroke.clone()).unwrap(), &grid).unwrap();
    let sampled = sampled_trace(&stroke, &grid, 10_000);
    assert_eq!(
        exact.cells(),
        &[Cell::new(0, 0), Cell::new(1, 1), Cell::new(2, 2), Cell::new(3, 3)]
    );
    assert_eq!(collapse_corners(exact.cells()), collapse_corners(&sampled));
}

#[test]
fn discretize_agrees_with_dense_sampling_on_random_strokes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let grids = [
        GridSpec::prototype(),
        GridSpec::new(3, 3, 300.0, 300.0).unwrap(),
        GridSpec::new(5, 7, 333.0, 211.0).unwrap(),
    ];
    let mut disagreements = 0;
    for i in 0..1000 {
        let grid = &grids[i % grids.len()];
        let stroke = random_stroke(&mut rng, grid);
        let exact = discretize(&Polyline::new(stroke.clone()).unwrap(), grid).unwrap();
        let sampled = sampled_trace(&stroke, grid, 10_000);
        if collapse_corners(exact.cells()) != collapse_corners(&sampled) {
            disagreements += 1;
            eprintln!("stroke {stroke:?}\n exact {:?}\n sampled {sampled:?}", exact.cells());
        }
    }
    assert_eq!(disagreements, 0);
}

fn stroke_strategy() -> impl Strategy<Value = (GridSpec, Vec<Point>)> {
    (1u32..=6, 1u32..=6, 50.0f64..900.0, 50.0f64..900.0)
        .prop_filter("at least two cells", |(r, c, _, _)| r * c >= 2)
        .prop_flat_map(|(rows, cols, w, h)| {
            let grid = GridSpec::new(rows, cols, w, h).unwrap();
            let pt = (0.0..=w, 0.0..=h).prop_map(|(x, y)| Point::new(x, y));
            (Just(grid), prop::collection::vec(pt, 1..8))
        })
}

proptest! {
    #[test]
    fn discretized_traces_are_valid((grid, stroke) in stroke_strategy()) {
        let trace = discretize(&Polyline::new(stroke.clone()).unwrap(), &grid).unwrap();
        for w in trace.cells().windows(2) {
            prop_assert_eq!(w[0].chebyshev(w[1]), 1);
        }
        prop_assert_eq!(trace.first(), cell_at(stroke[0], &grid).unwrap());
        prop_assert_eq!(trace.last(), cell_at(*stroke.last().unwrap(), &grid).unwrap());
        prop_assert!(trace_length(&trace) >= chain_min_length(&[trace.first(), trace.last()]));
    }

    #[test]
    fn gridline_points_go_right_and_down(col in 1u32..6, row in 1u32..4) {
        let grid = GridSpec::prototype();
        let p = Point::new(f64::from(col) * 100.0, f64::from(row) * 100.0);
        prop_assert_eq!(cell_at(p, &grid).unwrap(), Cell::new(row, col));
    }
}
