//! Computation grid, ray/cell traversal, sparse weight-matrix assembly and the
//! Kaczmarz row-action solver.

use std::ops::{Deref, DerefMut};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Obstacle, Point2, Segment, Square};
use crate::rays::{AbstractRaySet, RaySet};

/// `n` x `n` square cells of side `cell_size`, lower-left corner at `origin`.
/// Cell `(col, row)` has linear index `row * n + col`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub cell_size: f64,
    pub origin: Point2,
}

impl Grid {
    pub fn new(n: usize, cell_size: f64, origin: Point2) -> Result<Self> {
        if n == 0 || !(cell_size > 0.0 && cell_size.is_finite()) || !origin.is_finite() {
            return Err(Error::invalid(format!(
                "grid needs n >= 1 and a positive cell size (n = {n}, d = {cell_size})"
            )));
        }
        Ok(Grid { n, cell_size, origin })
    }

    /// The grid whose bounding square is the domain.
    pub fn covering(dom: &DomainSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("grid needs at least one cell per side"));
        }
        Grid::new(n, dom.side / n as f64, dom.origin)
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.cell_size
    }

    pub fn bounds(&self) -> Square {
        let half = 0.5 * self.side();
        Square {
            center: Point2::new(self.origin.x + half, self.origin.y + half),
            side: self.side(),
        }
    }

    fn axis_cell(&self, v: f64) -> usize {
        let k = (v / self.cell_size).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n - 1)
        }
    }

    /// Index of the cell containing `p`, clamped to the grid.
    pub fn cell_at(&self, p: Point2) -> usize {
        let col = self.axis_cell(p.x - self.origin.x);
        let row = self.axis_cell(p.y - self.origin.y);
        row * self.n + col
    }

    pub fn cell_center(&self, i: usize) -> Point2 {
        let (row, col) = (i / self.n, i % self.n);
        Point2::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_square(&self, i: usize) -> Square {
        Square {
            center: self.cell_center(i),
            side: self.cell_size,
        }
    }

    /// Cells lying entirely inside the closed obstacle.
    pub fn cells_inside(&self, obs: &Obstacle) -> Vec<bool> {
        let o = obs.square();
        (0..self.cells())
            .map(|i| {
                let c = self.cell_square(i);
                c.min_x() >= o.min_x()
                    && c.max_x() <= o.max_x()
                    && c.min_y() >= o.min_y()
                    && c.max_y() <= o.max_y()
            })
            .collect()
    }

    /// Cells sharing no interior point with the obstacle.
    pub fn cells_clear_of(&self, obs: &Obstacle) -> Vec<bool> {
        let o = obs.square();
        (0..self.cells())
            .map(|i| {
                let c = self.cell_square(i);
                c.max_x() <= o.min_x()
                    || c.min_x() >= o.max_x()
                    || c.max_y() <= o.min_y()
                    || c.min_y() >= o.max_y()
            })
            .collect()
    }
}

/// One value per grid cell, row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridVector(pub Vec<f64>);

impl GridVector {
    pub fn zeros(grid: &Grid) -> Self {
        GridVector(vec![0.0; grid.cells()])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for GridVector {
    fn from(v: Vec<f64>) -> Self {
        GridVector(v)
    }
}

impl Deref for GridVector {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for GridVector {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

/// Cells crossed by `seg`, with the length of `seg` inside each, in traversal
/// order.
///
/// The segment must lie inside the grid's bounding square. A segment running
/// exactly along a grid line is charged to the cells above/right of it (the
/// top and right outer edges are charged to the last row/column).
pub fn cell_traversal(seg: &Segment, grid: &Grid) -> Result<Vec<(usize, f64)>> {
    if seg.a == seg.b {
        return Err(Error::invalid(format!("degenerate segment at {}", seg.a)));
    }
    let bounds = grid.bounds();
    let tol = 1e-9 * grid.side().max(1.0);
    if !bounds.contains(seg.a, tol) || !bounds.contains(seg.b, tol) {
        return Err(Error::invalid(format!(
            "segment {} -> {} leaves the grid",
            seg.a, seg.b
        )));
    }
    let len = seg.length();
    let d = seg.direction();
    let crossings = |a: f64, delta: f64, origin: f64| -> Vec<f64> {
        if delta == 0.0 {
            return Vec::new();
        }
        let (lo, hi) = if delta > 0.0 { (a, a + delta) } else { (a + delta, a) };
        let first = ((lo - origin) / grid.cell_size).floor() as i64 + 1;
        let last = ((hi - origin) / grid.cell_size).ceil() as i64 - 1;
        let mut ts: Vec<f64> = (first.max(1)..=last.min(grid.n as i64 - 1))
            .map(|k| (origin + k as f64 * grid.cell_size - a) / delta)
            .filter(|t| *t > 0.0 && *t < 1.0)
            .collect();
        if delta < 0.0 {
            ts.reverse();
        }
        ts
    };
    let tx = crossings(seg.a.x, d.x, grid.origin.x);
    let ty = crossings(seg.a.y, d.y, grid.origin.y);

    let mut ts = Vec::with_capacity(tx.len() + ty.len() + 2);
    ts.push(0.0);
    let (mut i, mut j) = (0, 0);
    while i < tx.len() || j < ty.len() {
        if j >= ty.len() || (i < tx.len() && tx[i] <= ty[j]) {
            ts.push(tx[i]);
            i += 1;
        } else {
            ts.push(ty[j]);
            j += 1;
        }
    }
    ts.push(1.0);

    let mut out: Vec<(usize, f64)> = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let cell = grid.cell_at(seg.point_at(0.5 * (t0 + t1)));
        let piece = (t1 - t0) * len;
        match out.last_mut() {
            Some((c, l)) if *c == cell => *l += piece,
            _ => out.push((cell, piece)),
        }
    }
    Ok(out)
}

/// Path length of one element ray of a row inside one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellHit {
    pub cell: usize,
    pub element: usize,
    pub length: f64,
}

/// Cell intersections of a row, one per (cell, element ray), sorted by cell
/// then element. `legs` pairs each straight leg with the index of the ray it
/// belongs to; the legs of one ray that cross the same cell add up. Cells
/// flagged in `excluded` and contacts shorter than `1e-12 d` are dropped.
pub fn row_hits(legs: &[(usize, Segment)], grid: &Grid, excluded: &[bool]) -> Result<Vec<CellHit>> {
    let min_len = 1e-12 * grid.cell_size;
    let mut hits = Vec::new();
    for (element, seg) in legs {
        for (cell, length) in cell_traversal(seg, grid)? {
            if length > min_len && !excluded.get(cell).copied().unwrap_or(false) {
                hits.push(CellHit { cell, element: *element, length });
            }
        }
    }
    hits.sort_by(|a, b| (a.cell, a.element).cmp(&(b.cell, b.element)));
    hits.dedup_by(|next, prev| {
        if next.cell == prev.cell && next.element == prev.element {
            prev.length += next.length;
            true
        } else {
            false
        }
    });
    Ok(hits)
}

/// Collapses hits to one weight per cell: the mean over the element rays
/// crossing it.
pub fn average_hits(hits: &[CellHit]) -> (Vec<u32>, Vec<f64>) {
    let mut cells = Vec::new();
    let mut weights = Vec::new();
    let mut k = 0;
    while k < hits.len() {
        let cell = hits[k].cell;
        let mut sum = 0.0;
        let mut count = 0usize;
        while k < hits.len() && hits[k].cell == cell {
            sum += hits[k].length;
            count += 1;
            k += 1;
        }
        cells.push(cell as u32);
        weights.push(sum / count as f64);
    }
    (cells, weights)
}

/// Borrowed view of one matrix row.
#[derive(Debug, Clone, Copy)]
pub struct WeightRow<'a> {
    pub cells: &'a [u32],
    pub weights: &'a [f64],
    pub rhs: f64,
}

impl WeightRow<'_> {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.cells
            .iter()
            .zip(self.weights)
            .map(|(&c, &w)| w * x[c as usize])
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Sparse weight matrix in compressed-row form with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n_cells: usize,
    row_ptr: Vec<usize>,
    cells: Vec<u32>,
    weights: Vec<f64>,
    rhs: Vec<f64>,
}

impl WeightMatrix {
    /// Builds a matrix from `(cells, weights, rhs)` rows. Cell indices must be
    /// strictly increasing and below `n_cells`, weights positive, rows nonempty.
    pub fn from_rows(n_cells: usize, rows: Vec<(Vec<u32>, Vec<f64>, f64)>) -> Result<Self> {
        let mut m = WeightMatrix {
            n_cells,
            row_ptr: Vec::with_capacity(rows.len() + 1),
            cells: Vec::new(),
            weights: Vec::new(),
            rhs: Vec::with_capacity(rows.len()),
        };
        m.row_ptr.push(0);
        for (j, (cells, weights, rhs)) in rows.into_iter().enumerate() {
            if cells.is_empty() {
                return Err(Error::invalid(format!("row {j} has no cell weights")));
            }
            if cells.len() != weights.len() {
                return Err(Error::invalid(format!("row {j}: index/weight length mismatch")));
            }
            if cells.windows(2).any(|w| w[0] >= w[1]) || *cells.last().unwrap() as usize >= n_cells {
                return Err(Error::invalid(format!("row {j}: cell indices out of order or range")));
            }
            if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::invalid(format!("row {j}: weights must be positive")));
            }
            if !rhs.is_finite() {
                return Err(Error::invalid(format!("row {j}: right-hand side is not finite")));
            }
            m.cells.extend(cells);
            m.weights.extend(weights);
            m.rhs.push(rhs);
            m.row_ptr.push(m.cells.len());
        }
        Ok(m)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn nnz(&self) -> usize {
        self.cells.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row(&self, j: usize) -> WeightRow<'_> {
        let (s, e) = (self.row_ptr[j], self.row_ptr[j + 1]);
        WeightRow {
            cells: &self.cells[s..e],
            weights: &self.weights[s..e],
            rhs: self.rhs[j],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = WeightRow<'_>> + '_ {
        (0..self.n_rows()).map(move |j| self.row(j))
    }

    pub fn row_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.row_ptr.windows(2).map(|w| w[1] - w[0])
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows().map(|r| r.dot(x)).collect()
    }
}

fn assemble_legs<F>(n_rows: usize, legs_of: F, times: &[f64], grid: &Grid, obs: &Obstacle) -> Result<WeightMatrix>
where
    F: Fn(usize) -> Vec<(usize, Segment)> + Sync,
{
    if times.len() != n_rows {
        return Err(Error::invalid(format!(
            "{} travel times for {n_rows} rows",
            times.len()
        )));
    }
    let inside = grid.cells_inside(obs);
    let rows: Result<Vec<_>> = (0..n_rows)
        .into_par_iter()
        .map(|j| {
            let hits = row_hits(&legs_of(j), grid, &inside).map_err(|e| Error::Ray {
                index: j,
                source: Box::new(e),
            })?;
            let (cells, weights) = average_hits(&hits);
            Ok((cells, weights, times[j]))
        })
        .collect();
    WeightMatrix::from_rows(grid.cells(), rows?)
}

/// One row per ray of `rays`, right-hand side `times`.
pub fn assemble(rays: &RaySet, times: &[f64], grid: &Grid, obs: &Obstacle) -> Result<WeightMatrix> {
    assemble_legs(
        rays.len(),
        |j| rays.rays[j].legs().iter().map(|s| (0, *s)).collect(),
        times,
        grid,
        obs,
    )
}

/// One row per abstract ray; every leg of every element is traversed and a
/// cell crossed by several element rays gets the mean of their weights.
pub fn assemble_abstract(
    abstract_rays: &AbstractRaySet,
    source: &RaySet,
    times: &[f64],
    grid: &Grid,
    obs: &Obstacle,
) -> Result<WeightMatrix> {
    for (j, ar) in abstract_rays.abstract_rays.iter().enumerate() {
        if let Some(&bad) = ar.elements.iter().find(|&&e| e >= source.len()) {
            return Err(Error::invalid(format!(
                "abstract ray {j} references ray {bad} of {}",
                source.len()
            )));
        }
    }
    assemble_legs(
        abstract_rays.len(),
        |j| {
            abstract_rays.abstract_rays[j]
                .elements
                .iter()
                .flat_map(|&e| source.rays[e].legs().iter().map(move |s| (e, *s)).collect::<Vec<_>>())
                .collect()
        },
        times,
        grid,
        obs,
    )
}

/// Upper bound on the travel-time error a multiply-hit cell can introduce.
pub fn multi_hit_bound(cell_size: f64, v_min: f64) -> f64 {
    std::f64::consts::SQRT_2 * cell_size / v_min
}

/// Cyclic row schedule: natural order, or a seeded shuffle of it.
pub fn row_order(n_rows: usize, seed: Option<u64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_rows).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

/// Consecutive quiet updates needed to stop: `min(rows, CONVERGENCE_WINDOW)`.
pub const CONVERGENCE_WINDOW: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// Row updates performed.
    pub iterations: usize,
    /// Updates performed before the final quiet window began, when the
    /// stopping rule fired.
    pub converged_at: Option<usize>,
    /// Norm of the last correction vector.
    pub final_update_norm: f64,
    pub residual_norm: f64,
}

/// Kaczmarz projections `x += (p_h - w_h.x) / (w_h.w_h) w_h`, cycling through
/// `order`.
///
/// Stops once `min(rows, 4096)` consecutive corrections all have norm below
/// `tol`, or after `max_updates` updates.
pub fn kaczmarz_solve(
    w: &WeightMatrix,
    x0: &GridVector,
    order: &[usize],
    tol: f64,
    max_updates: usize,
) -> Result<(GridVector, SolveReport)> {
    if x0.len() != w.n_cells() {
        return Err(Error::invalid(format!(
            "start vector has {} entries, matrix has {} columns",
            x0.len(),
            w.n_cells()
        )));
    }
    let n_rows = w.n_rows();
    if order.len() != n_rows || order.iter().any(|&h| h >= n_rows) {
        return Err(Error::invalid("row order must index every matrix row"));
    }
    let norms: Vec<f64> = w.rows().map(|r| r.norm_sq()).collect();
    if let Some(j) = norms.iter().position(|&n| !(n > 0.0)) {
        return Err(Error::invalid(format!("row {j} has zero norm")));
    }

    let mut x = x0.clone();
    let window = n_rows.min(CONVERGENCE_WINDOW);
    let mut quiet = 0usize;
    let mut updates = 0usize;
    let mut last_norm = 0.0;
    let mut converged_at = None;
    if n_rows > 0 {
        'outer: loop {
            for &h in order {
                if updates >= max_updates {
                    break 'outer;
                }
                let row = w.row(h);
                let gap = row.rhs - row.dot(&x);
                let step = gap / norms[h];
                for (&c, &wt) in row.cells.iter().zip(row.weights) {
                    x[c as usize] += step * wt;
                }
                updates += 1;
                last_norm = gap.abs() / norms[h].sqrt();
                if last_norm < tol {
                    quiet += 1;
                    if quiet >= window {
                        converged_at = Some(updates - window);
                        break 'outer;
                    }
                } else {
                    quiet = 0;
                }
            }
        }
    }
    let residual = residual_norm(w, &x);
    Ok((
        x,
        SolveReport {
            iterations: updates,
            converged_at,
            final_update_norm: last_norm,
            residual_norm: residual,
        },
    ))
}

/// `|W f - P|`.
pub fn residual_norm(w: &WeightMatrix, f: &[f64]) -> f64 {
    w.rows()
        .map(|r| {
            let e = r.dot(f) - r.rhs;
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid64() -> Grid {
        Grid::new(64, 8.0, Point2::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn full_row_gets_cell_size_everywhere() {
        let g = grid64();
        let seg = Segment::new(Point2::new(0.0, 12.0), Point2::new(512.0, 12.0)).unwrap();
        let cells = cell_traversal(&seg, &g).unwrap();
        assert_eq!(cells.len(), 64);
        for (k, (c, l)) in cells.iter().enumerate() {
            assert_eq!(*c, 64 + k);
            assert!((l - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_diagonal() {
        let g = grid64();
        let seg = Segment::new(Point2::new(16.0, 24.0), Point2::new(24.0, 32.0)).unwrap();
        let cells = cell_traversal(&seg, &g).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].0, 3 * 64 + 2);
        assert!((cells[0].1 - 8.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn traversal_rejects_bad_segments() {
        let g = grid64();
        let p = Point2::new(1.0, 1.0);
        assert!(cell_traversal(&Segment { a: p, b: p }, &g).is_err());
        let out = Segment::new(p, Point2::new(600.0, 1.0)).unwrap();
        assert!(cell_traversal(&out, &g).is_err());
    }

    #[test]
    fn boundary_segments_charge_edge_rows() {
        let g = grid64();
        let top = Segment::new(Point2::new(4.0, 512.0), Point2::new(100.0, 512.0)).unwrap();
        let cells = cell_traversal(&top, &g).unwrap();
        assert!(cells.iter().all(|(c, _)| c / 64 == 63));
        let total: f64 = cells.iter().map(|c| c.1).sum();
        assert!((total - 96.0).abs() < 1e-9);
    }

    #[test]
    fn averaging_rule() {
        let hits = [
            CellHit { cell: 3, element: 0, length: 2.0 },
            CellHit { cell: 3, element: 1, length: 4.0 },
            CellHit { cell: 5, element: 1, length: 1.5 },
        ];
        let (cells, weights) = average_hits(&hits);
        assert_eq!(cells, vec![3, 5]);
        assert_eq!(weights, vec![3.0, 1.5]);
    }

    #[test]
    fn from_rows_validation() {
        assert!(WeightMatrix::from_rows(4, vec![(vec![], vec![], 1.0)]).is_err());
        assert!(WeightMatrix::from_rows(4, vec![(vec![2, 1], vec![1.0, 1.0], 1.0)]).is_err());
        assert!(WeightMatrix::from_rows(4, vec![(vec![4], vec![1.0], 1.0)]).is_err());
        assert!(WeightMatrix::from_rows(4, vec![(vec![1], vec![0.0], 1.0)]).is_err());
    }

    #[test]
    fn identity_solves_in_one_sweep() {
        let w = WeightMatrix::from_rows(2, vec![(vec![0], vec![1.0], 3.0), (vec![1], vec![1.0], 5.0)]).unwrap();
        let x0 = GridVector(vec![0.0, 0.0]);
        let (x, rep) = kaczmarz_solve(&w, &x0, &[0, 1], 1e-10, 2).unwrap();
        assert_eq!(x.0, vec![3.0, 5.0]);
        assert_eq!(rep.iterations, 2);
        let (_, rep) = kaczmarz_solve(&w, &x0, &[0, 1], 1e-10, 100).unwrap();
        assert_eq!(rep.converged_at, Some(2));
    }

    #[test]
    fn two_by_two_closed_form() {
        // x = 1, x + y = 3  =>  (1, 2)
        let w = WeightMatrix::from_rows(2, vec![(vec![0], vec![1.0], 1.0), (vec![0, 1], vec![1.0, 1.0], 3.0)]).unwrap();
        let (x, rep) = kaczmarz_solve(&w, &GridVector(vec![0.0; 2]), &[0, 1], 1e-14, 10_000).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);
        assert!(rep.converged_at.is_some());
    }

    #[test]
    fn max_updates_zero_returns_start() {
        let w = WeightMatrix::from_rows(1, vec![(vec![0], vec![2.0], 4.0)]).unwrap();
        let (x, rep) = kaczmarz_solve(&w, &GridVector(vec![0.5]), &[0], 1e-10, 0).unwrap();
        assert_eq!(x.0, vec![0.5]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn residual_examples() {
        let w = WeightMatrix::from_rows(2, vec![(vec![0], vec![1.0], 3.0), (vec![1], vec![1.0], 4.0)]).unwrap();
        assert_eq!(residual_norm(&w, &[0.0, 0.0]), 5.0);
        assert!(residual_norm(&w, &[3.0, 4.0]) <= 1e-12);
    }

    #[test]
    fn bad_order_rejected() {
        let w = WeightMatrix::from_rows(1, vec![(vec![0], vec![1.0], 1.0)]).unwrap();
        assert!(kaczmarz_solve(&w, &GridVector(vec![0.0]), &[1], 1e-10, 5).is_err());
        assert!(kaczmarz_solve(&w, &GridVector(vec![0.0, 0.0]), &[0], 1e-10, 5).is_err());
    }
}
