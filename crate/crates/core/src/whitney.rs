//! Superlevel sets of the grand maximal function, dyadic Whitney covers of
//! open sets, and the smooth partition of unity subordinate to the cover.
//!
//! Whitney selection takes maximal grid-anchored dyadic cubes whose distance
//! to the complement is at least `window.low * diam(Q)`; maximality forces
//! `dist <= window.high * diam(Q)`. The classic window (1, 4) for n = 1
//! guarantees cell-exact coverage of the open set; the much wider window
//! factor `2^{6+n}` used in the source constructions is available via
//! [`WhitneyWindow::wide`] but leaves an uncovered collar of width
//! `~2^{6+n} h` at finite resolution, so it is not the default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::GridCube;
use crate::grid::{Cube, DyadicAddress, Grid, SampledFunction};

/// Open set as a union of grid cells, with the exact distance field to the
/// complement (cell-center to cell-center).
#[derive(Debug, Clone)]
pub struct OpenSet {
    pub grid: Grid,
    pub inside: Vec<bool>,
    /// `dist(x, complement)`, positive exactly on inside cells.
    pub dist: Vec<f64>,
    pub lambda: f64,
}

impl OpenSet {
    pub fn cell_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_whole_domain(&self) -> bool {
        self.inside.iter().all(|&b| b)
    }
}

/// Cells where `mf > lambda`. Fails when the set would touch the domain
/// boundary (margin ring of `margin_cells`), since distances to the true
/// complement would then be unrepresentable on the truncated domain.
pub fn superlevel_set(mf: &SampledFunction, lambda: f64, margin_cells: usize) -> Result<OpenSet> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam(format!("lambda = {lambda} must be positive")));
    }
    let grid = mf.grid;
    let inside: Vec<bool> = mf.values.iter().map(|v| v.re > lambda).collect();
    let inf = mf.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if inside.iter().all(|&b| b) {
        return Err(Error::DomainTooSmall(format!(
            "lambda = {lambda} <= inf of the maximal field ({inf}); the superlevel set is everything"
        )));
    }
    // margin ring must stay clear
    let m = grid.m;
    let in_ring = |ix: usize, iy: usize| -> bool {
        ix < margin_cells || ix >= m - margin_cells || (grid.n == 2 && (iy < margin_cells || iy >= m - margin_cells))
    };
    for idx in grid.indices() {
        let (ix, iy) = match grid.n {
            1 => (idx, 0),
            _ => (idx % m, idx / m),
        };
        if inside[idx] && in_ring(ix, iy) {
            return Err(Error::DomainTooSmall(format!(
                "superlevel set at lambda = {lambda} reaches within {margin_cells} cells of the boundary"
            )));
        }
    }
    let dist = distance_to_complement(&grid, &inside);
    Ok(OpenSet { grid, inside, dist, lambda })
}

/// Exact Euclidean distance (between cell centers) from each cell to the
/// nearest complement cell; zero on the complement itself.
pub fn distance_to_complement(grid: &Grid, inside: &[bool]) -> Vec<f64> {
    let m = grid.m;
    let h = grid.h();
    const INF: f64 = 1e18;
    match grid.n {
        1 => {
            let mut d = vec![INF; m];
            // left-to-right then right-to-left scans over cell counts
            let mut last: Option<usize> = None;
            for i in 0..m {
                if !inside[i] {
                    last = Some(i);
                    d[i] = 0.0;
                } else if let Some(j) = last {
                    d[i] = (i - j) as f64;
                }
            }
            last = None;
            for i in (0..m).rev() {
                if !inside[i] {
                    last = Some(i);
                } else if let Some(j) = last {
                    d[i] = d[i].min((j - i) as f64);
                }
            }
            d.iter().map(|&v| if v >= INF { INF } else { v * h }).collect()
        }
        _ => {
            // Felzenszwalb-Huttenlocher exact squared distance transform
            let mut sq = vec![INF; m * m];
            for idx in 0..m * m {
                if !inside[idx] {
                    sq[idx] = 0.0;
                }
            }
            let mut tmp = vec![0.0f64; m];
            for iy in 0..m {
                let row: Vec<f64> = (0..m).map(|ix| sq[iy * m + ix]).collect();
                dt_1d(&row, &mut tmp);
                for ix in 0..m {
                    sq[iy * m + ix] = tmp[ix];
                }
            }
            for ix in 0..m {
                let col: Vec<f64> = (0..m).map(|iy| sq[iy * m + ix]).collect();
                dt_1d(&col, &mut tmp);
                for iy in 0..m {
                    sq[iy * m + ix] = tmp[iy];
                }
            }
            sq.iter().map(|&v| v.sqrt() * h).collect()
        }
    }
}

/// One-dimensional squared distance transform (lower envelope of parabolas).
fn dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let s = ((f[q] + (q * q) as f64) - (f[v[k]] + (v[k] * v[k]) as f64))
                / (2.0 * q as f64 - 2.0 * v[k] as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        out[q] = dq * dq + f[v[k]];
    }
}

/// Proportionality window for Whitney cubes, in units of `diam(Q)`:
/// `low * diam <= dist(Q, complement) <= high * diam`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitneyWindow {
    pub low: f64,
    pub high: f64,
}

impl WhitneyWindow {
    /// Classic window; (1, 4) for n = 1. The lower factor `1/sqrt(n)` keeps
    /// single-cell cubes admissible next to the boundary, which is what
    /// makes cell-exact coverage possible.
    pub fn classic(n: usize) -> WhitneyWindow {
        let low = 1.0 / (n as f64).sqrt();
        WhitneyWindow { low, high: 2.0 * (1.0 + low) }
    }

    /// The wide window with lower factor `2^{6+n}`; only usable when the
    /// open set is resolved by thousands of cells per axis.
    pub fn wide(n: usize) -> WhitneyWindow {
        let low = 2f64.powi(6 + n as i32);
        WhitneyWindow { low, high: 4.0 * low }
    }
}

#[derive(Debug, Clone)]
pub struct WhitneyCube {
    pub cells: GridCube,
    pub cube: Cube,
    /// `dist(Q, complement)`: min over the cube's cells of the distance field.
    pub dist: f64,
}

impl WhitneyCube {
    pub fn side(&self) -> f64 {
        self.cube.side
    }
}

/// Whitney cover: pairwise disjoint dyadic cubes tiling the open set, with
/// the standard slightly-enlarged dilates.
#[derive(Debug, Clone)]
pub struct WhitneyCover {
    pub grid: Grid,
    pub cubes: Vec<WhitneyCube>,
    pub window: WhitneyWindow,
    /// Dilate factor for `Q_bar` (partition supports).
    pub a: f64,
    /// Dilate factor for `Q_star`.
    pub b: f64,
    /// Measured bounded-overlap constant of the `Q_star` family.
    pub overlap: usize,
}

impl WhitneyCover {
    pub fn q_bar(&self, i: usize) -> Cube {
        self.cubes[i].cube.dilate(self.a)
    }

    pub fn q_star(&self, i: usize) -> Cube {
        self.cubes[i].cube.dilate(self.b)
    }

    /// JSON array of `{level, index, center, side, dist_to_complement}`,
    /// consumed by the decomposition tooling and external plotting.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .cubes
            .iter()
            .map(|c| {
                let d = c.cube.dyadic.expect("whitney cubes carry addresses");
                serde_json::json!({
                    "level": d.level,
                    "index": d.index[..self.grid.n],
                    "center": c.cube.center[..self.grid.n],
                    "side": c.cube.side,
                    "dist_to_complement": c.dist,
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "window": self.window,
            "a": self.a,
            "b": self.b,
            "overlap": self.overlap,
            "cubes": rows,
        }))
        .expect("cover serializes")
    }
}

pub fn whitney_decompose(open: &OpenSet) -> Result<WhitneyCover> {
    whitney_decompose_with(open, WhitneyWindow::classic(open.grid.n))
}

pub fn whitney_decompose_with(open: &OpenSet, window: WhitneyWindow) -> Result<WhitneyCover> {
    let grid = open.grid;
    if open.cell_count() == 0 {
        return Err(Error::InvalidParam("cannot decompose an empty set".into()));
    }
    if open.is_whole_domain() {
        return Err(Error::InvalidParam("cannot decompose the whole domain".into()));
    }
    let m = grid.m;
    let h = grid.h();
    let sqrt_n = (grid.n as f64).sqrt();

    let mut cubes: Vec<WhitneyCube> = Vec::new();
    let top_level = {
        let mut l = 0u32;
        while (1usize << l) < m {
            l += 1;
        }
        l
    };

    // depth-first from the top; a cube qualifies when it lies in the set and
    // clears the lower window bound, and is emitted when its parent did not
    // qualify (the parent's failure is what forces the upper bound)
    let mut stack: Vec<(u32, usize, usize)> = Vec::new();
    let push_children = |stack: &mut Vec<(u32, usize, usize)>, level: u32, lx: usize, ly: usize| {
        let half = 1usize << (level - 1);
        match grid.n {
            1 => {
                stack.push((level - 1, lx, 0));
                stack.push((level - 1, lx + half, 0));
            }
            _ => {
                for dy in [0usize, half] {
                    for dx in [0usize, half] {
                        stack.push((level - 1, lx + dx, ly + dy));
                    }
                }
            }
        }
    };
    stack.push((top_level, 0, 0));
    while let Some((level, lx, ly)) = stack.pop() {
        let s = 1usize << level;
        if lx >= m || (grid.n == 2 && ly >= m) {
            continue;
        }
        let fits = lx + s <= m && (grid.n == 1 || ly + s <= m);
        let q = GridCube { lo: [lx, ly], cells: s };
        let (in_set, dist) = if fits { cube_status(open, &q) } else { (false, 0.0) };
        let diam = s as f64 * h * sqrt_n;
        if fits && in_set && window.low * diam <= dist {
            let mut cube = q.to_cube(&grid);
            cube.dyadic = Some(DyadicAddress { level, index: [lx as i64, ly as i64] });
            cubes.push(WhitneyCube { cells: q, cube, dist });
        } else if level > 0 && (!fits || intersects_set(open, &q)) {
            push_children(&mut stack, level, lx, ly);
        }
    }

    // hard verification: window on every cube, disjointness, exact coverage
    for c in &cubes {
        let diam = c.cube.side * sqrt_n;
        if !(window.low * diam <= c.dist && c.dist <= window.high * diam * (1.0 + 1e-12)) {
            return Err(Error::Internal(format!(
                "whitney window violated: side {}, dist {}, window ({}, {})",
                c.cube.side, c.dist, window.low, window.high
            )));
        }
    }
    let mut owner = vec![usize::MAX; grid.len()];
    for (k, c) in cubes.iter().enumerate() {
        for idx in cube_cells(&grid, &c.cells) {
            if !open.inside[idx] {
                return Err(Error::Internal("whitney cube leaks outside the set".into()));
            }
            if owner[idx] != usize::MAX {
                return Err(Error::Internal("whitney cubes overlap".into()));
            }
            owner[idx] = k;
        }
    }
    if window.low <= 1.0 / sqrt_n + 1e-12 {
        for idx in grid.indices() {
            if open.inside[idx] && owner[idx] == usize::MAX {
                return Err(Error::Internal(format!("cell {idx} of the set left uncovered")));
            }
        }
    }

    let n_dim = grid.n as i32;
    let a = 1.0 + 2f64.powi(-(11 + n_dim));
    let b = 1.0 + 2f64.powi(-(10 + n_dim));

    // measured overlap of the Q_star family
    let mut overlap = 0usize;
    let mut counts = vec![0u32; grid.len()];
    for c in &cubes {
        let star = c.cube.dilate(b);
        for idx in cells_in_cube(&grid, &star) {
            counts[idx] += 1;
            overlap = overlap.max(counts[idx] as usize);
        }
    }

    // deterministic order: by level then position
    cubes.sort_by_key(|c| {
        let d = c.cube.dyadic.unwrap();
        (d.level, d.index[1], d.index[0])
    });

    Ok(WhitneyCover { grid, cubes, window, a, b, overlap })
}

fn cube_status(open: &OpenSet, q: &GridCube) -> (bool, f64) {
    let mut dist = f64::INFINITY;
    for idx in cube_cells(&open.grid, q) {
        if !open.inside[idx] {
            return (false, 0.0);
        }
        dist = dist.min(open.dist[idx]);
    }
    (true, dist)
}

fn intersects_set(open: &OpenSet, q: &GridCube) -> bool {
    let m = open.grid.m;
    let x_hi = (q.lo[0] + q.cells).min(m);
    let y_hi = if open.grid.n == 2 { (q.lo[1] + q.cells).min(m) } else { 1 };
    match open.grid.n {
        1 => (q.lo[0]..x_hi).any(|i| open.inside[i]),
        _ => (q.lo[1]..y_hi).any(|iy| (q.lo[0]..x_hi).any(|ix| open.inside[open.grid.flat(ix, iy)])),
    }
}

fn cube_cells(grid: &Grid, q: &GridCube) -> Vec<usize> {
    match grid.n {
        1 => (q.lo[0]..q.lo[0] + q.cells).collect(),
        _ => {
            let mut v = Vec::with_capacity(q.cells * q.cells);
            for iy in q.lo[1]..q.lo[1] + q.cells {
                for ix in q.lo[0]..q.lo[0] + q.cells {
                    v.push(grid.flat(ix, iy));
                }
            }
            v
        }
    }
}

/// Flat indices of cells whose centers lie in the closed geometric cube.
pub fn cells_in_cube(grid: &Grid, cube: &Cube) -> Vec<usize> {
    let (x_lo, x_hi) = crate::grid::axis_cell_range(grid, cube.center[0], cube.side);
    match grid.n {
        1 => (x_lo..x_hi).collect(),
        _ => {
            let (y_lo, y_hi) = crate::grid::axis_cell_range(grid, cube.center[1], cube.side);
            let mut v = Vec::new();
            for iy in y_lo..y_hi {
                for ix in x_lo..x_hi {
                    v.push(grid.flat(ix, iy));
                }
            }
            v
        }
    }
}

// ---------------------------------------------------------------------------
// Partition of unity
// ---------------------------------------------------------------------------

/// `C^inf` transition: 0 for u <= 0, 1 for u >= 1.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let e = (-1.0 / u).exp();
        let e1 = (-1.0 / (1.0 - u)).exp();
        e / (e + e1)
    }
}

/// Bump profile in cube coordinates: 1 on the closed unit cube (sup-norm
/// radius 1/2), 0 outside the `a`-dilate, smooth in between.
pub fn xi_profile(v_sup_norm: f64, a: f64) -> f64 {
    let shell = 0.5 * (a - 1.0);
    smooth_step((0.5 * a - v_sup_norm) / shell)
}

/// Sparse real field over a cell box.
#[derive(Debug, Clone)]
pub struct SparseField {
    pub lo: [usize; 2],
    pub size: [usize; 2],
    pub values: Vec<f64>,
}

impl SparseField {
    pub fn get(&self, grid: &Grid, idx: usize) -> f64 {
        let (ix, iy) = match grid.n {
            1 => (idx, 0),
            _ => (idx % grid.m, idx / grid.m),
        };
        if ix < self.lo[0] || ix >= self.lo[0] + self.size[0] {
            return 0.0;
        }
        if iy < self.lo[1] || iy >= self.lo[1] + self.size[1] {
            return 0.0;
        }
        self.values[(iy - self.lo[1]) * self.size[0] + (ix - self.lo[0])]
    }

    pub fn cells<'a>(&'a self, grid: &'a Grid) -> impl Iterator<Item = (usize, f64)> + 'a {
        let m = grid.m;
        let lo = self.lo;
        let size = self.size;
        let n = grid.n;
        self.values.iter().enumerate().map(move |(k, &v)| {
            let ix = lo[0] + k % size[0];
            let iy = lo[1] + k / size[0];
            let idx = if n == 1 { ix } else { iy * m + ix };
            (idx, v)
        })
    }
}

/// Partition of unity subordinate to the cover dilates: `eta_k = xi_k / sum_j xi_j`,
/// with `sum_k eta_k = 1` on the set and 0 off it.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub grid: Grid,
    pub a: f64,
    /// `sum_j xi_j` at cell centers.
    pub xi_sum: Vec<f64>,
    pub etas: Vec<SparseField>,
    /// Cube centers and sides, mirrored from the cover for closed-form use.
    pub cubes: Vec<Cube>,
}

pub fn partition_of_unity(cover: &WhitneyCover, open: &OpenSet) -> Result<PartitionOfUnity> {
    let grid = cover.grid;
    let a = cover.a;
    let mut xi_fields: Vec<SparseField> = Vec::with_capacity(cover.cubes.len());
    let mut xi_sum = vec![0.0f64; grid.len()];
    for c in &cover.cubes {
        let support = c.cube.dilate(a);
        let (x_lo, x_hi) = crate::grid::axis_cell_range(&grid, support.center[0], support.side);
        let (y_lo, y_hi) = match grid.n {
            1 => (0, 1),
            _ => crate::grid::axis_cell_range(&grid, support.center[1], support.side),
        };
        let size = [x_hi - x_lo, y_hi - y_lo];
        let mut values = Vec::with_capacity(size[0] * size[1]);
        for iy in y_lo..y_hi {
            for ix in x_lo..x_hi {
                let idx = if grid.n == 1 { ix } else { grid.flat(ix, iy) };
                let p = grid.coord(idx);
                let v_sup = (0..grid.n)
                    .map(|d| (p[d] - c.cube.center[d]).abs() / c.cube.side)
                    .fold(0.0f64, f64::max);
                let xi = xi_profile(v_sup, a);
                if xi > 0.0 && !open.inside[idx] {
                    return Err(Error::Internal(
                        "partition bump leaks outside the open set".into(),
                    ));
                }
                values.push(xi);
                xi_sum[idx] += xi;
            }
        }
        xi_fields.push(SparseField { lo: [x_lo, y_lo], size, values });
    }

    for idx in grid.indices() {
        if open.inside[idx] && xi_sum[idx] < 1.0 - 1e-12 {
            return Err(Error::Internal(format!(
                "sum of bumps is {} < 1 inside the set at cell {idx}",
                xi_sum[idx]
            )));
        }
    }

    let etas = xi_fields
        .into_iter()
        .map(|f| {
            let mut values = f.values;
            for (k, v) in values.iter_mut().enumerate() {
                if *v != 0.0 {
                    let ix = f.lo[0] + k % f.size[0];
                    let iy = f.lo[1] + k / f.size[0];
                    let idx = if grid.n == 1 { ix } else { grid.flat(ix, iy) };
                    *v /= xi_sum[idx];
                }
            }
            SparseField { lo: f.lo, size: f.size, values }
        })
        .collect();

    Ok(PartitionOfUnity {
        grid,
        a,
        xi_sum,
        etas,
        cubes: cover.cubes.iter().map(|c| c.cube.clone()).collect(),
    })
}

impl PartitionOfUnity {
    /// Closed-form `eta_k` at an arbitrary point (not just cell centers);
    /// the denominator runs over all cubes whose dilate reaches the point.
    pub fn eta_at(&self, k: usize, x: &[f64; 2]) -> f64 {
        let xi = |c: &Cube| -> f64 {
            let v_sup = (0..self.grid.n)
                .map(|d| (x[d] - c.center[d]).abs() / c.side)
                .fold(0.0f64, f64::max);
            xi_profile(v_sup, self.a)
        };
        let num = xi(&self.cubes[k]);
        if num == 0.0 {
            return 0.0;
        }
        let mut den = 0.0;
        for c in &self.cubes {
            den += xi(c);
        }
        num / den
    }

    /// Quadrature mass of `eta_k`.
    pub fn eta_mass(&self, k: usize) -> f64 {
        self.etas[k].values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}
