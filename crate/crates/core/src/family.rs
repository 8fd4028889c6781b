//! Grid-aligned cube families and the canonical per-cube arithmetic shared
//! by the sup-sweeps (local A_p constants, BMO oscillation, local maximal).
//!
//! A grid cube is a union of whole cells: anchor cell per axis plus a cell
//! count per side. Sweeps accumulate cell values strictly left-to-right
//! (row-major for n = 2), which keeps a fast anchored sweep bit-identical
//! to the naive one-cube-at-a-time loop over the same family.

use crate::grid::{Cube, Grid};

/// Cell-aligned cube: anchor cell indices and cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCube {
    pub lo: [usize; 2],
    pub cells: usize,
}

impl GridCube {
    pub fn to_cube(&self, grid: &Grid) -> Cube {
        let h = grid.h();
        let side = self.cells as f64 * h;
        let center = |lo: usize| -grid.half_width + (lo as f64 + self.cells as f64 / 2.0) * h;
        match grid.n {
            1 => Cube::new([center(self.lo[0]), 0.0], side),
            _ => Cube::new([center(self.lo[0]), center(self.lo[1])], side),
        }
    }

    pub fn side(&self, grid: &Grid) -> f64 {
        self.cells as f64 * grid.h()
    }

    pub fn volume(&self, grid: &Grid) -> f64 {
        self.side(grid).powi(grid.n as i32)
    }
}

/// Which sidelengths a sweep enumerates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideSet {
    /// Every integer cell count up to the bound.
    All,
    /// Powers of two only; used for n = 2 to bound cost.
    Dyadic,
}

/// Cube family description carried into reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeFamily {
    pub sides: SideSet,
    /// Volume cap `|Q| <= cap`; `None` is the uncapped (global) family.
    pub volume_cap: Option<f64>,
    /// Strict cap `|Q| < cap` instead of `<=` (the local maximal uses `< 1`).
    pub strict: bool,
}

impl CubeFamily {
    pub fn local(cap: f64, grid: &Grid) -> CubeFamily {
        CubeFamily { sides: default_side_set(grid), volume_cap: Some(cap), strict: false }
    }

    pub fn local_strict(cap: f64, grid: &Grid) -> CubeFamily {
        CubeFamily { sides: default_side_set(grid), volume_cap: Some(cap), strict: true }
    }

    pub fn global(grid: &Grid) -> CubeFamily {
        CubeFamily { sides: default_side_set(grid), volume_cap: None, strict: false }
    }

    /// Admissible cell counts per side, smallest first.
    pub fn side_counts(&self, grid: &Grid) -> Vec<usize> {
        let h = grid.h();
        let n = grid.n as i32;
        let admit = |s: usize| -> bool {
            match self.volume_cap {
                None => true,
                Some(cap) => {
                    let vol = (s as f64 * h).powi(n);
                    if self.strict {
                        vol < cap
                    } else {
                        vol <= cap * (1.0 + 1e-12)
                    }
                }
            }
        };
        let mut out = Vec::new();
        match self.sides {
            SideSet::All => {
                for s in 1..=grid.m {
                    if admit(s) {
                        out.push(s);
                    } else {
                        break;
                    }
                }
            }
            SideSet::Dyadic => {
                let mut s = 1usize;
                while s <= grid.m {
                    if admit(s) {
                        out.push(s);
                    } else {
                        break;
                    }
                    s *= 2;
                }
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        let sides = match self.sides {
            SideSet::All => "all-sides",
            SideSet::Dyadic => "dyadic-sides",
        };
        match self.volume_cap {
            Some(c) if self.strict => format!("{sides}, |Q| < {c}"),
            Some(c) => format!("{sides}, |Q| <= {c}"),
            None => format!("{sides}, uncapped"),
        }
    }
}

pub fn default_side_set(grid: &Grid) -> SideSet {
    if grid.n == 1 {
        SideSet::All
    } else {
        SideSet::Dyadic
    }
}

/// Visits every cube of the family as `(GridCube, fresh row-major cell sums)`
/// is too expensive to materialize; instead callers get the anchor loop and
/// do their own accumulation. This helper just enumerates anchors.
pub fn anchors(grid: &Grid, cells: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    if cells > grid.m {
        return out;
    }
    match grid.n {
        1 => {
            for lo in 0..=(grid.m - cells) {
                out.push([lo, 0]);
            }
        }
        _ => {
            for ly in 0..=(grid.m - cells) {
                for lx in 0..=(grid.m - cells) {
                    out.push([lx, ly]);
                }
            }
        }
    }
    out
}

/// Fresh row-major sum over the cube's cells; the canonical cube sum.
pub fn cube_sum(grid: &Grid, vals: &[f64], q: &GridCube) -> f64 {
    let mut acc = 0.0f64;
    match grid.n {
        1 => {
            for i in q.lo[0]..q.lo[0] + q.cells {
                acc += vals[i];
            }
        }
        _ => {
            for iy in q.lo[1]..q.lo[1] + q.cells {
                for ix in q.lo[0]..q.lo[0] + q.cells {
                    acc += vals[grid.flat(ix, iy)];
                }
            }
        }
    }
    acc
}

/// Fresh row-major minimum over the cube's cells.
pub fn cube_min(grid: &Grid, vals: &[f64], q: &GridCube) -> f64 {
    let mut acc = f64::INFINITY;
    match grid.n {
        1 => {
            for i in q.lo[0]..q.lo[0] + q.cells {
                acc = acc.min(vals[i]);
            }
        }
        _ => {
            for iy in q.lo[1]..q.lo[1] + q.cells {
                for ix in q.lo[0]..q.lo[0] + q.cells {
                    acc = acc.min(vals[grid.flat(ix, iy)]);
                }
            }
        }
    }
    acc
}

/// Cell mean from a cube sum: `(sum h^n) / |Q| = sum / s^n`.
#[inline]
pub fn cell_mean(sum: f64, cells: usize, n: usize) -> f64 {
    sum / (cells.pow(n as u32) as f64)
}

/// Sliding-window maximum of `width` consecutive entries; `out[i]` is the
/// max of `vals[i ..= i + width - 1]`. Standard monotonic deque.
pub fn sliding_max(vals: &[f64], width: usize) -> Vec<f64> {
    assert!(width >= 1 && width <= vals.len());
    let mut out = Vec::with_capacity(vals.len() - width + 1);
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for i in 0..vals.len() {
        while let Some(&back) = deque.back() {
            if vals[back] <= vals[i] {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(i);
        if let Some(&front) = deque.front() {
            if front + width == i {
                deque.pop_front();
            }
        }
        if i + 1 >= width {
            out.push(vals[*deque.front().unwrap()]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_counts_respect_caps() {
        let g = Grid::new(1, 8.0, 64).unwrap(); // h = 0.25
        let fam = CubeFamily::local(1.0, &g);
        assert_eq!(fam.side_counts(&g), vec![1, 2, 3, 4]); // 4 * 0.25 = 1.0 included
        let strict = CubeFamily::local_strict(1.0, &g);
        assert_eq!(strict.side_counts(&g), vec![1, 2, 3]);
        let global = CubeFamily::global(&g);
        assert_eq!(global.side_counts(&g).len(), 64);
    }

    #[test]
    fn dyadic_sides_for_2d() {
        let g = Grid::new(2, 4.0, 32).unwrap(); // h = 0.25
        let fam = CubeFamily::local(1.0, &g);
        assert_eq!(fam.side_counts(&g), vec![1, 2, 4]); // (4*0.25)^2 = 1.0
    }

    #[test]
    fn grid_cube_geometry() {
        let g = Grid::new(1, 2.0, 16).unwrap(); // h = 0.25
        let q = GridCube { lo: [4, 0], cells: 8 };
        let c = q.to_cube(&g);
        assert_eq!(c.side, 2.0);
        assert_eq!(c.center[0], 0.0);
    }

    #[test]
    fn sliding_max_matches_naive() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        for w in 1..=v.len() {
            let fast = sliding_max(&v, w);
            for (i, &got) in fast.iter().enumerate() {
                let want = v[i..i + w].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(got, want);
            }
        }
    }
}
