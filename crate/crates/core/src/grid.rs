//! Uniform cell-centered grids over `[-L, L]^n` (n = 1 or 2), axis-parallel
//! cubes, midpoint quadrature and weighted Lebesgue norms.
//!
//! Every other module stands on this one. Sample points are cell centers,
//! `x_j = -L + (j + 1/2) h` per axis with `h = 2L/m`, so a symmetric grid
//! never places a sample on a coordinate axis and singular weights like
//! `|x|^g` stay finite at all samples.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::Weight;

/// Uniform grid on `[-L, L]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Dimension, 1 or 2.
    pub n: usize,
    /// Half-width of the box; the domain is `[-L, L]^n`.
    pub half_width: f64,
    /// Samples per axis.
    pub m: usize,
}

impl Grid {
    pub fn new(n: usize, half_width: f64, m: usize) -> Result<Grid> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidGrid(format!("dimension {n} not in {{1,2}}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half_width {half_width} <= 0")));
        }
        if m < 8 {
            return Err(Error::InvalidGrid(format!("m = {m} < 8")));
        }
        Ok(Grid { n, half_width, m })
    }

    /// Grid spacing `h = 2L/m`.
    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.m as f64
    }

    /// Total number of samples, `m^n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^n`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.n as i32)
    }

    /// Center coordinate of cell `i` along one axis.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h()
    }

    /// Coordinates of the sample with flat index `idx` (row-major for n = 2).
    #[inline]
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        match self.n {
            1 => [self.axis_coord(idx), 0.0],
            _ => [self.axis_coord(idx % self.m), self.axis_coord(idx / self.m)],
        }
    }

    #[inline]
    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(self.n == 2 || iy == 0);
        iy * self.m + ix
    }

    /// Iterator over all flat indices.
    pub fn indices(&self) -> impl Iterator<Item = usize> {
        0..self.len()
    }
}

/// Axis-parallel cube given by center and sidelength, with an optional
/// dyadic address when it came out of a Whitney decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: [f64; 2],
    pub side: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dyadic: Option<DyadicAddress>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicAddress {
    pub level: u32,
    pub index: [i64; 2],
}

impl Cube {
    pub fn new(center: [f64; 2], side: f64) -> Cube {
        Cube { center, side, dyadic: None }
    }

    /// The `lambda`-dilate: same center, sidelength `lambda * side`.
    pub fn dilate(&self, lambda: f64) -> Cube {
        Cube { center: self.center, side: lambda * self.side, dyadic: None }
    }

    /// Volume `side^n`.
    pub fn volume(&self, n: usize) -> f64 {
        self.side.powi(n as i32)
    }

    /// Whether a point lies in the closed cube (sup-norm test).
    pub fn contains(&self, x: &[f64; 2], n: usize) -> bool {
        let half = 0.5 * self.side;
        (0..n).all(|d| (x[d] - self.center[d]).abs() <= half + 1e-12 * self.side.max(1.0))
    }
}

/// Complex- or real-valued function sampled at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    /// When set, imaginary parts are exactly zero.
    pub real: bool,
}

impl SampledFunction {
    pub fn zeros(grid: Grid) -> SampledFunction {
        SampledFunction { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()], real: true }
    }

    pub fn from_real_fn<F: Fn(&[f64; 2]) -> f64>(grid: Grid, f: F) -> SampledFunction {
        let values = grid
            .indices()
            .map(|i| Complex64::new(f(&grid.coord(i)), 0.0))
            .collect();
        SampledFunction { grid, values, real: true }
    }

    pub fn from_complex_fn<F: Fn(&[f64; 2]) -> Complex64>(grid: Grid, f: F) -> SampledFunction {
        let values = grid.indices().map(|i| f(&grid.coord(i))).collect();
        SampledFunction { grid, values, real: false }
    }

    pub fn from_real_values(grid: Grid, vals: Vec<f64>) -> Result<SampledFunction> {
        if vals.len() != grid.len() {
            return Err(Error::InvalidParam(format!(
                "value count {} != grid size {}",
                vals.len(),
                grid.len()
            )));
        }
        Ok(SampledFunction {
            grid,
            values: vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            real: true,
        })
    }

    /// Checks the finite-values invariant; call after constructing from data.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite(format!("sample {i}")));
            }
            if self.real && v.im != 0.0 {
                return Err(Error::InvalidParam(format!(
                    "real-flagged function has imaginary part at sample {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Midpoint quadrature over the whole domain.
    pub fn integrate(&self) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for v in &self.values {
            s += v;
        }
        s * self.grid.cell_volume()
    }

    /// Midpoint quadrature over a cube, clipped at the domain boundary.
    ///
    /// A cell contributes its full weight `h^n` when its center lies in the
    /// closed cube. Returns the value together with the number of
    /// contributing cells; zero cells means the intersection was empty.
    pub fn integrate_over(&self, cube: &Cube) -> (Complex64, usize) {
        let g = &self.grid;
        let mut s = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        match g.n {
            1 => {
                let (lo, hi) = axis_cell_range(g, cube.center[0], cube.side);
                for i in lo..hi {
                    s += self.values[i];
                    count += 1;
                }
            }
            _ => {
                let (x_lo, x_hi) = axis_cell_range(g, cube.center[0], cube.side);
                let (y_lo, y_hi) = axis_cell_range(g, cube.center[1], cube.side);
                for iy in y_lo..y_hi {
                    for ix in x_lo..x_hi {
                        s += self.values[g.flat(ix, iy)];
                        count += 1;
                    }
                }
            }
        }
        (s * g.cell_volume(), count)
    }

    /// Pointwise linear combination `alpha * self + beta * other`.
    pub fn axpy(&self, alpha: Complex64, other: &SampledFunction, beta: Complex64) -> SampledFunction {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        SampledFunction { grid: self.grid, values, real: false }
    }

    pub fn scale(&self, c: f64) -> SampledFunction {
        SampledFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            real: self.real,
        }
    }
}

/// Cells along one axis whose centers lie in `[center - side/2, center + side/2]`.
pub fn axis_cell_range(grid: &Grid, center: f64, side: f64) -> (usize, usize) {
    let h = grid.h();
    let lo_coord = center - 0.5 * side;
    let hi_coord = center + 0.5 * side;
    // cell i has center -L + (i + 1/2) h; solve with a small tolerance so
    // cubes whose faces coincide with cell centers include them.
    let eps = 1e-9 * h;
    let lo = ((lo_coord + grid.half_width) / h - 0.5 - eps).ceil().max(0.0) as usize;
    let hi_f = ((hi_coord + grid.half_width) / h - 0.5 + eps).floor();
    if hi_f < 0.0 {
        return (0, 0);
    }
    let hi = (hi_f as usize + 1).min(grid.m);
    let lo = lo.min(grid.m);
    (lo, hi.max(lo))
}

/// Weighted L^p quasi-norm `(sum |f|^p w h^n)^{1/p}`; `p = inf` gives the
/// plain sup norm (the weighted L^inf space carries the unweighted norm).
pub fn weighted_lp_norm(f: &SampledFunction, weight: &Weight, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParam(format!("p = {p} must be positive")));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let w = weight.values();
    assert_eq!(w.len(), f.values.len(), "weight sampled on a different grid");
    let mut s = 0.0f64;
    for (v, wi) in f.values.iter().zip(w) {
        s += v.norm().powf(p) * wi;
    }
    Ok((s * f.grid.cell_volume()).powf(1.0 / p))
}

/// Unweighted L^p norm, a convenience wrapper used by the operator harnesses.
pub fn lp_norm(f: &SampledFunction, p: f64) -> f64 {
    if p.is_infinite() {
        return f.sup_norm();
    }
    let mut s = 0.0f64;
    for v in &f.values {
        s += v.norm().powf(p);
    }
    (s * f.grid.cell_volume()).powf(1.0 / p)
}

// ---------------------------------------------------------------------------
// Serialization: CSV (coordinates..., re, im) and compact JSON.
// ---------------------------------------------------------------------------

pub fn to_csv(f: &SampledFunction) -> String {
    let g = &f.grid;
    let mut out = String::new();
    match g.n {
        1 => out.push_str("x,re,im\n"),
        _ => out.push_str("x,y,re,im\n"),
    }
    for i in g.indices() {
        let c = g.coord(i);
        let v = f.values[i];
        match g.n {
            1 => out.push_str(&format!("{},{},{}\n", c[0], v.re, v.im)),
            _ => out.push_str(&format!("{},{},{},{}\n", c[0], c[1], v.re, v.im)),
        }
    }
    out
}

/// Parses the CSV form back onto the given grid; coordinates must match
/// the grid's cell centers in row-major order.
pub fn from_csv(grid: Grid, text: &str) -> Result<SampledFunction> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Serde("empty csv".into()))?;
    let expected_header = if grid.n == 1 { "x,re,im" } else { "x,y,re,im" };
    if header != expected_header {
        return Err(Error::Serde(format!("csv header `{header}`, expected `{expected_header}`")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != grid.n + 2 {
            return Err(Error::Serde(format!("row {i}: {} columns", cols.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Serde(format!("row {i}: bad number `{s}`")))
        };
        if i >= grid.len() {
            return Err(Error::Serde("more rows than grid cells".into()));
        }
        let c = grid.coord(i);
        for d in 0..grid.n {
            let got = num(cols[d])?;
            if (got - c[d]).abs() > 1e-9 * grid.h() {
                return Err(Error::Serde(format!(
                    "row {i}: coordinate {got} does not match the grid ({})",
                    c[d]
                )));
            }
        }
        values.push(Complex64::new(num(cols[grid.n])?, num(cols[grid.n + 1])?));
    }
    if values.len() != grid.len() {
        return Err(Error::Serde(format!("{} rows for {} cells", values.len(), grid.len())));
    }
    let f = SampledFunction { grid, values, real: false };
    f.validate()?;
    Ok(f)
}

#[derive(Serialize, Deserialize)]
struct JsonFunction {
    grid: Grid,
    real: bool,
    /// Interleaved re, im pairs.
    values: Vec<f64>,
}

pub fn to_json(f: &SampledFunction) -> String {
    let flat: Vec<f64> = f.values.iter().flat_map(|v| [v.re, v.im]).collect();
    serde_json::to_string(&JsonFunction { grid: f.grid, real: f.real, values: flat }).unwrap()
}

pub fn from_json(s: &str) -> Result<SampledFunction> {
    let j: JsonFunction = serde_json::from_str(s)?;
    if j.values.len() != 2 * j.grid.len() {
        return Err(Error::Serde(format!(
            "expected {} interleaved values, got {}",
            2 * j.grid.len(),
            j.values.len()
        )));
    }
    let values = j
        .values
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    let f = SampledFunction { grid: j.grid, values, real: j.real };
    f.validate()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Weight;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_layout_1d() {
        let g = Grid::new(1, 8.0, 16).unwrap();
        assert_eq!(g.h(), 1.0);
        assert_eq!(g.len(), 16);
        assert_eq!(g.axis_coord(0), -7.5);
        assert_eq!(g.axis_coord(15), 7.5);
    }

    #[test]
    fn grid_layout_2d() {
        let g = Grid::new(2, 4.0, 64).unwrap();
        assert_eq!(g.h(), 0.125);
        assert_eq!(g.len(), 4096);
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(Grid::new(3, 4.0, 64).is_err());
        assert!(Grid::new(1, 4.0, 4).is_err());
        assert!(Grid::new(1, 0.0, 64).is_err());
        assert!(Grid::new(1, -1.0, 64).is_err());
    }

    #[test]
    fn integrate_constant_and_odd() {
        let g = Grid::new(1, 8.0, 256).unwrap();
        let one = SampledFunction::from_real_fn(g, |_| 1.0);
        assert_relative_eq!(one.integrate().re, 16.0, epsilon = 1e-12);
        let odd = SampledFunction::from_real_fn(g, |x| x[0]);
        assert!(odd.integrate().norm() < 1e-12);
    }

    #[test]
    fn integrate_square_against_analytic_oracle() {
        // analytic: int_{-1}^{1} x^2 dx = 2/3
        let g = Grid::new(1, 1.0, 1 << 12).unwrap();
        let f = SampledFunction::from_real_fn(g, |x| x[0] * x[0]);
        assert_relative_eq!(f.integrate().re, 2.0 / 3.0, epsilon = 1e-5);
    }

    #[test]
    fn integrate_over_cube_counts_cells() {
        let g = Grid::new(1, 2.0, 64).unwrap();
        let f = SampledFunction::from_real_fn(g, |_| 1.0);
        let q = Cube::new([0.5, 0.0], 1.0);
        let (v, count) = f.integrate_over(&q);
        assert_eq!(count, 16);
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-12);
        // empty intersection
        let far = Cube::new([10.0, 0.0], 0.5);
        let (v, count) = f.integrate_over(&far);
        assert_eq!(count, 0);
        assert_eq!(v.re, 0.0);
    }

    #[test]
    fn refinement_is_second_order() {
        let coarse = Grid::new(1, 2.0, 1 << 8).unwrap();
        let mid = Grid::new(1, 2.0, 1 << 9).unwrap();
        let fine = Grid::new(1, 2.0, 1 << 10).unwrap();
        let smooth = |x: &[f64; 2]| (x[0] * 1.3).cos() + 0.2 * x[0];
        let i0 = SampledFunction::from_real_fn(coarse, smooth).integrate().re;
        let i1 = SampledFunction::from_real_fn(mid, smooth).integrate().re;
        let i2 = SampledFunction::from_real_fn(fine, smooth).integrate().re;
        let d01 = (i0 - i1).abs();
        let d12 = (i1 - i2).abs();
        // midpoint rule halves the error by ~4x per refinement
        assert!(d12 < d01 / 3.0, "d01 = {d01:.3e}, d12 = {d12:.3e}");
    }

    #[test]
    fn weighted_norm_examples() {
        let g = Grid::new(1, 1.0, 1 << 10).unwrap();
        let one = SampledFunction::from_real_fn(g, |_| 1.0);
        let w = Weight::constant(g, 1.0);
        assert_relative_eq!(
            weighted_lp_norm(&one, &w, 2.0).unwrap(),
            2.0f64.sqrt(),
            epsilon = 1e-10
        );
        assert_eq!(weighted_lp_norm(&one, &w, f64::INFINITY).unwrap(), 1.0);
        assert!(weighted_lp_norm(&one, &w, 0.0).is_err());
        assert!(weighted_lp_norm(&one, &w, -1.0).is_err());
    }

    #[test]
    fn weighted_norm_indicator_exponential_weight() {
        // int_0^1 e^x dx = e - 1
        let g = Grid::new(1, 2.0, 1 << 12).unwrap();
        let f = SampledFunction::from_real_fn(g, |x| if x[0] >= 0.0 && x[0] <= 1.0 { 1.0 } else { 0.0 });
        let w = Weight::exponential(g, 1.0);
        let norm = weighted_lp_norm(&f, &w, 1.0).unwrap();
        assert_relative_eq!(norm, std::f64::consts::E - 1.0, epsilon = 1e-3);
    }

    #[test]
    fn json_round_trip() {
        let g = Grid::new(1, 2.0, 32).unwrap();
        let f = SampledFunction::from_complex_fn(g, |x| Complex64::new(x[0], -x[0] * 0.5));
        let back = from_json(&to_json(&f)).unwrap();
        assert_eq!(f.values, back.values);
        assert_eq!(f.grid, back.grid);
    }

    #[test]
    fn csv_has_expected_shape() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        let f = SampledFunction::from_real_fn(g, |x| x[0] + x[1]);
        let csv = to_csv(&f);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x,y,re,im");
        assert_eq!(csv.lines().count(), 1 + 64);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::new(1, 2.0, 32).unwrap();
        let f = SampledFunction::from_complex_fn(g, |x| Complex64::new((x[0] * 3.0).sin(), x[0]));
        let back = from_csv(g, &to_csv(&f)).unwrap();
        assert_eq!(f.values, back.values);
        // wrong grid is rejected
        let other = Grid::new(1, 4.0, 32).unwrap();
        assert!(from_csv(other, &to_csv(&f)).is_err());
    }

    proptest! {
        #[test]
        fn quadrature_linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 1usize..5) {
            let g = Grid::new(1, 2.0, 64).unwrap();
            let f = SampledFunction::from_real_fn(g, |x| (x[0] * k as f64).sin());
            let h = SampledFunction::from_real_fn(g, |x| x[0] * x[0]);
            let lhs = f.axpy(Complex64::new(a, 0.0), &h, Complex64::new(b, 0.0)).integrate();
            let rhs = f.integrate() * a + h.integrate() * b;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn norm_homogeneity(c in -4.0f64..4.0) {
            let g = Grid::new(1, 2.0, 64).unwrap();
            let f = SampledFunction::from_real_fn(g, |x| (1.0 - x[0].abs()).max(0.0));
            let w = Weight::exponential(g, 0.5);
            for &p in &[0.5, 1.0, 2.0, f64::INFINITY] {
                let base = weighted_lp_norm(&f, &w, p).unwrap();
                let scaled = weighted_lp_norm(&f.scale(c), &w, p).unwrap();
                prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * (1.0 + base));
            }
        }
    }
}
