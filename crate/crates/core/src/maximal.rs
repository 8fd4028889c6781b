//! The local Hardy-Littlewood maximal operator and grand maximal functions
//! over a finite dictionary of smooth compactly supported test functions.
//!
//! The sup over the full normalized test-function class is replaced by a
//! finite dictionary (members x dyadic scales). Any single non-degenerate
//! mollifier already gives an equivalent quasi-norm, so dictionary size
//! trades constant sharpness for cost; the default is 4 members x 6 scales.
//!
//! Test-function profiles are built from the standard bump
//! `psi(u) = exp(-1/(1 - u^2))` on `|u| < 1`. Derivatives of the profiles
//! are evaluated exactly (truncated Taylor arithmetic), so the dictionary
//! normalization `sup |D^a phi| <= 1` up to order `N + 1` is reproducible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::sliding_max;
use crate::grid::{weighted_lp_norm, SampledFunction};
use crate::weights::{HardyParams, Weight};

// ---------------------------------------------------------------------------
// Exact bump derivatives via truncated Taylor series
// ---------------------------------------------------------------------------

/// Taylor coefficients of `psi(center + t)` up to order `k_max`,
/// `psi(u) = exp(-1/(1-u^2))` inside the unit interval, zero outside.
fn bump_taylor(center: f64, k_max: usize) -> Vec<f64> {
    let k = k_max + 1;
    if center.abs() >= 1.0 {
        return vec![0.0; k];
    }
    // q(t) = 1 - (center + t)^2
    let mut q = vec![0.0; k];
    q[0] = 1.0 - center * center;
    if k > 1 {
        q[1] = -2.0 * center;
    }
    if k > 2 {
        q[2] = -1.0;
    }
    // r = -1/q by series reciprocal
    let mut inv = vec![0.0; k];
    inv[0] = 1.0 / q[0];
    for j in 1..k {
        let mut acc = 0.0;
        for i in 1..=j {
            acc += q[i] * inv[j - i];
        }
        inv[j] = -acc / q[0];
    }
    let r: Vec<f64> = inv.iter().map(|v| -v).collect();
    // e = exp(r): e' = e r'  =>  j e_j = sum_{i=1}^{j} i r_i e_{j-i}
    let mut e = vec![0.0; k];
    e[0] = r[0].exp();
    for j in 1..k {
        let mut acc = 0.0;
        for i in 1..=j {
            acc += i as f64 * r[i] * e[j - i];
        }
        e[j] = acc / j as f64;
    }
    e
}

/// `psi^{(j)}(x)` for j = 0..=k_max, exact up to rounding.
pub fn bump_derivatives(x: f64, k_max: usize) -> Vec<f64> {
    let coeffs = bump_taylor(x, k_max);
    let mut fact = 1.0f64;
    coeffs
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            if j > 0 {
                fact *= j as f64;
            }
            c * fact
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Test functions and dictionaries
// ---------------------------------------------------------------------------

/// One-axis profile `p(u) = psi((u - center)/rho) (1 + slope u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisProfile {
    pub center: f64,
    pub rho: f64,
    pub slope: f64,
}

impl AxisProfile {
    /// `p^{(j)}(u)` for j = 0..=k_max.
    fn derivatives(&self, u: f64, k_max: usize) -> Vec<f64> {
        let v = (u - self.center) / self.rho;
        let psi = bump_derivatives(v, k_max);
        let mut out = vec![0.0; k_max + 1];
        for j in 0..=k_max {
            let base = psi[j] * self.rho.powi(-(j as i32));
            let lower = if j > 0 {
                j as f64 * self.slope * psi[j - 1] * self.rho.powi(-((j - 1) as i32))
            } else {
                0.0
            };
            out[j] = (1.0 + self.slope * u) * base + lower;
        }
        out
    }

    fn support_radius(&self) -> f64 {
        self.center.abs() + self.rho
    }
}

/// Smooth compactly supported test function; a tensor product of axis
/// profiles for n = 2. `scale` is the normalization making all derivative
/// sup-norms up to the dictionary order at most one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunction {
    pub dim: usize,
    pub axes: [AxisProfile; 2],
    pub scale: f64,
    pub support_radius: f64,
    /// `max_{|a| = k} sup |D^a phi|` for k = 0..=N+1, after normalization.
    pub deriv_norms: Vec<f64>,
    /// Quadrature value of the integral; nonzero by construction.
    pub integral: f64,
    /// Fine-grid L1 norm, used by modulus-of-continuity bounds.
    pub l1_norm: f64,
}

const PROFILE_GRID: usize = 2400;

impl TestFunction {
    fn build(dim: usize, axes: [AxisProfile; 2], order: usize) -> TestFunction {
        // per-axis sup of |p^{(j)}| and axis integrals on a fine grid
        let axis_data: Vec<(Vec<f64>, f64, f64)> = (0..dim)
            .map(|d| {
                let p = &axes[d];
                let r = p.support_radius();
                let step = 2.0 * r / PROFILE_GRID as f64;
                let mut sup = vec![0.0f64; order + 2];
                let mut integral = 0.0f64;
                let mut l1 = 0.0f64;
                for i in 0..PROFILE_GRID {
                    let u = -r + (i as f64 + 0.5) * step;
                    let ders = p.derivatives(u, order + 1);
                    for (j, v) in ders.iter().enumerate() {
                        sup[j] = sup[j].max(v.abs());
                    }
                    integral += ders[0] * step;
                    l1 += ders[0].abs() * step;
                }
                (sup, integral, l1)
            })
            .collect();

        // unnormalized sup of |D^a phi| per total order, separable by axis
        let mut norms = vec![0.0f64; order + 2];
        match dim {
            1 => norms.copy_from_slice(&axis_data[0].0),
            _ => {
                for a1 in 0..=order + 1 {
                    for a2 in 0..=(order + 1 - a1) {
                        let v = axis_data[0].0[a1] * axis_data[1].0[a2];
                        let k = a1 + a2;
                        norms[k] = norms[k].max(v);
                    }
                }
            }
        }
        let max_norm = norms.iter().cloned().fold(0.0, f64::max);
        // 0.1% headroom keeps the true sup below one despite the finite
        // check grid
        let scale = 1.0 / (max_norm * 1.001);
        for v in norms.iter_mut() {
            *v *= scale;
        }
        let integral = scale * axis_data.iter().map(|a| a.1).product::<f64>();
        let l1_norm = scale * axis_data.iter().map(|a| a.2).product::<f64>();
        let support_radius = match dim {
            1 => axes[0].support_radius(),
            _ => {
                let r1 = axes[0].support_radius();
                let r2 = axes[1].support_radius();
                (r1 * r1 + r2 * r2).sqrt()
            }
        };
        TestFunction { dim, axes, scale, support_radius, deriv_norms: norms, integral, l1_norm }
    }

    pub fn eval(&self, u: &[f64; 2]) -> f64 {
        let p0 = self.axes[0];
        let v0 = {
            let v = (u[0] - p0.center) / p0.rho;
            if v.abs() >= 1.0 {
                return 0.0;
            }
            (-1.0 / (1.0 - v * v)).exp() * (1.0 + p0.slope * u[0])
        };
        match self.dim {
            1 => self.scale * v0,
            _ => {
                let p1 = self.axes[1];
                let v = (u[1] - p1.center) / p1.rho;
                if v.abs() >= 1.0 {
                    return 0.0;
                }
                let v1 = (-1.0 / (1.0 - v * v)).exp() * (1.0 + p1.slope * u[1]);
                self.scale * v0 * v1
            }
        }
    }

    /// Axis factor evaluated alone (used by separable convolution).
    fn eval_axis(&self, d: usize, u: f64) -> f64 {
        let p = self.axes[d];
        let v = (u - p.center) / p.rho;
        if v.abs() >= 1.0 {
            return 0.0;
        }
        (-1.0 / (1.0 - v * v)).exp() * (1.0 + p.slope * u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DictVariant {
    /// Members supported in the unit ball.
    Central,
    /// Members supported in `B(0, R)` with `R = min(2^{3(10+n)}, L/2)`,
    /// together with the unit-ball members so the families nest.
    Wide,
}

/// Finite test-function dictionary with scales in (0, 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dictionary {
    pub order: usize,
    pub dim: usize,
    pub members: Vec<TestFunction>,
    pub scales: Vec<f64>,
    pub variant: DictVariant,
    /// Actual member support radius bound; `Wide` records the truncation of
    /// the nominal `2^{3(10+n)}` radius to the domain.
    pub support_radius: f64,
}

/// Builds the dictionary: a base bump, an affine-modulated bump, and
/// translated bumps, all renormalized to derivative sup-norm at most one up
/// to order `N + 1`; scales `t_max * 2^{-j}`.
pub fn make_dictionary(
    order: usize,
    dim: usize,
    n_scales: usize,
    n_translates: usize,
    variant: DictVariant,
    t_max: f64,
    half_width: f64,
) -> Result<Dictionary> {
    if order < 2 {
        return Err(Error::InvalidParam(format!("dictionary order N = {order} must be >= 2")));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidParam(format!("dimension {dim} not in {{1,2}}")));
    }
    if n_scales == 0 {
        return Err(Error::InvalidParam("need at least one scale".into()));
    }
    if !(t_max > 0.0 && t_max < 1.0) {
        return Err(Error::InvalidParam(format!("t_max = {t_max} must lie in (0, 1)")));
    }
    let scales: Vec<f64> = (0..n_scales).map(|j| t_max * 0.5f64.powi(j as i32)).collect();

    let mut members = Vec::new();
    let mut push_family = |radius: f64| {
        let axis_r = if dim == 1 { radius } else { radius / 2f64.sqrt() };
        let base = AxisProfile { center: 0.0, rho: axis_r, slope: 0.0 };
        members.push(TestFunction::build(dim, [base, base], order));
        let affine = AxisProfile { center: 0.0, rho: axis_r, slope: 0.5 / axis_r };
        members.push(TestFunction::build(dim, [affine, base], order));
        for j in 0..n_translates {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let shift = sign * axis_r * (0.25 + 0.15 * (j / 2) as f64);
            let rho = axis_r - shift.abs();
            let tr = AxisProfile { center: shift, rho, slope: 0.0 };
            members.push(TestFunction::build(dim, [tr, base], order));
        }
    };
    push_family(1.0);
    let support_radius = match variant {
        DictVariant::Central => 1.0,
        DictVariant::Wide => {
            let nominal = 2f64.powi(3 * (10 + dim as i32));
            let r = nominal.min(half_width / 2.0);
            if r > 1.0 {
                push_family(r);
            }
            r.max(1.0)
        }
    };
    Ok(Dictionary { order, dim, members, scales, variant, support_radius })
}

impl Dictionary {
    /// Largest integral among members (positive by construction).
    pub fn best_integral(&self) -> f64 {
        self.members.iter().map(|m| m.integral.abs()).fold(0.0, f64::max)
    }

    pub fn smallest_scale(&self) -> f64 {
        self.scales.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

// ---------------------------------------------------------------------------
// Local Hardy-Littlewood maximal operator
// ---------------------------------------------------------------------------

/// `M^loc f(x)`: exact maximum over all grid-aligned cubes containing `x`
/// with `|Q| < 1` of the cell average of `|f|`. For each sidelength the
/// window averages are fresh per-window sums, so a per-point brute-force
/// sweep over the same family reproduces the result bit for bit.
pub fn local_hl_maximal(f: &SampledFunction) -> SampledFunction {
    let grid = f.grid;
    let h = grid.h();
    let m = grid.m;
    let absf = f.abs_values();
    let mut out = vec![0.0f64; grid.len()];

    match grid.n {
        1 => {
            let mut s = 1usize;
            while (s as f64) * h < 1.0 && s <= m {
                let mut avgs = Vec::with_capacity(m - s + 1);
                for lo in 0..=(m - s) {
                    let mut acc = 0.0f64;
                    for i in lo..lo + s {
                        acc += absf[i];
                    }
                    avgs.push(acc / s as f64);
                }
                // point i is covered by anchors lo in [i-s+1, i] (clamped)
                let padded = pad_neg_inf(&avgs, s - 1);
                let win = sliding_max(&padded, s);
                for i in 0..m {
                    if win[i] > out[i] {
                        out[i] = win[i];
                    }
                }
                s += 1;
            }
        }
        _ => {
            let mut s = 1usize;
            while ((s as f64) * h).powi(2) < 1.0 && s <= m {
                let anchors_per_axis = m - s + 1;
                let mut avgs = vec![0.0f64; anchors_per_axis * anchors_per_axis];
                for ly in 0..anchors_per_axis {
                    for lx in 0..anchors_per_axis {
                        let mut acc = 0.0f64;
                        for iy in ly..ly + s {
                            for ix in lx..lx + s {
                                acc += absf[grid.flat(ix, iy)];
                            }
                        }
                        avgs[ly * anchors_per_axis + lx] = acc / (s * s) as f64;
                    }
                }
                // separable clamped sliding max over anchor rectangles
                let mut rows = vec![0.0f64; anchors_per_axis * m];
                for ly in 0..anchors_per_axis {
                    let row = &avgs[ly * anchors_per_axis..(ly + 1) * anchors_per_axis];
                    let padded = pad_neg_inf(row, s - 1);
                    let win = sliding_max(&padded, s);
                    rows[ly * m..(ly + 1) * m].copy_from_slice(&win);
                }
                for ix in 0..m {
                    let col: Vec<f64> = (0..anchors_per_axis).map(|ly| rows[ly * m + ix]).collect();
                    let padded = pad_neg_inf(&col, s - 1);
                    let win = sliding_max(&padded, s);
                    for iy in 0..m {
                        let idx = grid.flat(ix, iy);
                        if win[iy] > out[idx] {
                            out[idx] = win[iy];
                        }
                    }
                }
                s += 1;
            }
        }
    }
    SampledFunction::from_real_values(grid, out).expect("maximal field")
}

/// Pads with `-inf` on both sides so a width-`w+1` sliding max over the
/// padded array yields the clamped-window max per original position.
fn pad_neg_inf(vals: &[f64], pad: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; vals.len() + 2 * pad];
    out[pad..pad + vals.len()].copy_from_slice(vals);
    out
}

// ---------------------------------------------------------------------------
// Grand maximal functions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrandMode {
    /// `sup_{member, t} |phi_t * f(x)|`.
    Centered,
    /// `sup_{member, t, |z - x| < t} |phi_t * f(z)|`; for n = 2 the window
    /// is per-axis.
    NonTangential,
}

/// Discrete convolution `phi_t * f` by direct quadrature summation.
fn convolve_scaled(f: &SampledFunction, member: &TestFunction, t: f64) -> Vec<Complex64> {
    let grid = f.grid;
    let h = grid.h();
    let m = grid.m;
    match grid.n {
        1 => {
            let reach = member.support_radius * t;
            let wd = ((reach / h) * (1.0 + 1e-12)).floor() as i64;
            let kernel: Vec<f64> = (-wd..=wd)
                .map(|d| member.eval(&[d as f64 * h / t, 0.0]) / t)
                .collect();
            let mut out = vec![Complex64::new(0.0, 0.0); m];
            for i in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for (kidx, d) in (-wd..=wd).enumerate() {
                    let j = i as i64 - d;
                    if j >= 0 && (j as usize) < m {
                        acc += kernel[kidx] * f.values[j as usize];
                    }
                }
                out[i] = acc * h;
            }
            out
        }
        _ => {
            // tensor kernel: separable row/column passes
            let axis_reach = |d: usize| member.axes[d].support_radius() * t;
            let wd0 = ((axis_reach(0) / h) * (1.0 + 1e-12)).floor() as i64;
            let wd1 = ((axis_reach(1) / h) * (1.0 + 1e-12)).floor() as i64;
            let k0: Vec<f64> = (-wd0..=wd0).map(|d| member.eval_axis(0, d as f64 * h / t)).collect();
            let k1: Vec<f64> = (-wd1..=wd1).map(|d| member.eval_axis(1, d as f64 * h / t)).collect();
            let norm = member.scale / (t * t);
            let mut pass0 = vec![Complex64::new(0.0, 0.0); m * m];
            for iy in 0..m {
                for ix in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (kidx, d) in (-wd0..=wd0).enumerate() {
                        let j = ix as i64 - d;
                        if j >= 0 && (j as usize) < m {
                            acc += k0[kidx] * f.values[grid.flat(j as usize, iy)];
                        }
                    }
                    pass0[grid.flat(ix, iy)] = acc;
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); m * m];
            for iy in 0..m {
                for ix in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (kidx, d) in (-wd1..=wd1).enumerate() {
                        let j = iy as i64 - d;
                        if j >= 0 && (j as usize) < m {
                            acc += k1[kidx] * pass0[grid.flat(ix, j as usize)];
                        }
                    }
                    out[grid.flat(ix, iy)] = acc * (norm * h * h);
                }
            }
            out
        }
    }
}

/// Grand maximal function over the dictionary.
pub fn grand_maximal(f: &SampledFunction, dict: &Dictionary, mode: GrandMode) -> SampledFunction {
    assert!(!dict.members.is_empty(), "dictionary must be nonempty");
    let grid = f.grid;
    let h = grid.h();
    let m = grid.m;
    let mut out = vec![0.0f64; grid.len()];

    for &t in &dict.scales {
        // per-scale field: max over members of |phi_t * f|
        let mut field = vec![0.0f64; grid.len()];
        for member in &dict.members {
            let conv = convolve_scaled(f, member, t);
            for (o, v) in field.iter_mut().zip(conv.iter()) {
                let a = v.norm();
                if a > *o {
                    *o = a;
                }
            }
        }
        match mode {
            GrandMode::Centered => {
                for (o, v) in out.iter_mut().zip(field.iter()) {
                    if *v > *o {
                        *o = *v;
                    }
                }
            }
            GrandMode::NonTangential => {
                // |z - x| < t: up to wd cells away per axis
                let wd = (((t / h) - 1e-12).ceil() as usize).saturating_sub(1).min(m - 1);
                if wd == 0 {
                    for (o, v) in out.iter_mut().zip(field.iter()) {
                        if *v > *o {
                            *o = *v;
                        }
                    }
                } else {
                    let width = 2 * wd + 1;
                    match grid.n {
                        1 => {
                            let padded = pad_neg_inf(&field, wd);
                            let win = sliding_max(&padded, width);
                            for (o, v) in out.iter_mut().zip(win.iter()) {
                                if *v > *o {
                                    *o = *v;
                                }
                            }
                        }
                        _ => {
                            let mut rows = vec![0.0f64; m * m];
                            for iy in 0..m {
                                let row = &field[iy * m..(iy + 1) * m];
                                let padded = pad_neg_inf(row, wd);
                                let win = sliding_max(&padded, width);
                                rows[iy * m..(iy + 1) * m].copy_from_slice(&win);
                            }
                            for ix in 0..m {
                                let col: Vec<f64> = (0..m).map(|iy| rows[iy * m + ix]).collect();
                                let padded = pad_neg_inf(&col, wd);
                                let win = sliding_max(&padded, width);
                                for iy in 0..m {
                                    let idx = grid.flat(ix, iy);
                                    if win[iy] > out[idx] {
                                        out[idx] = win[iy];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    SampledFunction::from_real_values(grid, out).expect("grand maximal field")
}

/// `||f||_{h^p_w}` rendered through the dictionary: the weighted L^p norm
/// of the centered grand maximal function.
pub fn hardy_quasi_norm(
    f: &SampledFunction,
    weight: &Weight,
    params: &HardyParams,
    dict: &Dictionary,
) -> Result<f64> {
    let mf = grand_maximal(f, dict, GrandMode::Centered);
    weighted_lp_norm(&mf, weight, params.p)
}

/// Grid modulus of continuity `sup_{|d| <= r} |f(x + d) - f(x)|`.
pub fn modulus_of_continuity(f: &SampledFunction, r: f64) -> f64 {
    let grid = f.grid;
    let h = grid.h();
    let wd = ((r / h) * (1.0 + 1e-12)).floor() as i64;
    let m = grid.m as i64;
    let mut sup = 0.0f64;
    match grid.n {
        1 => {
            for i in 0..m {
                for d in -wd..=wd {
                    let j = i + d;
                    if j >= 0 && j < m {
                        let diff = (f.values[i as usize] - f.values[j as usize]).norm();
                        if diff > sup {
                            sup = diff;
                        }
                    }
                }
            }
        }
        _ => {
            for iy in 0..m {
                for ix in 0..m {
                    let v = f.values[grid.flat(ix as usize, iy as usize)];
                    for dy in -wd..=wd {
                        for dx in -wd..=wd {
                            if (dx * dx + dy * dy) as f64 * h * h > r * r {
                                continue;
                            }
                            let (jx, jy) = (ix + dx, iy + dy);
                            if jx >= 0 && jx < m && jy >= 0 && jy < m {
                                let diff = (v - f.values[grid.flat(jx as usize, jy as usize)]).norm();
                                if diff > sup {
                                    sup = diff;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    fn grid1(m: usize) -> Grid {
        Grid::new(1, 4.0, m).unwrap()
    }

    /// Independent per-point brute force over the same cube family.
    fn local_hl_oracle(f: &SampledFunction) -> Vec<f64> {
        let grid = f.grid;
        let h = grid.h();
        let m = grid.m;
        let absf = f.abs_values();
        let mut out = vec![0.0f64; m];
        for i in 0..m {
            let mut s = 1usize;
            while (s as f64) * h < 1.0 && s <= m {
                let lo_min = (i + 1).saturating_sub(s);
                let lo_max = i.min(m - s);
                for lo in lo_min..=lo_max {
                    let mut acc = 0.0f64;
                    for j in lo..lo + s {
                        acc += absf[j];
                    }
                    let avg = acc / s as f64;
                    if avg > out[i] {
                        out[i] = avg;
                    }
                }
                s += 1;
            }
        }
        out
    }

    #[test]
    fn bump_taylor_matches_closed_form() {
        for &x in &[0.0, 0.3, -0.7, 0.95] {
            let d = bump_derivatives(x, 0);
            assert_relative_eq!(d[0], (-1.0 / (1.0 - x * x)).exp(), epsilon = 1e-14);
        }
        assert_eq!(bump_derivatives(1.0, 3), vec![0.0; 4]);
    }

    #[test]
    fn bump_derivatives_match_finite_difference_oracle() {
        // Richardson-extrapolated central differences as the independent path
        let psi = |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
        let fd = |f: &dyn Fn(f64) -> f64, x: f64, h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        for &x in &[0.1, 0.35, -0.5, 0.62] {
            let exact = bump_derivatives(x, 3);
            // first derivative
            let h = 1e-3;
            let d1h = fd(&psi, x, h);
            let d1h2 = fd(&psi, x, h / 2.0);
            let d1 = (4.0 * d1h2 - d1h) / 3.0;
            assert!((exact[1] - d1).abs() < 1e-6, "x = {x}: {} vs {}", exact[1], d1);
            // second derivative via 5-point Richardson
            let d2 = |h: f64| (psi(x + h) - 2.0 * psi(x) + psi(x - h)) / (h * h);
            let d2r = (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
            assert!((exact[2] - d2r).abs() < 1e-6, "x = {x}: {} vs {}", exact[2], d2r);
            // third derivative
            let d3 = |h: f64| {
                (psi(x + 2.0 * h) - 2.0 * psi(x + h) + 2.0 * psi(x - h) - psi(x - 2.0 * h))
                    / (2.0 * h * h * h)
            };
            let d3r = (4.0 * d3(h / 2.0) - d3(h)) / 3.0;
            assert!((exact[3] - d3r).abs() < 1e-5, "x = {x}: {} vs {}", exact[3], d3r);
        }
    }

    #[test]
    fn dictionary_membership_invariants() {
        for dim in [1usize, 2] {
            let dict = make_dictionary(2, dim, 4, 2, DictVariant::Central, 0.5, 4.0).unwrap();
            assert_eq!(dict.members.len(), 4);
            for m in &dict.members {
                assert!(m.support_radius <= 1.0 + 1e-12);
                assert!(m.integral.abs() > 1e-6, "integral {}", m.integral);
                for (k, &nrm) in m.deriv_norms.iter().enumerate() {
                    assert!(nrm <= 1.0, "order {k} norm {nrm}");
                }
            }
            for &t in &dict.scales {
                assert!(t > 0.0 && t < 1.0);
            }
        }
    }

    #[test]
    fn dictionary_rejects_bad_params() {
        assert!(make_dictionary(1, 1, 4, 2, DictVariant::Central, 0.5, 4.0).is_err());
        assert!(make_dictionary(2, 1, 4, 2, DictVariant::Central, 1.0, 4.0).is_err());
        assert!(make_dictionary(2, 1, 0, 2, DictVariant::Central, 0.5, 4.0).is_err());
        assert!(make_dictionary(2, 3, 4, 2, DictVariant::Central, 0.5, 4.0).is_err());
    }

    #[test]
    fn scaling_preserves_integral() {
        // int phi_t = int phi under the change of variables; check the
        // grid convolution of the constant function
        let g = grid1(512);
        let one = SampledFunction::from_real_fn(g, |_| 1.0);
        let dict = make_dictionary(3, 1, 3, 0, DictVariant::Central, 0.5, 4.0).unwrap();
        for member in &dict.members {
            let at_t: Vec<f64> = dict
                .scales
                .iter()
                .map(|&t| convolve_scaled(&one, member, t)[g.m / 2].re)
                .collect();
            for v in &at_t {
                assert_relative_eq!(*v, member.integral, epsilon = 2e-3);
            }
        }
    }

    #[test]
    fn local_maximal_of_constant() {
        let g = grid1(128);
        let f = SampledFunction::from_real_fn(g, |_| -2.5);
        let mf = local_hl_maximal(&f);
        for v in &mf.values {
            assert_relative_eq!(v.re, 2.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn local_maximal_matches_brute_force_exactly() {
        let g = grid1(128);
        for f in [
            SampledFunction::from_real_fn(g, |x| (1.0 - x[0].abs()).max(0.0)),
            SampledFunction::from_real_fn(g, |x| (3.0 * x[0]).sin()),
            {
                let mut spike = SampledFunction::zeros(g);
                spike.values[64] = Complex64::new(1.0 / g.h(), 0.0);
                spike
            },
        ] {
            let fast = local_hl_maximal(&f);
            let slow = local_hl_oracle(&f);
            for (a, b) in fast.values.iter().zip(slow.iter()) {
                assert_eq!(a.re, *b);
            }
        }
    }

    #[test]
    fn local_maximal_spike_decays_then_localizes() {
        let g = grid1(256); // h = 1/32
        let h = g.h();
        let mut spike = SampledFunction::zeros(g);
        let c = g.m / 2;
        spike.values[c] = Complex64::new(1.0 / h, 0.0);
        let mf = local_hl_maximal(&spike);
        // at distance d the best admissible cube gives ~ 1/(d + h)
        for steps in [2usize, 5, 10, 20] {
            let d = steps as f64 * h;
            let got = mf.values[c + steps].re;
            let want = 1.0 / (d + h);
            assert_relative_eq!(got, want, max_relative = 0.2);
        }
        // beyond the |Q| < 1 cap no admissible cube reaches the spike
        let far = (1.2 / h) as usize;
        assert_eq!(mf.values[c + far].re, 0.0);
    }

    #[test]
    fn local_maximal_of_indicator() {
        let g = grid1(256);
        let f = SampledFunction::from_real_fn(g, |x| if x[0] >= 0.0 && x[0] <= 1.0 { 1.0 } else { 0.0 });
        let mf = local_hl_maximal(&f);
        for i in 0..g.m {
            let x = g.axis_coord(i);
            if x > 0.0 && x < 1.0 {
                assert!(mf.values[i].re >= 1.0 - 2.0 * g.h(), "x = {x}: {}", mf.values[i].re);
            }
        }
    }

    #[test]
    fn grand_maximal_of_constant() {
        let g = grid1(256);
        let one = SampledFunction::from_real_fn(g, |_| 1.0);
        let dict = make_dictionary(2, 1, 4, 2, DictVariant::Central, 0.5, 4.0).unwrap();
        let gm = grand_maximal(&one, &dict, GrandMode::Centered);
        let max_int = dict.best_integral();
        let min_int = dict.members.iter().map(|m| m.integral.abs()).fold(f64::INFINITY, f64::min);
        let mid = gm.values[g.m / 2].re;
        assert!(mid <= max_int * (1.0 + 1e-2) && mid >= min_int * (1.0 - 1e-2), "mid = {mid}");
        assert!(mid <= 1.0 + 1e-9);
    }

    #[test]
    fn centered_below_nontangential_and_nested_dicts() {
        let g = grid1(256);
        let f = SampledFunction::from_real_fn(g, |x| (-(x[0] * x[0])).exp() * (2.0 * x[0]).cos());
        let central = make_dictionary(2, 1, 4, 2, DictVariant::Central, 0.5, 4.0).unwrap();
        let wide = make_dictionary(2, 1, 4, 2, DictVariant::Wide, 0.5, 4.0).unwrap();
        let m0 = grand_maximal(&f, &central, GrandMode::Centered);
        let m0bar = grand_maximal(&f, &wide, GrandMode::Centered);
        let mn = grand_maximal(&f, &wide, GrandMode::NonTangential);
        for i in 0..g.m {
            assert!(m0.values[i].re <= m0bar.values[i].re + 1e-12);
            assert!(m0bar.values[i].re <= mn.values[i].re + 1e-12);
        }
    }

    #[test]
    fn dictionary_monotonicity_in_scales() {
        let g = grid1(256);
        let f = SampledFunction::from_real_fn(g, |x| (1.0 - x[0].abs()).max(0.0));
        let small = make_dictionary(2, 1, 2, 2, DictVariant::Central, 0.5, 4.0).unwrap();
        let large = make_dictionary(2, 1, 5, 2, DictVariant::Central, 0.5, 4.0).unwrap();
        let a = grand_maximal(&f, &small, GrandMode::Centered);
        let b = grand_maximal(&f, &large, GrandMode::Centered);
        for i in 0..g.m {
            assert!(b.values[i].re >= a.values[i].re - 1e-12);
        }
    }

    #[test]
    fn pointwise_lower_bound_with_continuity_term() {
        let g = grid1(512);
        let f = SampledFunction::from_real_fn(g, |x| (-(x[0] * x[0])).exp());
        let dict = make_dictionary(2, 1, 5, 2, DictVariant::Central, 0.5, 4.0).unwrap();
        let gm = grand_maximal(&f, &dict, GrandMode::Centered);
        // use the base member: |f| <= (M0 f + delta_f(t_min) ||phi||_1) / |int phi|
        let base = &dict.members[0];
        let t_min = dict.smallest_scale();
        let delta = modulus_of_continuity(&f, t_min * base.support_radius);
        for i in 0..g.m {
            let bound = (gm.values[i].re + delta * base.l1_norm) / base.integral.abs();
            assert!(
                f.values[i].norm() <= bound + 1e-10,
                "i = {i}: |f| = {}, bound = {bound}",
                f.values[i].norm()
            );
        }
    }

    #[test]
    fn grand_maximal_dominated_by_local_maximal() {
        // measured constant in M0 f <= C M^loc f, stable under refinement
        let ratio_at = |m: usize| {
            let g = grid1(m);
            let dict = make_dictionary(2, 1, 4, 2, DictVariant::Central, 0.5, 4.0).unwrap();
            let mut sup: f64 = 0.0;
            for f in [
                SampledFunction::from_real_fn(g, |x| (1.0 - x[0].abs()).max(0.0)),
                SampledFunction::from_real_fn(g, |x| (-(x[0] * x[0])).exp()),
                SampledFunction::from_real_fn(g, |x| if x[0].abs() < 1.0 { x[0].signum() } else { 0.0 }),
            ] {
                let gm = grand_maximal(&f, &dict, GrandMode::Centered);
                let ml = local_hl_maximal(&f);
                for i in 0..g.m {
                    if ml.values[i].re > 1e-12 {
                        sup = sup.max(gm.values[i].re / ml.values[i].re);
                    }
                }
            }
            sup
        };
        let c1 = ratio_at(256);
        let c2 = ratio_at(512);
        assert!(c1.is_finite() && c1 > 0.0);
        assert!((c1 - c2).abs() <= 0.25 * c1.min(c2), "c1 = {c1}, c2 = {c2}");
    }

    #[test]
    fn hardy_norm_basics() {
        let g = grid1(256);
        let w = Weight::exponential(g, 1.0);
        let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1).unwrap();
        let dict = make_dictionary(params.n_grand.max(2), 1, 4, 2, DictVariant::Central, 0.5, 4.0).unwrap();
        let zero = SampledFunction::zeros(g);
        assert_eq!(hardy_quasi_norm(&zero, &w, &params, &dict).unwrap(), 0.0);
        let f = SampledFunction::from_real_fn(g, |x| (1.0 - x[0].abs()).max(0.0));
        let base = hardy_quasi_norm(&f, &w, &params, &dict).unwrap();
        let scaled = hardy_quasi_norm(&f.scale(-3.0), &w, &params, &dict).unwrap();
        assert_relative_eq!(scaled, 3.0 * base, epsilon = 1e-10);
    }

    #[test]
    fn weighted_boundedness_of_local_maximal() {
        // ||M^loc f||_{L^2_w} / ||f||_{L^2_w} bounded and refinement-stable
        let ratio_at = |m: usize, wdesc: &str| {
            let g = grid1(m);
            let w = crate::weights::WeightDescriptor::parse(wdesc).unwrap().sample(g).unwrap();
            let mut sup: f64 = 0.0;
            for f in [
                SampledFunction::from_real_fn(g, |x| (1.0 - x[0].abs()).max(0.0)),
                SampledFunction::from_real_fn(g, |x| (-(2.0 * x[0]).powi(2)).exp()),
            ] {
                let mf = local_hl_maximal(&f);
                let num = weighted_lp_norm(&mf, &w, 2.0).unwrap();
                let den = weighted_lp_norm(&f, &w, 2.0).unwrap();
                sup = sup.max(num / den);
            }
            sup
        };
        for wdesc in ["const:1", "exp:1"] {
            let r1 = ratio_at(256, wdesc);
            let r2 = ratio_at(512, wdesc);
            assert!(r1 >= 1.0 - 1e-9 && r1.is_finite());
            assert!((r1 - r2).abs() <= 0.2 * r1.min(r2), "{wdesc}: {r1} vs {r2}");
        }
    }
}
