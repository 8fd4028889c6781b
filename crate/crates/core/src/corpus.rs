//! Deterministic test-function corpus: a few named analytic profiles plus
//! seeded random trigonometric polynomials under a smooth cutoff.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    /// Named members; unknown names are rejected.
    pub names: Vec<String>,
    /// Number of seeded random members appended after the named ones.
    pub random: usize,
    pub seed: u64,
    /// Support radius of every member.
    pub radius: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            names: vec!["tent".into(), "bump".into(), "haar-osc".into(), "multi-bump".into()],
            random: 6,
            seed: 7,
            radius: 1.5,
        }
    }
}

fn cutoff(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp() * std::f64::consts::E // rescaled so cutoff(0) = 1
    } else {
        0.0
    }
}

fn radial(n: usize, x: &[f64; 2]) -> f64 {
    match n {
        1 => x[0].abs(),
        _ => (x[0] * x[0] + x[1] * x[1]).sqrt(),
    }
}

/// One named member; `rho` is the support radius.
pub fn named_function(grid: Grid, name: &str, rho: f64) -> Result<SampledFunction> {
    let n = grid.n;
    match name {
        "tent" => Ok(SampledFunction::from_real_fn(grid, move |x| {
            (1.0 - radial(n, x) / rho).max(0.0)
        })),
        "bump" => Ok(SampledFunction::from_real_fn(grid, move |x| {
            cutoff(radial(n, x) / rho)
        })),
        "haar-osc" => Ok(SampledFunction::from_real_fn(grid, move |x| {
            let r = radial(n, x);
            if r < rho {
                if x[0] >= 0.0 {
                    -1.0
                } else {
                    1.0
                }
            } else {
                0.0
            }
        })),
        "multi-bump" => Ok(SampledFunction::from_real_fn(grid, move |x| {
            let c = rho / 2.0;
            let w = rho / 2.2;
            0.8 * cutoff((x[0] - c) / w) - 0.6 * cutoff((x[0] + c) / w)
                + if n == 2 { 0.3 * cutoff(radial(n, x) / w) } else { 0.4 * cutoff(x[0] / w) }
        })),
        _ => Err(Error::UnknownName(format!("corpus function `{name}`"))),
    }
}

/// Seeded random trigonometric polynomial times the smooth cutoff. The
/// member is regenerated (bumping a sub-seed) until it has a clearly
/// nonzero mean against the base bump, so the base-height logic downstream
/// is exercised rather than skated past.
pub fn random_member(grid: Grid, seed: u64, index: usize, rho: f64) -> SampledFunction {
    let mut sub = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e3779b9) ^ (sub << 32));
        let terms: Vec<(f64, f64, f64)> = (1..=5)
            .map(|k| {
                (
                    rng.gen_range(-1.0..1.0) / k as f64,
                    k as f64 * std::f64::consts::PI / rho,
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let n = grid.n;
        let f = SampledFunction::from_real_fn(grid, move |x| {
            let r = radial(n, x);
            if r >= rho {
                return 0.0;
            }
            let c = cutoff(r / rho);
            let mut acc = 0.0;
            for &(a, k, phase) in &terms {
                acc += a * (k * x[0] + phase).cos();
            }
            acc * c
        });
        // mean against the base bump profile at unit scale
        let mut pairing = 0.0f64;
        for idx in grid.indices() {
            let p = grid.coord(idx);
            let r = radial(grid.n, &p);
            pairing += f.values[idx].re * cutoff(r);
        }
        pairing *= grid.cell_volume();
        if pairing.abs() > 1e-3 * f.sup_norm().max(1e-300) {
            return f;
        }
        sub += 1;
        if sub > 32 {
            return f;
        }
    }
}

/// Deterministic corpus from a spec.
pub fn corpus_generate(grid: Grid, spec: &CorpusSpec) -> Result<Vec<(String, SampledFunction)>> {
    let mut out = Vec::new();
    for name in &spec.names {
        out.push((name.clone(), named_function(grid, name, spec.radius)?));
    }
    for i in 0..spec.random {
        out.push((format!("rand-{i}"), random_member(grid, spec.seed, i, spec.radius)));
    }
    Ok(out)
}

/// The default ten-member corpus used by the experiment harnesses.
pub fn standard_corpus(grid: Grid, seed: u64) -> Vec<(String, SampledFunction)> {
    corpus_generate(grid, &CorpusSpec { seed, ..Default::default() }).expect("standard corpus")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_members() {
        let g = Grid::new(1, 4.0, 256).unwrap();
        let tent = named_function(g, "tent", 1.0).unwrap();
        assert!((tent.values[128].re - tent.sup_norm()).abs() < 0.02);
        assert!(named_function(g, "nope", 1.0).is_err());
    }

    #[test]
    fn corpus_is_deterministic() {
        let g = Grid::new(1, 4.0, 128).unwrap();
        let a = standard_corpus(g, 42);
        let b = standard_corpus(g, 42);
        assert_eq!(a.len(), 10);
        for ((n1, f1), (n2, f2)) in a.iter().zip(b.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(f1.values, f2.values);
        }
        let c = standard_corpus(g, 43);
        assert!(a.iter().zip(c.iter()).any(|((_, f1), (_, f2))| f1.values != f2.values));
    }

    #[test]
    fn random_members_pair_with_base_bump() {
        let g = Grid::new(1, 4.0, 512).unwrap();
        for i in 0..6 {
            let f = random_member(g, 7, i, 1.5);
            let mut pairing = 0.0f64;
            for idx in g.indices() {
                let r = g.coord(idx)[0].abs();
                pairing += f.values[idx].re * cutoff(r);
            }
            pairing *= g.cell_volume();
            assert!(pairing.abs() > 1e-3 * f.sup_norm(), "member {i}");
        }
    }

    #[test]
    fn supports_respect_radius() {
        let g = Grid::new(1, 4.0, 256).unwrap();
        for (name, f) in standard_corpus(g, 7) {
            for idx in g.indices() {
                if f.values[idx].re != 0.0 {
                    assert!(g.coord(idx)[0].abs() <= 1.5 + g.h(), "{name}");
                }
            }
        }
    }
}
