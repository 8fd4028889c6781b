//! The same machinery in two dimensions at modest resolution: radial
//! superlevel sets, a quadtree Whitney cover, and the atomic decomposition
//! of a radial bump.
//!
//! Run: cargo run --release --example two_dimensional

use local_hardy::atoms::{atomic_decompose, reconstruct, validate_atom};
use local_hardy::grid::{Grid, SampledFunction};
use local_hardy::maximal::{make_dictionary, DictVariant};
use local_hardy::weights::{HardyParams, Weight};
use local_hardy::whitney::{superlevel_set, whitney_decompose};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(2, 6.0, 96)?;
    let f = SampledFunction::from_real_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 }
    });

    // whitney cover of a radial superlevel set
    let mf = SampledFunction::from_real_fn(grid, |x| {
        (1.0 - (x[0] * x[0] + x[1] * x[1]).sqrt()).max(0.0)
    });
    let open = superlevel_set(&mf, 0.4, 2)?;
    let cover = whitney_decompose(&open)?;
    let mut by_side: std::collections::BTreeMap<u64, usize> = Default::default();
    for c in &cover.cubes {
        *by_side.entry((c.cube.side * 1e6) as u64).or_default() += 1;
    }
    println!("radial set: {} cells covered by {} cubes, overlap {}", open.cell_count(), cover.cubes.len(), cover.overlap);
    for (side, count) in by_side {
        println!("  side {:.4}: {count} cubes", side as f64 / 1e6);
    }

    // atomic decomposition of the radial bump
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 2)?;
    let dict = make_dictionary(params.n_grand, 2, 4, 2, DictVariant::Wide, 0.5, 6.0)?;
    let w = Weight::constant(grid, 1.0);
    let dec = atomic_decompose(&f, &w, &params, &dict, None)?;
    let rec = reconstruct(&dec);
    let err = f
        .values
        .iter()
        .zip(rec.values.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let valid = dec.terms.iter().filter(|t| validate_atom(&t.atom, &w).pass).count();
    println!("\natomic decomposition of the radial bump:");
    println!("  heights [{}, {}], {} atoms ({valid} valid)", dec.k_lo, dec.k_hi, dec.n_atoms());
    println!("  reconstruction: {:.2e} relative", err / f.sup_norm());
    Ok(())
}
