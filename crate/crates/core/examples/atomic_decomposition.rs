//! The multi-height atomic decomposition: dyadic heights, per-height
//! pieces with moments restored by cross-projections, sup-normalized
//! atoms with sidelengths at most two, validation of every emitted atom,
//! and the manifest round trip.
//!
//! Run: cargo run --release --example atomic_decomposition

use local_hardy::atoms::{
    atomic_decompose, atomic_norm_upper, export_json, import_json, reconstruct, validate_atom,
};
use local_hardy::grid::{Grid, SampledFunction};
use local_hardy::maximal::{make_dictionary, DictVariant};
use local_hardy::weights::{HardyParams, Weight};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 8.0, 1 << 11)?;
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1)?;
    let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0)?;
    let weight = Weight::exponential(grid, 1.0);

    let f = SampledFunction::from_real_fn(grid, |x| (1.0 - x[0].abs()).max(0.0));
    let dec = atomic_decompose(&f, &weight, &params, &dict, None)?;

    println!(
        "tent function: heights 2^k for k in [{}, {}], {} atoms",
        dec.k_lo,
        dec.k_hi,
        dec.n_atoms()
    );
    let mut by_height: std::collections::BTreeMap<i32, (usize, f64)> = Default::default();
    for t in &dec.terms {
        let e = by_height.entry(t.height).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += t.coeff;
    }
    for (k, (count, mass)) in &by_height {
        println!("  height 2^{k:>3}: {count:3} atoms, coefficient mass {mass:10.3}");
    }
    println!(
        "single atom: {} (maximal field infimum {})",
        if dec.single.is_some() { "present" } else { "absent" },
        if dec.k0.is_some() { "positive" } else { "zero on the grid" }
    );

    let mut passes = 0;
    let mut worst_moment: f64 = 0.0;
    for t in &dec.terms {
        let rep = validate_atom(&t.atom, &weight);
        if rep.pass {
            passes += 1;
        }
        worst_moment = worst_moment.max(rep.worst_moment_residual);
    }
    println!(
        "validation: {passes}/{} atoms pass, worst moment residual {worst_moment:.2e}",
        dec.terms.len()
    );

    let rec = reconstruct(&dec);
    let err = f
        .values
        .iter()
        .zip(rec.values.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("reconstruction: max |f - sum| = {:.2e} (relative {:.2e})", err, err / f.sup_norm());
    println!("coefficient quasi-norm (p = {}): {:.4}", params.p, atomic_norm_upper(&dec, params.p));

    // manifest round trip
    let manifest = export_json(&dec);
    let back = import_json(&manifest)?;
    let rec2 = reconstruct(&back);
    let drift = rec
        .values
        .iter()
        .zip(rec2.values.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    std::fs::write("atomic-decomposition.json", &manifest)?;
    println!("manifest: {} bytes, reimport drift {drift:.1e}, wrote atomic-decomposition.json", manifest.len());
    Ok(())
}
