//! Desk-scale rendering of the atomic/maximal norm equivalence: over a
//! ten-function corpus the ratio of the constructed coefficient quasi-norm
//! to the grand-maximal quasi-norm stays in a narrow band, and the band is
//! stable under grid refinement.
//!
//! Run: cargo run --release --example norm_equivalence

use local_hardy::atoms::{atomic_decompose, atomic_norm_upper};
use local_hardy::corpus::standard_corpus;
use local_hardy::grid::Grid;
use local_hardy::maximal::{hardy_quasi_norm, make_dictionary, DictVariant};
use local_hardy::weights::{HardyParams, Weight};

fn main() -> local_hardy::Result<()> {
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1)?;

    for m in [1 << 10, 1 << 11] {
        let grid = Grid::new(1, 8.0, m)?;
        let weight = Weight::exponential(grid, 1.0);
        let wide = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0)?;
        let central = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Central, 0.5, 8.0)?;

        println!("m = {m}:");
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (name, f) in standard_corpus(grid, 7) {
            let dec = atomic_decompose(&f, &weight, &params, &wide, None)?;
            let upper = atomic_norm_upper(&dec, params.p);
            let hardy = hardy_quasi_norm(&f, &weight, &params, &central)?;
            let ratio = upper / hardy;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            println!("  {name:>10}: atomic {upper:12.2}  maximal {hardy:10.5}  ratio {ratio:10.1}");
        }
        println!("  band [{lo:.1}, {hi:.1}], spread {:.2}", hi / lo);
    }
    println!("\nthe spread, not the absolute ratio, is the equivalence signal;");
    println!("absolute values carry the dictionary normalization and the weight");
    println!("mass of the enlarged atom cubes");
    Ok(())
}
