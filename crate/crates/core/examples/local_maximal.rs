//! The local Hardy-Littlewood maximal operator: exact sup over all
//! grid-aligned cubes of volume < 1 containing the point, and its weighted
//! L^2 boundedness ratios over the corpus.
//!
//! Run: cargo run --release --example local_maximal

use local_hardy::corpus::standard_corpus;
use local_hardy::grid::{weighted_lp_norm, Grid, SampledFunction};
use local_hardy::maximal::local_hl_maximal;
use local_hardy::weights::WeightDescriptor;

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 8.0, 1 << 10)?;

    // a unit-mass spike: the maximal function decays like 1/distance until
    // the volume cap bites, then drops to zero
    let mut spike = SampledFunction::zeros(grid);
    spike.values[grid.m / 2] = num_complex::Complex64::new(1.0 / grid.h(), 0.0);
    let mf = local_hl_maximal(&spike);
    println!("unit spike at the origin, M^loc along x > 0:");
    for steps in [1usize, 2, 4, 8, 16, 32, 64] {
        let i = grid.m / 2 + steps;
        let x = grid.axis_coord(i);
        println!("  x = {x:6.3}: M = {:9.4}  (1/(x+h) = {:9.4})", mf.values[i].re, 1.0 / (x + grid.h()));
    }
    let far = grid.m / 2 + (1.2 / grid.h()) as usize;
    println!("  x = {:6.3}: M = {:9.4}  (beyond the |Q| < 1 reach)", grid.axis_coord(far), mf.values[far].re);

    println!("\nweighted L^2 boundedness over the ten-member corpus:");
    for wdesc in ["const:1", "exp:1"] {
        let w = WeightDescriptor::parse(wdesc)?.sample(grid)?;
        let mut worst: f64 = 0.0;
        for (_, f) in standard_corpus(grid, 7) {
            let num = weighted_lp_norm(&local_hl_maximal(&f), &w, 2.0)?;
            let den = weighted_lp_norm(&f, &w, 2.0)?;
            worst = worst.max(num / den);
        }
        println!("  {wdesc:>8}: sup ||M f||/||f|| = {worst:.4}");
    }
    Ok(())
}
