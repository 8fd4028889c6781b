//! Calderon-Zygmund decomposition at a single height: good part bounded by
//! a multiple of the height, bad parts with moments removed on small
//! cubes, exact reconstruction, and the measured constants from the
//! structural estimates.
//!
//! Run: cargo run --release --example cz_decomposition

use local_hardy::czd::{cz_decompose, verify_czd, Branch};
use local_hardy::grid::{Grid, SampledFunction};
use local_hardy::maximal::{grand_maximal, make_dictionary, DictVariant, GrandMode};
use local_hardy::weights::{HardyParams, Weight};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 8.0, 1 << 11)?;
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1)?;
    let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0)?;
    let weight = Weight::exponential(grid, 1.0);

    let f = SampledFunction::from_real_fn(grid, |x| {
        (-(x[0] * x[0])).exp() * (2.0 * x[0]).cos()
    });
    let mf = grand_maximal(&f, &dict, GrandMode::NonTangential);
    println!("max of the grand maximal field: {:.5}", mf.sup_norm());

    for frac in [0.25, 0.5, 0.75] {
        let lambda = frac * mf.sup_norm();
        let dec = cz_decompose(&f, lambda, &params, &dict, 2)?;
        let projected = dec.branch.iter().filter(|b| **b == Branch::Projected).count();
        let recon = dec.reconstruction_error(&f) / f.sup_norm();
        println!(
            "\nheight {lambda:.4}: {} cubes ({} projected, {} plain), reconstruction {recon:.2e}",
            dec.n_cubes(),
            projected,
            dec.n_cubes() - projected
        );
        println!("  good part sup {:.4} ({}x the height)", dec.good.sup_norm(), dec.good.sup_norm() / lambda);
        let diag = verify_czd(&dec, &f, &weight, &dict);
        println!(
            "  measured: C2* {:.3}, C3* {:.3}, C9* {:.3}, decay slope {:.2}, good-part bound {:.3}",
            diag.c2_star, diag.c3_star, diag.c9_star, diag.decay_slope, diag.lemma_good_bound
        );
        if frac == 0.5 {
            std::fs::write("cz-decomposition.json", dec.to_json(Some(&diag)))?;
            println!("  wrote cz-decomposition.json");
        }
    }
    Ok(())
}
