//! Local BMO norms by exhaustive cube sweep, the weighted oscillation
//! bound, and the exponential superlevel decay of |b - b_Q| on the worst
//! cube (the John-Nirenberg behavior, measured).
//!
//! Run: cargo run --release --example bmo_oscillation

use local_hardy::grid::{Grid, SampledFunction};
use local_hardy::weights::{
    bmo_loc_norm, bmo_loc_sweep, oscillation_decay, weighted_oscillation_ratio, Weight,
};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 4.0, 1 << 11)?;

    let profiles: Vec<(&str, SampledFunction)> = vec![
        ("log|x|", SampledFunction::from_real_fn(grid, |x| x[0].abs().max(1e-5).ln())),
        ("sign(x)", SampledFunction::from_real_fn(grid, |x| x[0].signum())),
        ("x", SampledFunction::from_real_fn(grid, |x| x[0])),
        ("sin(3x)", SampledFunction::from_real_fn(grid, |x| (3.0 * x[0]).sin())),
    ];

    for (name, b) in &profiles {
        let (norm, cube) = bmo_loc_sweep(b, 1.0);
        println!(
            "{name:>8}: ||b||_BMO^loc = {norm:.5}  worst cube center {:+.3}, side {:.4}",
            cube.center[0], cube.side
        );
    }

    // the weighted oscillation stays comparable to the unweighted norm
    let w = Weight::exponential(grid, 1.0);
    let b = &profiles[0].1;
    for p in [1.0, 2.0] {
        let ratio = weighted_oscillation_ratio(b, &w, p, 1.0);
        println!("weighted oscillation (p = {p}) / BMO norm = {ratio:.4} under exp:1");
    }

    // superlevel decay on the worst cube: log-linear in lambda
    let (_, cube) = bmo_loc_sweep(b, 1.0);
    let lambdas: Vec<f64> = (1..=14).map(|k| 0.35 * k as f64).collect();
    let (points, rate) = oscillation_decay(b, &w, &cube, &lambdas);
    println!("\nsuperlevel decay of |b - b_Q| on the worst cube (b = log|x|):");
    for (lam, mass) in &points {
        if *mass > 0.0 {
            println!("  lambda {lam:5.2}: w-fraction {mass:.3e}");
        }
    }
    println!("fitted decay rate {rate:.3} per unit lambda (BMO norm {:.3})", bmo_loc_norm(b, 1.0));
    Ok(())
}
