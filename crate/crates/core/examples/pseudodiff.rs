//! Order-zero pseudodifferential operators through the grid transform:
//! exact degenerations (identity symbol, pure multiplier, pure
//! coefficient) and the Hardy-to-Hardy boundedness probe.
//!
//! Run: cargo run --release --example pseudodiff

use local_hardy::corpus::standard_corpus;
use local_hardy::grid::Grid;
use local_hardy::maximal::{make_dictionary, DictVariant};
use local_hardy::operators::{boundedness_experiment, psdo_apply, BoundednessMode, OperatorKind, Symbol};
use local_hardy::weights::{HardyParams, WeightDescriptor};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 8.0, 1 << 9)?;
    let corpus = standard_corpus(grid, 7);
    let f = &corpus[1].1; // the bump

    let symbols = [
        Symbol::Identity,
        Symbol::OscillatingMultiplier { t: 1.0 },
        Symbol::Coefficient { k: 1.5, amp: 0.5 },
        Symbol::Mixed { k: 1.5, amp: 0.5, t: 1.0 },
    ];
    println!("symbol degenerations on the bump:");
    for sym in &symbols {
        let out = psdo_apply(f, sym);
        println!("  {:<36} sup |Tf| = {:.5}", sym.describe(), out.sup_norm());
    }
    let ident = psdo_apply(f, &Symbol::Identity);
    let err = f
        .values
        .iter()
        .zip(ident.values.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("  identity round trip: max deviation {:.2e}", err / f.sup_norm());

    // Hardy-to-Hardy ratios under a weight admissible for the damped
    // A_p(phi) class
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1)?;
    let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Central, 0.5, 8.0)?;
    let w = WeightDescriptor::parse("exp:1")?.sample(grid)?;
    println!("\nhardy-to-hardy ratios over the corpus (exp:1):");
    for sym in [Symbol::OscillatingMultiplier { t: 1.0 }, Symbol::Mixed { k: 1.5, amp: 0.5, t: 1.0 }] {
        let rep = boundedness_experiment(
            &OperatorKind::Psdo { symbol: sym.clone() },
            &w,
            params.p,
            &corpus,
            BoundednessMode::HardyToHardy,
            Some((&params, &dict)),
        )?;
        println!("  {:<36} sup ratio {:.4}", sym.describe(), rep.sup_ratio);
    }
    Ok(())
}
