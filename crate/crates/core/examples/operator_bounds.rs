//! The full boundedness harness: strong, weak, and Hardy-space modes for
//! the singular convolution and the commutator over the standard corpus,
//! with refinement stability measured at two grids.
//!
//! Run: cargo run --release --example operator_bounds

use local_hardy::corpus::standard_corpus;
use local_hardy::grid::Grid;
use local_hardy::maximal::{make_dictionary, DictVariant};
use local_hardy::operators::{boundedness_experiment, BoundednessMode, OperatorKind};
use local_hardy::weights::{HardyParams, WeightDescriptor};

fn main() -> local_hardy::Result<()> {
    let params = HardyParams::minimal(1.0, f64::INFINITY, 1.0, 1)?;
    let ops = [
        OperatorKind::SingularT { theta: 1.0, resolved: true },
        OperatorKind::Commutator { theta: 1.0, bmo_symbol: "log".into(), resolved: true },
    ];
    let modes = [
        (BoundednessMode::Strong, 2.0),
        (BoundednessMode::Weak, 1.0),
        (BoundednessMode::HardyToL1, 1.0),
    ];

    for op in &ops {
        println!("{}", op.describe());
        for (mode, p) in &modes {
            let mut sups = Vec::new();
            for m in [1usize << 10, 1 << 11] {
                let grid = Grid::new(1, 8.0, m)?;
                let w = WeightDescriptor::parse("exp:1")?.sample(grid)?;
                let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Central, 0.5, 8.0)?;
                let corpus = standard_corpus(grid, 7);
                let rep = boundedness_experiment(op, &w, *p, &corpus, *mode, Some((&params, &dict)))?;
                sups.push(rep.sup_ratio);
            }
            let drift = (sups[0] - sups[1]).abs() / sups[0].min(sups[1]) * 100.0;
            println!(
                "  {:<14} p = {p}: sup ratio {:9.4} -> {:9.4}  (drift {drift:.1}%)",
                format!("{mode:?}"),
                sups[0],
                sups[1]
            );
        }
        println!();
    }
    Ok(())
}
