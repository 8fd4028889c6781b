//! Finite atomic decomposition: decompose a finite atom combination, keep
//! the index set |i| + |k| <= K, and split the remainder over unit-scale
//! cubes of the support box, each piece a valid atom with coefficient
//! epsilon = N_0^{-1/p}.
//!
//! Run: cargo run --release --example finite_atoms

use local_hardy::atoms::{finite_decompose, haar_atom, validate_atom, AtomTerm};
use local_hardy::grid::Grid;
use local_hardy::maximal::{make_dictionary, DictVariant};
use local_hardy::weights::{HardyParams, Weight};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 8.0, 1 << 10)?;
    let weight = Weight::exponential(grid, 1.0);
    // finite decompositions need q < inf
    let params = HardyParams::new(1.0, 2.0, 0, 2, 1.0, 1)?;
    let dict = make_dictionary(params.n_grand, 1, 6, 2, DictVariant::Wide, 0.5, 8.0)?;

    let input = vec![
        AtomTerm { coeff: 1.0, height: 0, atom: haar_atom(grid, &weight, -0.8, 0.9, params.p)? },
        AtomTerm { coeff: 0.6, height: 0, atom: haar_atom(grid, &weight, 0.1, 0.5, params.p)? },
        AtomTerm { coeff: 0.3, height: 0, atom: haar_atom(grid, &weight, 0.9, 1.4, params.p)? },
    ];
    println!("input: 3 oscillation atoms, coefficient p-sum = {:.3}", 1.0f64 + 0.6 + 0.3);

    for k in [10usize, 25, 60] {
        match finite_decompose(&input, &weight, &params, &dict, k) {
            Ok(fin) => {
                let rem_ok = fin
                    .remainder_atoms
                    .iter()
                    .all(|t| validate_atom(&t.atom, &weight).pass);
                println!(
                    "K = {k:3}: kept {:3} atoms, remainder split over N0 = {} cubes (eps = {:.3}), \
                     finite norm {:.3}, remainder atoms valid: {rem_ok}",
                    fin.kept.len(),
                    fin.n0,
                    fin.epsilon,
                    fin.finite_norm
                );
            }
            Err(e) => println!("K = {k:3}: {e}"),
        }
    }
    Ok(())
}
