//! Local Muckenhoupt constants for a few weights: the measured A_p^loc
//! sup over every grid-aligned cube of volume <= 1, the duality identity,
//! and the doubling behavior that separates local from global classes.
//!
//! Run: cargo run --release --example weights_check

use local_hardy::family::CubeFamily;
use local_hardy::grid::Grid;
use local_hardy::weights::{ap_loc_constant, check_weight_properties, WeightDescriptor};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 8.0, 1 << 10)?;
    let fam = CubeFamily::local(1.0, &grid);

    for desc in ["const:1", "exp:1", "powlog:1,1", "abspow:0.5", "abspow:-0.5"] {
        let w = WeightDescriptor::parse(desc)?.sample(grid)?;
        println!("weight {desc}");
        for p in [1.0, 1.5, 2.0, 4.0] {
            let rep = ap_loc_constant(&w, p, 1.0, fam)?;
            println!(
                "  A_{p}^loc = {:10.4}   argmax cube: center {:+.3}, side {:.4}",
                rep.constant, rep.argmax.center[0], rep.argmax.side
            );
        }
        let props = check_weight_properties(&w, 2.0)?;
        println!(
            "  duality: A_p'(w^(1-p')) = {:.6e} vs A_p(w)^(p'-1) = {:.6e}  (rel err {:.2e})",
            props.duality_lhs, props.duality_rhs, props.duality_rel_err
        );
        println!(
            "  doubling: sup w(2Q)/w(Q) = {:.3} over |Q|<1, sup w(Q+1)/w(Q) = {:.3} over |Q|>=1",
            props.small_doubling, props.large_increment
        );
        println!();
    }

    // e^{|x|} is the model non-doubling member of A_1^loc: its global A_1
    // constant would be infinite, the local one is small
    let w = WeightDescriptor::parse("exp:1")?.sample(grid)?;
    let capped = ap_loc_constant(&w, 1.0, 1.0, fam)?.constant;
    let wide = ap_loc_constant(&w, 1.0, 16.0, CubeFamily::local(16.0, &grid))?.constant;
    println!("exp:1 under growing caps: |Q|<=1 gives {capped:.3}, |Q|<=16 gives {wide:.3}");
    Ok(())
}
