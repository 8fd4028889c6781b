//! Critical-index diagnostic: A_p^loc constants per (p, m). On a finite
//! grid every constant is finite, so no single critical exponent can be
//! decided; what the table shows is which p are stable under refinement
//! and which blow up, and the user picks q_w from that.
//!
//! Run: cargo run --release --example critical_index

use local_hardy::weights::{critical_index_diagnostic, WeightDescriptor};

fn main() -> local_hardy::Result<()> {
    let p_sweep = [1.05, 1.25, 1.5, 2.0, 3.0];
    let m_values = [1 << 8, 1 << 9, 1 << 10];

    for (desc, half_width) in [("exp:1", 8.0), ("abspow:0.5", 2.0), ("abspow:1.5", 2.0)] {
        let d = WeightDescriptor::parse(desc)?;
        let rows = critical_index_diagnostic(&d, 1, half_width, &p_sweep, &m_values, 1.0)?;
        println!("{desc} on [-{half_width}, {half_width}]");
        print!("  {:>6}", "p");
        for m in m_values {
            print!("  {:>12}", format!("m = {m}"));
        }
        println!("  verdict");
        for row in rows {
            print!("  {:>6.2}", row.p);
            for c in &row.constants {
                print!("  {c:>12.4}");
            }
            println!("  {}", if row.stable { "stable" } else { "diverging" });
        }
        println!();
    }
    Ok(())
}
