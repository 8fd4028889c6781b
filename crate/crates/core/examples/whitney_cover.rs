//! Whitney decomposition of a superlevel set: dyadic cubes whose size is
//! proportional to their distance from the complement, the partition of
//! unity subordinate to their dilates, and the JSON export.
//!
//! Run: cargo run --release --example whitney_cover

use local_hardy::grid::{Grid, SampledFunction};
use local_hardy::whitney::{partition_of_unity, superlevel_set, whitney_decompose};

fn main() -> local_hardy::Result<()> {
    let grid = Grid::new(1, 4.0, 1 << 10)?;
    let mf = SampledFunction::from_real_fn(grid, |x| (1.0 - x[0].abs()).max(0.0));
    let open = superlevel_set(&mf, 0.5, 2)?;
    println!(
        "superlevel set at 1/2 of the tent: {} cells, roughly (-1/2, 1/2)",
        open.cell_count()
    );

    let cover = whitney_decompose(&open)?;
    println!(
        "whitney cover: {} cubes, window ({:.2}, {:.2}) x diam, measured overlap {}",
        cover.cubes.len(),
        cover.window.low,
        cover.window.high,
        cover.overlap
    );
    for c in &cover.cubes {
        println!(
            "  center {:+.4}  side {:.4}  dist to complement {:.4}  ratio {:.2}",
            c.cube.center[0],
            c.cube.side,
            c.dist,
            c.dist / c.cube.side
        );
    }

    let pou = partition_of_unity(&cover, &open)?;
    let mut sum_err: f64 = 0.0;
    for idx in grid.indices() {
        if open.inside[idx] {
            let total: f64 = pou.etas.iter().map(|e| e.get(&grid, idx)).sum();
            sum_err = sum_err.max((total - 1.0).abs());
        }
    }
    println!("partition of unity: max |sum eta - 1| on the set = {sum_err:.2e}");
    println!("bump masses: {:?}", (0..pou.etas.len()).map(|k| (pou.eta_mass(k) * 1e4).round() / 1e4).collect::<Vec<_>>());

    std::fs::write("whitney-cover.json", cover.to_json())?;
    println!("wrote whitney-cover.json");
    Ok(())
}
