//! Uniform-convergence constants of random subsets of `[1, N]` taken with
//! constant density: the median grows with `N`.

use thinsets::ucconst::{kashin_tzafriri_experiment, LpConfig};

fn main() -> thinsets::Result<()> {
    let r = kashin_tzafriri_experiment(&[32, 64, 128], 0.5, 8, &LpConfig::default(), 0)?;
    for row in &r.rows {
        println!("N = {:>4}: median U = {:?}", row.n, row.median_u);
    }
    println!("Spearman: {:?}", r.spearman);
    Ok(())
}
