//! Deviation bounds for random sums in a few Banach frames: empirical tails
//! against the sub-Gaussian bounds and the self-bounding statistic.

use thinsets::concentration::{
    blm_condition_check_with_sigma, default_t_grid, frame_sigma, tail_experiment_with_sigma,
    VariateKind,
};
use thinsets::experiments::standard_frames;

fn main() -> thinsets::Result<()> {
    println!(
        "{:<16} {:>8} {:>10} {:>7} {:>7} {:>10}",
        "frame", "σ", "E‖Z‖", "viol R", "viol G", "BLM ratio"
    );
    for (name, frame) in standard_frames(0)?.into_iter().step_by(2) {
        let sigma = frame_sigma(&frame)?.value;
        let grid = default_t_grid(sigma, 20);
        let rad =
            tail_experiment_with_sigma(&frame, VariateKind::Rademacher, 20_000, &grid, 1, sigma)?;
        let gauss =
            tail_experiment_with_sigma(&frame, VariateKind::Gaussian, 20_000, &grid, 2, sigma)?;
        let blm = blm_condition_check_with_sigma(&frame, VariateKind::Rademacher, 5_000, 3, sigma)?;
        println!(
            "{:<16} {:>8.4} {:>10.4} {:>7} {:>7} {:>10.4}",
            name,
            sigma,
            rad.mean_z,
            rad.violations_24(3.0).len(),
            gauss.violations_23(3.0).len(),
            blm.max_statistic / blm.bound
        );
    }
    Ok(())
}
