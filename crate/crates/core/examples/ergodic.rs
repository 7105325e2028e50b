//! Ergodic averages along a random dyadic set: the sup over frequencies of
//! `|A_N(t)|` decays as `N` grows.

use thinsets::ergodic::{default_t_grid, growth_fit, uniform_distribution_scan, GrowthModel};
use thinsets::spectra::{sample_set, SelectorSchedule};

fn main() -> thinsets::Result<()> {
    let schedule = SelectorSchedule::dyadic(1.0)?;
    let lambda = sample_set(&schedule, (schedule.k_min, 1 << 18), 3)?;
    let n_list: Vec<u64> = (8..=18).map(|j| 1u64 << j).collect();
    let scan = uniform_distribution_scan(&lambda, &n_list, &default_t_grid(1 << 18))?;
    for r in &scan.rows {
        println!(
            "N = 2^{:<2} count {:>4}  max|A_N| = {:.4} at t = {:.4}",
            r.n.ilog2(),
            r.count,
            r.max_abs,
            r.argmax
        );
    }
    println!("Kendall tau {:.3}", scan.kendall_tau);

    let pts: Vec<(f64, f64)> = n_list
        .iter()
        .map(|&n| (n as f64, lambda.count_up_to(n) as f64))
        .collect();
    let fit = growth_fit(&pts, GrowthModel::PolylogInN)?;
    println!(
        "|Λ ∩ [1,N]| ≈ (log N)^{:.3}  (r² = {:.4})",
        fit.gamma, fit.r_squared
    );
    Ok(())
}
