//! Partial-sum operator norms on `C_E`: the Dirichlet window, a lacunary set,
//! full intervals and a random thin set.

use std::time::Instant;

use thinsets::spectra::{sample_set, SelectorSchedule};
use thinsets::ucconst::{sn_operator_norm, uc_constant, LpConfig};

fn main() -> thinsets::Result<()> {
    let cfg = LpConfig::default();

    let window: Vec<i64> = (-8..=8).collect();
    let s = sn_operator_norm(&window, 1, &cfg)?;
    println!(
        "S_1 on {{-8..8}}: certified {:.5}, relaxation {:.5}, re-measured {:.5}",
        s.value, s.relaxation, s.reevaluated
    );

    let lacunary: Vec<i64> = (0..8).map(|j| 1i64 << j).collect();
    let u = uc_constant(&lacunary, &cfg)?;
    println!("U(2^0..2^7) ≥ {:.5} (best N = {})", u.best(), u.best_n);

    for n in [16i64, 64, 128, 256, 512] {
        let t = Instant::now();
        let u = uc_constant(&(1..=n).collect::<Vec<_>>(), &cfg)?;
        println!(
            "U([1,{n}]) ≥ {:.5}  search {:.5}  trivial upper {:.2}  ({:.1}s)",
            u.value_lower,
            u.value_search,
            u.upper_trivial,
            t.elapsed().as_secs_f64()
        );
    }

    let schedule = SelectorSchedule::constant(0.5)?.with_k_min(1)?;
    let sample = sample_set(&schedule, (1, 512), 7)?;
    let e: Vec<i64> = sample.elements.iter().map(|&k| k as i64).collect();
    let t = Instant::now();
    let u = uc_constant(&e, &cfg)?;
    println!(
        "random half of [1,512], |E| = {}: U ≥ {:.5} ({:.1}s)",
        e.len(),
        u.best(),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
