//! Runs the dyadic-density pipeline over many seeds and reports the pass
//! rate of every assertion.
//!
//! `cargo run --release --example thm31_campaign -- [seeds]`

use std::collections::BTreeMap;

use thinsets::experiments::{run_thm31, ExperimentConfig, ExperimentKind, Status};

fn main() -> thinsets::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .map_or(100, |s| s.parse().expect("seed count"));
    let mut passes: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut all = 0;
    let mut first_pass = None;
    for seed in 0..seeds {
        let m = run_thm31(&ExperimentConfig::new(ExperimentKind::Thm31, seed))?;
        for a in &m.assertions {
            let e = passes.entry(a.name.clone()).or_default();
            e.1 += 1;
            if a.status == Status::Pass {
                e.0 += 1;
            }
        }
        if m.passed {
            all += 1;
            first_pass.get_or_insert(seed);
        }
    }
    for (name, (p, n)) in &passes {
        println!("{name:<24} {p}/{n}");
    }
    println!("all assertions: {all}/{seeds} seeds; first passing seed {first_pass:?}");
    Ok(())
}
