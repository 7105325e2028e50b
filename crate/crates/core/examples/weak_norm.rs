//! Weak ℓ₂ norm of full dyadic blocks and the envelope `σ ≈ C₀√(n/log n)`.

use std::time::Instant;

use thinsets::concentration::BanachFrame;
use thinsets::polynorm::{weak_l2_norm, OrliczConfig};

fn main() -> thinsets::Result<()> {
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>8}",
        "|A|", "lower", "upper", "C0 estimate", "secs"
    );
    for n in 4..=10u32 {
        let block: Vec<i64> = ((1i64 << n)..(1i64 << (n + 1))).collect();
        let size = block.len() as f64;
        let frame = BanachFrame::exponential(block, OrliczConfig::default())?;
        let t = Instant::now();
        let s = weak_l2_norm(&frame)?;
        println!(
            "{:>6} {:>10.5} {:>10.5} {:>12.5} {:>8.2}",
            size,
            s.lower,
            s.upper,
            s.lower * (size.ln() / size).sqrt(),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
