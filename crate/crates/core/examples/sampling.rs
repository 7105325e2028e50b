//! Selector sampling: dyadic and rider schedules, block counts against their
//! expectations, and thinning to a sparser schedule.

use thinsets::spectra::{
    block_counts, expected_count, sample_set, thin, BlockGeometry, SelectorSchedule,
};

fn main() -> thinsets::Result<()> {
    let dyadic = SelectorSchedule::dyadic(1.0)?;
    let geometry = BlockGeometry::dyadic((4, 14))?;
    let lambda = sample_set(&dyadic, (16, (1 << 15) - 1), 0)?;
    println!("dyadic c=1 on [16, 2^15): {} elements", lambda.len());
    println!("{:>4} {:>7} {:>9}", "n", "count", "expected");
    for (n, count) in block_counts(&lambda, &geometry)? {
        let (a, b) = geometry.block(n);
        println!(
            "{n:>4} {count:>7} {:>9.2}",
            expected_count(&dyadic, (a, b - 1))?.value
        );
    }

    // Halving the mean keeps a subset of the same draw.
    let half = thin(&lambda, &SelectorSchedule::dyadic(0.5)?, 1)?;
    let nested = half
        .elements
        .iter()
        .all(|k| lambda.elements.binary_search(k).is_ok());
    println!(
        "thinned to c=0.5: {} elements, subset of Λ: {nested}",
        half.len()
    );

    let rider = SelectorSchedule::rider(1.0, 1.2)?;
    let r = sample_set(&rider, (rider.k_min, 1 << 16), 0)?;
    let e = expected_count(&rider, (rider.k_min, 1 << 16))?;
    println!(
        "{}: {} elements up to 2^16, expected {:.1} ({:?})",
        rider.label(),
        r.len(),
        e.value,
        e.method
    );
    Ok(())
}
