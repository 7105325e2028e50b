//! Quasi-independent subsets: relation search, exact maxima on small sets
//! and greedy extraction from a random dyadic block.

use thinsets::quasiindep::{
    extract_greedy, find_relation, find_relation_of_length, max_qi_subset_exact,
};
use thinsets::spectra::{sample_set, SelectorSchedule};

fn main() -> thinsets::Result<()> {
    let a = [1, 2, 3, 5, 8, 13, 21];
    if let Some(r) = find_relation(&a)? {
        println!("relation in {a:?}: {:?}", r.terms());
    }
    if let Some(r) = find_relation_of_length(&a, 4)? {
        println!("length 4: {:?}", r.terms());
    }
    println!(
        "largest quasi-independent subset: {:?}",
        max_qi_subset_exact(&a)?
    );

    let lambda = sample_set(&SelectorSchedule::dyadic(2.0)?, (1 << 12, (1 << 13) - 1), 7)?;
    let block: Vec<i64> = lambda.elements.iter().map(|&k| k as i64).collect();
    let (e, report) = extract_greedy(&block)?;
    println!(
        "block [2^12, 2^13): |Λ| = {}, |E| = {}, Ψ_A = {:?}, certified = {}",
        report.input_size, report.output_size, report.psi_a, report.verified_qi
    );
    println!("E = {e:?}");
    Ok(())
}
