//! Acceptance suite: one PASS/FAIL line per criterion, with its measured
//! values and wall-clock time against the runtime budget.
//!
//! Runs with the optimized test profile; `cargo test --test acceptance`.
//! Pass a criterion number to run only that one.

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thinsets::concentration::{self, frame_sigma, tail_experiment_with_sigma, VariateKind};
use thinsets::experiments::{
    blm_frame, lemma32_envelope, lemma43_fits, run_thm31, standard_frames, ExperimentConfig,
    ExperimentKind, SHIPPED_SEED,
};
use thinsets::polynorm::{luxemburg_psi2, OrliczConfig, TrigPolynomial, WeakNormOptions};
use thinsets::quasiindep::{
    extract_greedy, find_relation, find_relation_of_length, max_qi_subset_exact,
    relation_probability_experiment,
};
use thinsets::rng::{derive_seed, Stream};
use thinsets::spectra::SelectorSchedule;
use thinsets::ucconst::{
    kashin_tzafriri_experiment, sn_operator_norm, thinned_uc_growth, uc_constant, LpConfig,
    SurrogateGeometry,
};

type Outcome = (bool, String);

fn main() {
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let criteria: [(usize, &str, f64, fn() -> Outcome); 12] = [
        (
            1,
            "closed-form Orlicz norm and homogeneity",
            10.0,
            c01_orlicz,
        ),
        (2, "self-bounding condition on 12 frames", 120.0, c02_blm),
        (
            3,
            "deviation bounds, C = 32 and Gaussian C = π²/2",
            300.0,
            c03_tail,
        ),
        (
            4,
            "relation search against brute force",
            60.0,
            c04_relations,
        ),
        (5, "greedy extraction quality", 120.0, c05_extraction),
        (
            6,
            "weak-norm envelope across block sizes",
            300.0,
            c06_envelope,
        ),
        (
            7,
            "relation probability bound and monotonicity",
            180.0,
            c07_relation_probability,
        ),
        (
            8,
            "Dirichlet oracle and translation invariance",
            120.0,
            c08_uc_oracle,
        ),
        (9, "Kashin–Tzafriri growth", 900.0, c09_kt),
        (10, "counting exponents", 30.0, c10_counting),
        (
            11,
            "dyadic-density pipeline and seed campaign",
            600.0,
            c11_thm31,
        ),
        (
            12,
            "α contrast of thinned UC growth",
            1200.0,
            c12_alpha_contrast,
        ),
    ];
    let mut failed = Vec::new();
    for (k, name, budget, f) in criteria {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = f();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs <= budget;
        let pass = ok && in_time;
        println!(
            "{} #{k:<2} {name}: {detail} [{secs:.1}s / {budget:.0}s{}]",
            if pass { "PASS" } else { "FAIL" },
            if in_time { "" } else { ", over budget" }
        );
        if !pass {
            failed.push(k);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn random_poly(rng: &mut ChaCha8Rng) -> TrigPolynomial {
    let len = rng.random_range(1..=24);
    let spread = rng.random_range(1..=200i64);
    TrigPolynomial::from_terms((0..len).map(|_| {
        (
            rng.random_range(-spread..=spread),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        )
    }))
}

fn c01_orlicz() -> Outcome {
    let cfg = OrliczConfig::default();
    let one = luxemburg_psi2(&TrigPolynomial::monomial(0, Complex64::new(1.0, 0.0)), &cfg)
        .unwrap()
        .value;
    let want = 1.0 / LN_2.sqrt();
    let closed_ok = (one - want).abs() <= 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_poly(&mut rng);
        if p.is_zero() {
            continue;
        }
        let lambda = Complex64::from_polar(
            rng.random_range(0.01..100.0),
            rng.random_range(0.0..2.0 * PI),
        );
        let a = luxemburg_psi2(&p, &cfg).unwrap().value;
        let b = luxemburg_psi2(&p.scaled(lambda), &cfg).unwrap().value;
        worst = worst.max((b - lambda.norm() * a).abs() / (lambda.norm() * a));
    }
    (
        closed_ok && worst <= 1e-9,
        format!(
            "‖1‖ = {one:.9} (1/√ln2 = {want:.9}), worst homogeneity error {worst:.2e} (≤ 1e-9)"
        ),
    )
}

fn c02_blm() -> Outcome {
    let mut total = 0;
    let mut worst: f64 = 0.0;
    let frames = standard_frames(SHIPPED_SEED).unwrap();
    for (i, (_, frame)) in frames.iter().enumerate() {
        let r = blm_frame(frame, 10_000, derive_seed(7, Stream::Trial, i as u64)).unwrap();
        total += r.violations;
        if r.bound > 0.0 {
            worst = worst.max(r.max_statistic / r.bound);
        }
    }
    (
        total == 0 && frames.len() == 12,
        format!(
            "{} frames, {total} violations, max statistic / 4σ² = {worst:.4}",
            frames.len()
        ),
    )
}

fn c03_tail() -> Outcome {
    let mut bad = Vec::new();
    let frames = standard_frames(SHIPPED_SEED).unwrap();
    for (i, (name, frame)) in frames.iter().enumerate() {
        let sigma = frame_sigma(frame).unwrap().value;
        let grid = concentration::default_t_grid(sigma, 20);
        for (j, v) in [VariateKind::Rademacher, VariateKind::Gaussian]
            .into_iter()
            .enumerate()
        {
            let r = tail_experiment_with_sigma(
                frame,
                v,
                100_000,
                &grid,
                derive_seed(3, Stream::Trial, (2 * i + j) as u64),
                sigma,
            )
            .unwrap();
            let viol = match v {
                VariateKind::Gaussian => r.violations_23(3.0),
                _ => r.violations_24(3.0),
            };
            if !viol.is_empty() {
                bad.push(format!("{name}/{v:?}"));
            }
        }
    }
    (
        bad.is_empty() && frames.len() == 12,
        format!(
            "{} frames × 2 variates × 10^5 trials, violations at: {bad:?}",
            frames.len()
        ),
    )
}

/// Lengths of all relations among `a`, by enumerating `{−1,0,1}^|a|`.
fn brute_lengths(a: &[i64]) -> Vec<bool> {
    let n = a.len();
    let mut has = vec![false; n + 1];
    let total = 3usize.pow(n as u32);
    for code in 1..total {
        let (mut c, mut sum, mut len) = (code, 0i64, 0);
        for &x in a {
            match c % 3 {
                1 => {
                    sum += x;
                    len += 1;
                }
                2 => {
                    sum -= x;
                    len += 1;
                }
                _ => {}
            }
            c /= 3;
        }
        if sum == 0 {
            has[len] = true;
        }
    }
    has
}

fn random_set(rng: &mut ChaCha8Rng, max_size: usize) -> Vec<i64> {
    let size = rng.random_range(1..=max_size);
    let range = [16usize, 40, 100, 1000][rng.random_range(0..4)].max(size);
    let mut v: Vec<i64> = sample(rng, range, size)
        .into_iter()
        .map(|i| i as i64 + 1)
        .collect();
    v.sort_unstable();
    v
}

fn c04_relations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    let mut with_relation = 0;
    for _ in 0..500 {
        let a = random_set(&mut rng, 12);
        let has = brute_lengths(&a);
        let any = has.iter().any(|&b| b);
        with_relation += usize::from(any);
        let found = find_relation(&a).unwrap();
        if found.is_some() != any || found.as_ref().is_some_and(|r| !valid(r, &a, None)) {
            mismatches += 1;
        }
        for n in 2..=a.len() {
            let r = find_relation_of_length(&a, n).unwrap();
            if r.is_some() != has[n] || r.as_ref().is_some_and(|r| !valid(r, &a, Some(n))) {
                mismatches += 1;
            }
        }
    }
    (
        mismatches == 0,
        format!("500 sets (|A| ≤ 12, {with_relation} with a relation), {mismatches} disagreements"),
    )
}

fn valid(r: &thinsets::quasiindep::Relation, a: &[i64], len: Option<usize>) -> bool {
    let sum: i64 = r.terms().iter().map(|(&k, &s)| k * i64::from(s)).sum();
    sum == 0 && r.terms().keys().all(|k| a.contains(k)) && len.is_none_or(|n| r.len() == n)
}

fn c05_extraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    let mut uncertified = 0;
    for _ in 0..100 {
        let a = random_set(&mut rng, 20);
        let (e, report) = extract_greedy(&a).unwrap();
        let best = max_qi_subset_exact(&a).unwrap();
        worst = worst.min(e.len() as f64 / best.len() as f64);
        if !report.verified_qi || find_relation(&e).unwrap().is_some() {
            uncertified += 1;
        }
    }
    (
        worst >= 0.5 && uncertified == 0,
        format!(
            "100 blocks, min greedy/exact = {worst:.3} (≥ 0.5), {uncertified} uncertified outputs"
        ),
    )
}

fn c06_envelope() -> Outcome {
    let r = lemma32_envelope(&[16, 64, 256, 1024], &WeakNormOptions::default()).unwrap();
    let env: Vec<String> = r
        .rows
        .iter()
        .map(|(n, _, e)| format!("{n}:{e:.3}"))
        .collect();
    (
        r.spread <= 5.0,
        format!("envelope {env:?}, max/min = {:.3} (≤ 5)", r.spread),
    )
}

fn c07_relation_probability() -> Outcome {
    let schedule = SelectorSchedule::dyadic(1.0).unwrap();
    let grid = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0];
    let mut ps = Vec::new();
    let mut dominated = true;
    let mut parts = Vec::new();
    for m in [64u64, 256, 1024] {
        let r = relation_probability_experiment(&schedule, 3, m, 2048, 10_000, 11, &grid).unwrap();
        let bound = (r.smallest_c / 3.0).powi(3) * r.bound_sum;
        dominated &= r.smallest_c.is_finite() && r.empirical <= bound * (1.0 + 1e-12);
        parts.push(format!(
            "M={m}: P={:.4} C*={:.3} discarded {}",
            r.empirical, r.smallest_c, r.discarded
        ));
        ps.push(r.empirical);
    }
    let monotone = ps.windows(2).all(|w| w[1] <= w[0]);
    (
        dominated && monotone,
        format!("{} ; monotone {monotone}", parts.join(", ")),
    )
}

fn c08_uc_oracle() -> Outcome {
    // ‖D₁‖_{L¹} by a midpoint rule on (1/2π)∫|1 + 2cos x| dx.
    let m = 1 << 20;
    let l1: f64 = (0..m)
        .map(|j| (1.0 + 2.0 * (2.0 * PI * (j as f64 + 0.5) / m as f64).cos()).abs())
        .sum::<f64>()
        / m as f64;
    let cfg = LpConfig::default();
    let e: Vec<i64> = (-8..=8).collect();
    let est = sn_operator_norm(&e, 1, &cfg).unwrap();
    let oracle_ok = (est.value - l1).abs() <= 2e-2;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let size = rng.random_range(2..=12);
        let set: Vec<i64> = sample(&mut rng, 48, size)
            .into_iter()
            .map(|i| i as i64 + 1)
            .collect();
        let shift = [1i64, 17][rng.random_range(0..2)];
        let shifted: Vec<i64> = set.iter().map(|k| k + shift).collect();
        let a = uc_constant(&set, &cfg).unwrap().value_lower;
        let b = uc_constant(&shifted, &cfg).unwrap().value_lower;
        worst = worst.max((a - b).abs());
    }
    let shift_ok = worst <= cfg.solver_tol;
    (
        oracle_ok && shift_ok,
        format!(
            "S_1 on {{-8..8}}: {:.5} vs ‖D₁‖₁ = {l1:.5} (|Δ| = {:.4}, tol 0.02, relaxation {:.5}); translation: max |ΔU| = {worst:.1e} over 20 instances",
            est.value,
            (est.value - l1).abs(),
            est.relaxation
        ),
    )
}

fn c09_kt() -> Outcome {
    let r =
        kashin_tzafriri_experiment(&[64, 128, 256, 512], 0.5, 20, &LpConfig::default(), 9).unwrap();
    let medians: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("{}:{:.3}", row.n, row.median_u.unwrap_or(f64::NAN)))
        .collect();
    let s = r.spearman.unwrap_or(f64::NAN);
    (
        s == 1.0,
        format!("median U {medians:?}, Spearman {s:.3} (= 1)"),
    )
}

fn c10_counting() -> Outcome {
    let r = lemma43_fits(1.0, 1.2, 1.5, (3, 8)).unwrap();
    let total = r.total.as_ref().map_or(f64::NAN, |f| f.gamma);
    let block = r.in_block.as_ref().map_or(f64::NAN, |f| f.gamma);
    let e_total = (total - 2.2).abs() / 2.2;
    let e_block = (block - 1.2).abs() / 1.2;
    (
        e_total <= 0.25 && e_block <= 0.25,
        format!(
            "cumulative γ = {total:.3} vs 2.2 ({:.0}% off), in-block γ = {block:.3} vs 1.2 ({:.0}% off); tolerance 25%",
            100.0 * e_total,
            100.0 * e_block
        ),
    )
}

fn c11_thm31() -> Outcome {
    let shipped = run_thm31(&ExperimentConfig::new(ExperimentKind::Thm31, SHIPPED_SEED)).unwrap();
    let failures: Vec<String> = shipped.failures().iter().map(|s| s.to_string()).collect();
    let gamma = shipped
        .assertion("density_gamma")
        .and_then(|a| a.value)
        .unwrap_or(f64::NAN);
    let passes = (0..100u64)
        .filter(|&s| {
            run_thm31(&ExperimentConfig::new(ExperimentKind::Thm31, s))
                .unwrap()
                .passed
        })
        .count();
    (
        shipped.passed && passes >= 90,
        format!(
            "shipped seed {SHIPPED_SEED}: failures {failures:?}, density γ = {gamma:.3}; campaign {passes}/100 seeds pass (≥ 90)"
        ),
    )
}

fn c12_alpha_contrast() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::Thm41, SHIPPED_SEED).resolved();
    let geometry = SurrogateGeometry::new(
        cfg.beta.unwrap(),
        cfg.block_size.unwrap(),
        cfg.n_range.unwrap(),
    )
    .unwrap();
    let (c, trials) = (cfg.c.unwrap(), cfg.trials.unwrap());
    let mut wins = 0;
    for r in 0..20u64 {
        let seed = derive_seed(12, Stream::Trial, r);
        let high = thinned_uc_growth(&geometry, 1.5, c, trials, &cfg.lp, seed).unwrap();
        let low = thinned_uc_growth(&geometry, 0.5, c, trials, &cfg.lp, seed).unwrap();
        let slope =
            |g: &thinsets::ucconst::GrowthReport| g.slope.as_ref().map_or(f64::NAN, |f| f.slope);
        if slope(&high) > slope(&low) {
            wins += 1;
        }
    }
    (
        wins >= 16,
        format!("slope(α=1.5) > slope(α=0.5) in {wins}/20 paired runs (≥ 16)"),
    )
}
