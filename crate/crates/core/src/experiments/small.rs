//! Single-purpose experiments: deviation bounds, the self-bounding condition,
//! Kashin–Tzafriri growth, relation probabilities, the weak-norm envelope and
//! counting exponents.

use std::io::BufWriter;

use serde::{Deserialize, Serialize};

use super::{standard_frames, ExperimentConfig, ExperimentKind, Run, RunManifest};
use crate::concentration::{
    self, blm_condition_check_with_sigma, frame_sigma, tail_experiment_with_sigma, BanachFrame,
    VariateKind,
};
use crate::ergodic::{growth_fit, GrowthFit, GrowthModel};
use crate::error::{Error, Result};
use crate::polynorm::{weak_l2_norm_with, WeakNormOptions};
use crate::quasiindep::relation_probability_experiment;
use crate::rng::{derive_seed, Stream};
use crate::spectra::{expected_count, power_block_start, SelectorSchedule};
use crate::ucconst::kashin_tzafriri_experiment;

const TAIL_POINTS: usize = 20;
const C_GRID: [f64; 8] = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0];

fn start(config: &ExperimentConfig, kind: ExperimentKind) -> Result<Run> {
    if config.experiment != kind {
        return Err(Error::Config(format!("expected a {} config", kind.name())));
    }
    Ok(Run::new(config))
}

pub(crate) fn run_tail(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = start(config, ExperimentKind::Tail)?;
    let outcome = (|| {
        let cfg = run.config().clone();
        let k = cfg.tolerances.tail_stderr;
        for (name, frame) in standard_frames(cfg.seed)? {
            run.step(&name, |run| {
                let sigma = frame_sigma(&frame)?.value;
                let grid = concentration::default_t_grid(sigma, TAIL_POINTS);
                let trials = cfg.trials.expect("resolved");
                for (variate, tag) in [
                    (VariateKind::Rademacher, "rademacher"),
                    (VariateKind::Gaussian, "gaussian"),
                ] {
                    let seed = derive_seed(
                        cfg.seed,
                        Stream::Trial,
                        u64::from(variate == VariateKind::Gaussian),
                    );
                    let r =
                        tail_experiment_with_sigma(&frame, variate, trials, &grid, seed, sigma)?;
                    let (bad, what, tol) = match variate {
                        VariateKind::Gaussian => (
                            r.violations_23(k),
                            "P(|Z − EZ| > t) ≤ 2exp(−2t²/(π²σ²))",
                            "two-sided, C = π²/2",
                        ),
                        _ => (
                            r.violations_24(k),
                            "P(Z − EZ > t) ≤ exp(−t²/(32σ²))",
                            "C = 32",
                        ),
                    };
                    run.check(
                        &format!("{name}_{tag}"),
                        what,
                        format!("{tol}; survival ≤ bound + {k}·stderr at all {TAIL_POINTS} points"),
                        Some(bad.len() as f64),
                        bad.is_empty(),
                    );
                    run.write(&format!("tail_{name}_{tag}.csv"), |w| {
                        r.write_csv(BufWriter::new(w))
                    })?;
                }
                Ok(())
            })?;
        }
        Ok(())
    })();
    run.finish(outcome)
}

pub(crate) fn run_blm(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = start(config, ExperimentKind::Blm)?;
    let outcome = (|| {
        let cfg = run.config().clone();
        for (i, (name, frame)) in standard_frames(cfg.seed)?.into_iter().enumerate() {
            run.step(&name, |run| {
                let r = blm_frame(
                    &frame,
                    cfg.trials.expect("resolved"),
                    derive_seed(cfg.seed, Stream::Trial, i as u64),
                )?;
                run.check(
                    &name,
                    "Σᵢ (Z − Z′ᵢ)² 1{Z > Z′ᵢ} ≤ 4σ² on every sample",
                    format!("zero violations, slack {}·σ²", concentration::BLM_SLACK),
                    Some(r.violations as f64),
                    r.violations == 0,
                );
                run.write_json(&format!("blm_{name}.json"), &r)
            })?;
        }
        Ok(())
    })();
    run.finish(outcome)
}

/// The self-bounding check on one frame with its own σ.
pub fn blm_frame(
    frame: &BanachFrame,
    trials: usize,
    seed: u64,
) -> Result<concentration::BlmReport> {
    let sigma = frame_sigma(frame)?.value;
    blm_condition_check_with_sigma(frame, VariateKind::Rademacher, trials, seed, sigma)
}

pub(crate) fn run_kt(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = start(config, ExperimentKind::Kt)?;
    let outcome = (|| {
        let cfg = run.config().clone();
        let n_list = cfg.n_list.clone().expect("resolved");
        run.step("kashin_tzafriri", |run| {
            let r = kashin_tzafriri_experiment(
                &n_list,
                cfg.delta.expect("resolved"),
                cfg.trials.expect("resolved"),
                &cfg.lp,
                cfg.seed,
            )?;
            let min = cfg.tolerances.kt_spearman;
            run.check(
                "kt_spearman",
                "median U(σ(ω)) increases with log(2 + δN/log N)",
                format!("Spearman ≥ {min}"),
                r.spearman,
                r.spearman.is_some_and(|s| s >= min),
            );
            run.write("kt.csv", |w| r.write_csv(BufWriter::new(w)))?;
            run.write_json("kt.json", &r)
        })
    })();
    run.finish(outcome)
}

pub(crate) fn run_relations(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = start(config, ExperimentKind::Relations)?;
    let outcome = (|| {
        let cfg = run.config().clone();
        let schedule = match &cfg.schedule {
            Some(s) => s.clone(),
            None => SelectorSchedule::dyadic(cfg.c.expect("resolved"))?,
        };
        let mut list = cfg.n_list.clone().expect("resolved");
        let truncation = list
            .pop()
            .ok_or_else(|| Error::Config("n_list needs cutoffs and a truncation".into()))?;
        let (len, _) = cfg.n_range_or_default();
        run.step("relation_probability", |run| {
            let mut reports = Vec::new();
            for &m in &list {
                let r = relation_probability_experiment(
                    &schedule,
                    len as usize,
                    m,
                    truncation,
                    cfg.trials.expect("resolved"),
                    derive_seed(cfg.seed, Stream::Trial, 0),
                    &C_GRID,
                )?;
                let dominated = r.smallest_c.is_finite() && {
                    let n = len as f64;
                    r.empirical <= (r.smallest_c / n).powf(n) * r.bound_sum * (1.0 + 1e-12)
                };
                run.check(
                    &format!("dominated_m{m}"),
                    "empirical P ≤ Cⁿ/nⁿ Σ δ_j² σ_j^{n−2} at the smallest admissible C",
                    "exact".into(),
                    Some(r.smallest_c),
                    dominated,
                );
                reports.push(r);
            }
            let monotone = reports.windows(2).all(|w| w[1].empirical <= w[0].empirical);
            run.check(
                "monotone_in_m",
                "P(relation in Λ ∩ ]M, K]) is nonincreasing in M",
                "exact".into(),
                None,
                monotone,
            );
            run.write_json("relations.json", &reports)
        })
    })();
    run.finish(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma32Report {
    /// `(|A|, σ̂(A), σ̂(A)·√(log|A|/|A|))` for the block `A = [|A|, 2|A|)`.
    pub rows: Vec<(usize, f64, f64)>,
    /// `max/min` of the envelope column.
    pub spread: f64,
}

/// Weak ℓ₂ norm of the characters of `[n, 2n)` in `L^{Ψ₂}`, normalized by
/// `√(n/log n)`, for each `n`.
pub fn lemma32_envelope(sizes: &[usize], opts: &WeakNormOptions) -> Result<Lemma32Report> {
    if sizes.iter().any(|&n| n < 2) {
        return Err(Error::Precondition("block sizes must be at least 2".into()));
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let frame =
            BanachFrame::exponential((n as i64..2 * n as i64).collect(), Default::default())?;
        let s = weak_l2_norm_with(&frame, opts)?.value;
        let nf = n as f64;
        rows.push((n, s, s * (nf.ln() / nf).sqrt()));
    }
    let env = rows.iter().map(|r| r.2);
    let spread = env.clone().fold(0.0, f64::max) / env.fold(f64::INFINITY, f64::min);
    Ok(Lemma32Report { rows, spread })
}

pub(crate) fn run_lemma32(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = start(config, ExperimentKind::Lemma32)?;
    let outcome = (|| {
        let cfg = run.config().clone();
        let sizes: Vec<usize> = cfg
            .n_list
            .clone()
            .expect("resolved")
            .iter()
            .map(|&n| n as usize)
            .collect();
        run.step("envelope", |run| {
            let opts = WeakNormOptions {
                seed: cfg.seed,
                ..WeakNormOptions::default()
            };
            let r = lemma32_envelope(&sizes, &opts)?;
            let max = cfg.tolerances.envelope_spread;
            run.check(
                "envelope_spread",
                "σ(A)·√(log|A|/|A|) stays bounded across block sizes",
                format!("max/min ≤ {max}"),
                Some(r.spread),
                r.spread <= max,
            );
            run.write_json("lemma32.json", &r)
        })
    })();
    run.finish(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma43Row {
    pub n: u32,
    pub m_n: u64,
    /// `E|Λ ∩ [k_min, M_n]|`.
    pub total: f64,
    /// `E|Λ ∩ [M_n, M_{n+1})|`.
    pub in_block: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma43Report {
    pub rows: Vec<Lemma43Row>,
    /// Exponent of the cumulative counts in `n`; target `α + 1`.
    pub total: Option<GrowthFit>,
    /// Exponent of the in-block counts in `n`; target `α`.
    pub in_block: Option<GrowthFit>,
}

/// Expected counts of the rider schedule up to and inside the blocks
/// `[M_n, M_{n+1})`, `M_n = n^{βn}`, with exponent fits in `n`.
pub fn lemma43_fits(c: f64, alpha: f64, beta: f64, n_range: (u32, u32)) -> Result<Lemma43Report> {
    let schedule = SelectorSchedule::rider(c, alpha)?;
    let mut rows = Vec::new();
    for n in n_range.0..=n_range.1 {
        let (Some(m), Some(m_next)) = (power_block_start(n, beta), power_block_start(n + 1, beta))
        else {
            return Err(Error::Config(format!("M_{} overflows 64 bits", n + 1)));
        };
        if m < schedule.k_min {
            continue;
        }
        rows.push(Lemma43Row {
            n,
            m_n: m,
            total: expected_count(&schedule, (schedule.k_min, m))?.value,
            in_block: expected_count(&schedule, (m, m_next - 1))?.value,
        });
    }
    let fit = |f: fn(&Lemma43Row) -> f64| -> Result<Option<GrowthFit>> {
        if rows.len() < 3 {
            return Ok(None);
        }
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (f64::from(r.n), f(r))).collect();
        growth_fit(&pts, GrowthModel::PolyInN).map(Some)
    };
    Ok(Lemma43Report {
        total: fit(|r| r.total)?,
        in_block: fit(|r| r.in_block)?,
        rows,
    })
}

pub(crate) fn run_lemma43(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = start(config, ExperimentKind::Lemma43)?;
    let outcome = (|| {
        let cfg = run.config().clone();
        let alpha = cfg.alpha.expect("resolved");
        run.step("expected_counts", |run| {
            let r = lemma43_fits(
                cfg.c.expect("resolved"),
                alpha,
                cfg.beta.expect("resolved"),
                cfg.n_range_or_default(),
            )?;
            super::thm41::record_fits(run, &r, alpha, cfg.tolerances.exponent_rel);
            run.write_json("lemma43.json", &r)
        })
    })();
    run.finish(outcome)
}
