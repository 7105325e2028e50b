//! Rider-schedule construction: counting exponents, thinned UC growth with
//! an α contrast, and short-relation probabilities.

use std::io::BufWriter;

use serde::Serialize;

use super::small::lemma43_fits;
use super::{ExperimentConfig, ExperimentKind, Run, RunManifest};
use crate::error::{Error, Result};
use crate::quasiindep::{relation_probability_experiment, RelationProbabilityReport};
use crate::rng::{derive_seed, Stream};
use crate::spectra::{power_block_start, SelectorSchedule};
use crate::ucconst::{thinned_uc_growth, GrowthReport, SurrogateGeometry};

/// Upper end of the sampled range in the relation experiment.
const RELATION_TRUNCATION: u64 = 2048;
const RELATION_TRIALS: usize = 2000;
const C_GRID: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Serialize)]
struct Summary<'a> {
    high: &'a GrowthReport,
    low: &'a GrowthReport,
    relations: &'a [RelationProbabilityReport],
}

pub fn run_thm41(config: &ExperimentConfig) -> Result<RunManifest> {
    if config.experiment != ExperimentKind::Thm41 {
        return Err(Error::Config("run_thm41 needs a thm41 config".into()));
    }
    let mut run = Run::new(config);
    run.note(super::SEED_NOTE);
    let outcome = steps(&mut run);
    run.finish(outcome)
}

fn steps(run: &mut Run) -> Result<()> {
    let cfg = run.config().clone();
    let c = cfg.c.expect("resolved");
    let alpha = cfg.alpha.expect("resolved");
    let alpha_low = cfg.alpha_low.expect("resolved");
    let beta = cfg.beta.expect("resolved");
    let n_range = cfg.n_range_or_default();
    let tol = cfg.tolerances.clone();
    if alpha_low >= alpha {
        return Err(Error::Config(format!(
            "alpha_low = {alpha_low} must be below alpha = {alpha}"
        )));
    }

    run.step("counting_exponents", |run| {
        let report = lemma43_fits(c, alpha, beta, n_range)?;
        record_fits(run, &report, alpha, tol.exponent_rel);
        run.write_json("thm41_counts.json", &report)
    })?;

    let geometry = SurrogateGeometry::new(beta, cfg.block_size.expect("resolved"), n_range)?;
    run.note("UC growth runs on surrogate blocks of equal size, not on [M_n, M_{n+1})");
    let trials = cfg.trials.expect("resolved");
    let seed = derive_seed(cfg.seed, Stream::Trial, 41);
    let (high, low) = run.step("thinned_uc_growth", |run| {
        let high = thinned_uc_growth(&geometry, alpha, c, trials, &cfg.lp, seed)?;
        let low = thinned_uc_growth(&geometry, alpha_low, c, trials, &cfg.lp, seed)?;
        let inv = "median UC bound of thinned blocks grows faster in n for the larger α";
        match (&high.slope, &low.slope) {
            (Some(h), Some(l)) => run.check(
                "alpha_contrast",
                inv,
                format!("slope(α={alpha}) > slope(α={alpha_low})"),
                Some(h.slope - l.slope),
                h.slope > l.slope,
            ),
            _ => run.skip("alpha_contrast", inv, "fewer than two blocks with data"),
        }
        Ok((high, low))
    })?;

    let relations = run.step("relations", |run| {
        let schedule = SelectorSchedule::rider(c, alpha)?;
        let cutoffs: Vec<u64> = [n_range.0, n_range.0 + 1]
            .iter()
            .filter_map(|&n| power_block_start(n, beta))
            .map(|m| m.max(schedule.k_min - 1))
            .filter(|&m| m < RELATION_TRUNCATION)
            .collect();
        let mut reports = Vec::new();
        for len in [3usize, 4] {
            let mut series: Vec<RelationProbabilityReport> = Vec::new();
            for &m in std::iter::once(&(schedule.k_min - 1)).chain(&cutoffs) {
                series.push(relation_probability_experiment(
                    &schedule,
                    len,
                    m,
                    RELATION_TRUNCATION,
                    RELATION_TRIALS,
                    derive_seed(cfg.seed, Stream::Trial, len as u64),
                    &C_GRID,
                )?);
            }
            let monotone = series.windows(2).all(|w| w[1].hits <= w[0].hits);
            run.check(
                &format!("relations_monotone_n{len}"),
                "P(relation of length n in Λ ∩ ]M, K]) is nonincreasing in M",
                "exact on shared selectors".into(),
                series.last().map(|r| r.empirical),
                monotone,
            );
            reports.extend(series);
        }
        Ok(reports)
    })?;

    run.step("write", |run| {
        run.write("thm41_growth_high.csv", |w| {
            growth_csv(&high, BufWriter::new(w))
        })?;
        run.write("thm41_growth_low.csv", |w| {
            growth_csv(&low, BufWriter::new(w))
        })?;
        run.write_json(
            "thm41_results.json",
            &Summary {
                high: &high,
                low: &low,
                relations: &relations,
            },
        )
    })
}

pub(crate) fn record_fits(run: &mut Run, report: &super::Lemma43Report, alpha: f64, rel: f64) {
    let cases = [
        (
            "count_exponent_total",
            "E|Λ_{M_n}| ≈ n^{α+1}",
            report.total.as_ref(),
            alpha + 1.0,
        ),
        (
            "count_exponent_block",
            "E|Λ*_n| ≈ n^α",
            report.in_block.as_ref(),
            alpha,
        ),
    ];
    for (name, inv, fit, target) in cases {
        match fit {
            Some(f) => {
                let err = (f.gamma - target).abs() / target;
                run.check(
                    name,
                    inv,
                    format!("|γ − {target}|/{target} ≤ {rel}"),
                    Some(f.gamma),
                    err <= rel,
                );
            }
            None => run.skip(name, inv, "fewer than 3 block indices"),
        }
    }
}

fn growth_csv<W: std::io::Write>(r: &GrowthReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "n,q_n,curve_nominal,curve_realized,shape_ratio,median_U,mean_size"
    )?;
    for row in &r.rows {
        let mean_size = row.sizes.iter().sum::<usize>() as f64 / row.sizes.len().max(1) as f64;
        writeln!(
            w,
            "{},{:.10},{:.10},{:.10},{:.10},{},{:.4}",
            row.n,
            row.q_n,
            row.curve_nominal,
            row.curve_realized,
            row.shape_ratio,
            row.median_u.map_or(String::new(), |v| format!("{v:.10}")),
            mean_size
        )?;
    }
    w.flush()?;
    Ok(())
}
