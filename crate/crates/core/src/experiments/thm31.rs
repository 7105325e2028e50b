//! Random set of dyadic density, block statistics, quasi-independent
//! extraction and the resulting density and ergodic diagnostics.

use std::io::{BufWriter, Write};

use serde::Serialize;

use super::{ExperimentConfig, ExperimentKind, Run, RunManifest};
use crate::ergodic::{
    default_t_grid, growth_fit, uniform_distribution_scan, upper_density, GrowthFit, GrowthModel,
};
use crate::error::{Error, Result};
use crate::io::write_set;
use crate::polynorm::psi_a;
use crate::quasiindep::{
    extract_greedy_with, sqrt_property_check, ExtractOptions, ExtractionReport,
};
use crate::rng::{derive_seed, Stream};
use crate::spectra::{block_counts, sample_set, BlockGeometry, RandomSetSample, SelectorSchedule};

/// Largest quasi-independent subsets are computed exactly up to this size in
/// the square-root property check.
const SQRT_SUBSET_SIZE: usize = 12;

/// `p` in the `p`-Rider comparison; `p/(2−p) = 2`.
const RIDER_P: f64 = 4.0 / 3.0;

#[derive(Clone, Debug, Serialize)]
struct BlockRow {
    n: u32,
    start: u64,
    end: u64,
    count: usize,
    lower: f64,
    upper: f64,
    in_window: bool,
    psi: Option<f64>,
    psi_ratio: Option<f64>,
    extracted: usize,
    extraction: Option<ExtractionReport>,
}

#[derive(Serialize)]
struct Summary<'a> {
    blocks: &'a [BlockRow],
    density_fit: Option<&'a GrowthFit>,
    rider_p: f64,
    rider_exponent: f64,
    sqrt_min_ratio: f64,
    sqrt_mean_ratio: f64,
    upper_density: Option<f64>,
    kendall_tau: f64,
}

pub fn run_thm31(config: &ExperimentConfig) -> Result<RunManifest> {
    if config.experiment != ExperimentKind::Thm31 {
        return Err(Error::Config("run_thm31 needs a thm31 config".into()));
    }
    let mut run = Run::new(config);
    run.note(super::SEED_NOTE);
    let outcome = steps(&mut run);
    run.finish(outcome)
}

fn steps(run: &mut Run) -> Result<()> {
    let cfg = run.config().clone();
    let c = cfg.c.expect("resolved");
    let (n_lo, n_hi) = cfg.n_range_or_default();
    let tol = cfg.tolerances.clone();
    if n_lo > n_hi || n_hi > 16 {
        return Err(Error::Config(format!(
            "block range ({n_lo}, {n_hi}) must satisfy n_lo ≤ n_hi ≤ 16"
        )));
    }
    let geometry = BlockGeometry::dyadic((n_lo, n_hi))?;
    let schedule = match &cfg.schedule {
        Some(s) => s.clone(),
        None => SelectorSchedule::dyadic(c)?,
    };

    let lambda = run.step("sample", |run| {
        let range = (1u64 << n_lo, (1u64 << (n_hi + 1)) - 1);
        let s = sample_set(&schedule, range, derive_seed(cfg.seed, Stream::Selector, 0))?;
        run.write("thm31_lambda.set", |w| write_set(&s, w))?;
        Ok(s)
    })?;

    let mut rows = run.step("blocks", |run| {
        let counts = block_counts(&lambda, &geometry)?;
        if counts.iter().all(|&(_, k)| k == 0) {
            return Err(Error::Precondition("every block is empty".into()));
        }
        let mut rows = Vec::new();
        for (n, count) in counts {
            let (start, end) = geometry.block(n);
            let nf = f64::from(n);
            let lower = c / 2.0 * nf * (1.0 - tol.block_count_slack);
            let upper = 2.0 * c * nf * (1.0 + tol.block_count_slack);
            let elems = block_elements(&lambda, start, end);
            let psi = if elems.is_empty() {
                None
            } else {
                Some(psi_a(&elems, &cfg.orlicz)?.value)
            };
            rows.push(BlockRow {
                n,
                start,
                end,
                count,
                lower,
                upper,
                in_window: (lower..=upper).contains(&(count as f64)),
                psi,
                psi_ratio: psi.map(|p| p / (count as f64).sqrt()),
                extracted: 0,
                extraction: None,
            });
        }
        let ok = rows.iter().filter(|r| r.in_window).count() as f64 / rows.len() as f64;
        run.check(
            "block_counts",
            "c n/2 ≤ |Λ_n| ≤ 2cn on most blocks",
            format!(
                "fraction ≥ {} with slack {}",
                tol.block_pass_fraction, tol.block_count_slack
            ),
            Some(ok),
            ok >= tol.block_pass_fraction,
        );
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.psi_ratio).collect();
        let spread = ratios.iter().copied().fold(0.0, f64::max)
            / ratios.iter().copied().fold(f64::INFINITY, f64::min);
        run.check(
            "psi_ratio_spread",
            "Ψ_{Λ_n}/√|Λ_n| stays bounded across nonempty blocks",
            format!("max/min ≤ {}", tol.psi_ratio_spread),
            Some(spread),
            spread <= tol.psi_ratio_spread,
        );
        Ok(rows)
    })?;

    let e_blocks = run.step("extract", |run| {
        let opts = ExtractOptions {
            orlicz: cfg.orlicz,
            ..ExtractOptions::default()
        };
        let mut blocks = Vec::new();
        for row in rows.iter_mut() {
            let elems = block_elements(&lambda, row.start, row.end);
            if elems.is_empty() {
                continue;
            }
            let (e, report) = extract_greedy_with(&elems, &opts)?;
            row.extracted = e.len();
            row.extraction = Some(report);
            blocks.push(e);
        }
        let certified = rows
            .iter()
            .filter_map(|r| r.extraction.as_ref())
            .all(|r| r.verified_qi);
        run.check(
            "extraction_certified",
            "every extracted E_n is certified relation-free",
            "exact".into(),
            None,
            certified,
        );
        Ok(blocks)
    })?;
    let mut e: Vec<u64> = e_blocks.iter().flatten().map(|&k| k as u64).collect();
    e.sort_unstable();

    let sqrt = run.step("sqrt_property", |run| {
        let r = sqrt_property_check(
            &e_blocks,
            cfg.trials.expect("resolved"),
            SQRT_SUBSET_SIZE,
            derive_seed(cfg.seed, Stream::Trial, 1),
        )?;
        run.check(
            "sqrt_property",
            "random A ⊆ E contain a quasi-independent B with |B| ≥ δ√|A|, δ > 0",
            "min |B|/√|A| > 0".into(),
            Some(r.min_ratio),
            r.min_ratio > 0.0,
        );
        Ok(r)
    })?;

    let ends: Vec<u64> = geometry.blocks().map(|(_, (_, end))| end - 1).collect();
    let fit = run.step("density", |run| {
        // The lower half of the blocks is burn-in: E has no elements below
        // 2^{n_lo}, which steepens the log-log slope at the start.
        let burn_in = (n_hi - n_lo).div_ceil(2) as usize;
        let pts: Vec<(f64, f64)> = ends[burn_in..]
            .iter()
            .map(|&n| (n as f64, e.partition_point(|&k| k <= n) as f64))
            .filter(|&(_, y)| y > 0.0)
            .collect();
        if pts.len() < 3 {
            run.skip(
                "density_gamma",
                "|E ∩ [1,N]| grows like (log N)^γ with γ ≈ 2",
                "fewer than 3 points",
            );
            return Ok(None);
        }
        let fit = growth_fit(&pts, GrowthModel::PolylogInN)?;
        let (lo, hi) = tol.density_gamma;
        run.check(
            "density_gamma",
            "|E ∩ [1,N]| grows like (log N)^γ with γ ≈ 2",
            format!("γ ∈ [{lo}, {hi}]"),
            Some(fit.gamma),
            (lo..=hi).contains(&fit.gamma),
        );
        run.write("thm31_density.csv", |w| {
            let mut w = BufWriter::new(w);
            writeln!(w, "N,count")?;
            for (x, y) in &fit.points {
                writeln!(w, "{x},{y}")?;
            }
            Ok(())
        })?;
        Ok(Some(fit))
    })?;
    run.note(format!(
        "p-Rider comparison: density exponent {} against p/(2-p) = {} at p = 4/3",
        fit.as_ref()
            .map_or("n/a".into(), |f| format!("{:.4}", f.gamma)),
        RIDER_P / (2.0 - RIDER_P)
    ));

    let density = run.step("upper_density", |run| {
        let d = upper_density(&e, &lambda.elements, &ends);
        let v = d.last_running_max();
        run.check(
            "upper_density",
            "E has positive upper density in Λ",
            "running max > 0".into(),
            v,
            v.is_some_and(|x| x > 0.0),
        );
        Ok(d)
    })?;

    let scan = run.step("uniform_distribution", |run| {
        let hi_exp = n_hi + 1;
        let lo_exp = (n_lo + 2).max(8).min(hi_exp.saturating_sub(2));
        let n_list: Vec<u64> = (lo_exp..=hi_exp).map(|j| 1u64 << j).collect();
        let grid = default_t_grid(*n_list.last().unwrap());
        let scan = uniform_distribution_scan(&lambda, &n_list, &grid)?;
        run.check(
            "ud_kendall_tau",
            "max_t |A_N(t)| trends downward in N",
            "Kendall tau < 0".into(),
            Some(scan.kendall_tau),
            scan.kendall_tau < 0.0,
        );
        run.write("thm31_ud.csv", |w| scan.write_csv(BufWriter::new(w)))?;
        Ok(scan)
    })?;

    run.step("write", |run| {
        let e_sample = RandomSetSample {
            elements: e.clone(),
            seed: lambda.seed,
            schedule: lambda.schedule.clone(),
            range: lambda.range,
            thinned_from: Some(lambda.seed),
        };
        run.write("thm31_e.set", |w| write_set(&e_sample, w))?;
        run.write("thm31_blocks.csv", |w| {
            let mut w = BufWriter::new(w);
            writeln!(w, "n,count,lower,upper,in_window,psi,psi_ratio,extracted")?;
            for r in &rows {
                let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.10}"));
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    r.count,
                    r.lower,
                    r.upper,
                    r.in_window,
                    opt(r.psi),
                    opt(r.psi_ratio),
                    r.extracted
                )?;
            }
            Ok(())
        })?;
        let summary = Summary {
            blocks: &rows,
            density_fit: fit.as_ref(),
            rider_p: RIDER_P,
            rider_exponent: RIDER_P / (2.0 - RIDER_P),
            sqrt_min_ratio: sqrt.min_ratio,
            sqrt_mean_ratio: sqrt.mean_ratio,
            upper_density: density.last_running_max(),
            kendall_tau: scan.kendall_tau,
        };
        run.write_json("thm31_results.json", &summary)
    })
}

fn block_elements(s: &RandomSetSample, start: u64, end: u64) -> Vec<i64> {
    s.slice(start, end - 1).iter().map(|&k| k as i64).collect()
}
