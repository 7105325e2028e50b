//! Ergodic means, uniform-distribution scans, relative densities and
//! exponent fits for counting laws.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::RandomSetSample;
use crate::stats::{self, LineFit};

/// `A_N(t) = |Λ_N|⁻¹ Σ_{n ∈ Λ_N} e^{int}` with `Λ_N = Λ ∩ [1, N]`.
pub fn ergodic_mean(sample: &RandomSetSample, n: u64, t: f64) -> Result<Complex64> {
    mean_of(sample.slice(1, n), n, t)
}

fn mean_of(elements: &[u64], n: u64, t: f64) -> Result<Complex64> {
    if elements.is_empty() {
        return Err(Error::Undefined(format!("Λ ∩ [1, {n}] is empty")));
    }
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let s: Complex64 = elements
        .iter()
        .map(|&k| Complex64::from_polar(1.0, ((k as f64) * t).rem_euclid(2.0 * PI)))
        .sum();
    Ok(s / elements.len() as f64)
}

/// `t`-grid on `(0, π]` with spacing at most `π / n_max` (so it resolves the
/// low frequencies where `A_N` decays slowest).
pub fn default_t_grid(n_max: u64) -> Vec<f64> {
    let points = (n_max.max(8) as usize).min(1 << 16);
    (1..=points)
        .map(|j| PI * j as f64 / points as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u64,
    /// `max_t |A_N(t)|` over the grid.
    pub max_abs: f64,
    /// Frequency attaining the maximum.
    pub argmax: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformScan {
    pub rows: Vec<ScanRow>,
    /// Kendall tau of the maxima against `N`; negative means decay.
    pub kendall_tau: f64,
}

impl UniformScan {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,t_max_abs,argmax,count")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.10},{:.10},{}",
                r.n, r.max_abs, r.argmax, r.count
            )?;
        }
        Ok(())
    }
}

/// `max_{t ∈ grid} |A_N(t)|` for each `N`, with a decay statistic.
pub fn uniform_distribution_scan(
    sample: &RandomSetSample,
    n_list: &[u64],
    t_grid: &[f64],
) -> Result<UniformScan> {
    if t_grid.iter().any(|&t| t.rem_euclid(2.0 * PI) == 0.0) {
        return Err(Error::Precondition(
            "t grid must exclude multiples of 2π".into(),
        ));
    }
    if t_grid.is_empty() {
        return Err(Error::Precondition("t grid is empty".into()));
    }
    let rows = n_list
        .iter()
        .map(|&n| {
            let el = sample.slice(1, n);
            let vals = t_grid
                .par_iter()
                .map(|&t| mean_of(el, n, t).map(|z| (z.norm(), t)))
                .collect::<Result<Vec<_>>>()?;
            let (max_abs, argmax) =
                vals.into_iter().fold(
                    (f64::NEG_INFINITY, 0.0),
                    |a, b| if b.0 > a.0 { b } else { a },
                );
            Ok(ScanRow {
                n,
                max_abs,
                argmax,
                count: el.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.max_abs).collect();
    Ok(UniformScan {
        kendall_tau: if rows.len() >= 2 {
            stats::kendall_tau(&xs, &ys)
        } else {
            0.0
        },
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub n_list: Vec<u64>,
    /// `|E ∩ [1,N]| / |Λ ∩ [1,N]|`, `None` where `Λ ∩ [1,N]` is empty.
    pub ratios: Vec<Option<f64>>,
    /// Running maximum over the defined ratios (limsup proxy).
    pub running_max: Vec<Option<f64>>,
}

impl DensityReport {
    pub fn last_running_max(&self) -> Option<f64> {
        self.running_max.last().copied().flatten()
    }
}

/// Relative density of `E` in `Λ` along `N_list`. Both sets must be sorted.
pub fn upper_density(e: &[u64], lambda: &[u64], n_list: &[u64]) -> DensityReport {
    debug_assert!(e.windows(2).all(|w| w[0] < w[1]) && lambda.windows(2).all(|w| w[0] < w[1]));
    let count = |s: &[u64], n: u64| s.partition_point(|&k| k <= n) - s.partition_point(|&k| k < 1);
    let mut best: Option<f64> = None;
    let mut ratios = Vec::new();
    let mut running_max = Vec::new();
    for &n in n_list {
        let d = count(lambda, n);
        let r = (d > 0).then(|| count(e, n) as f64 / d as f64);
        if let Some(v) = r {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        ratios.push(r);
        running_max.push(best);
    }
    DensityReport {
        n_list: n_list.to_vec(),
        ratios,
        running_max,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `count ≈ C n^γ`.
    PolyInN,
    /// `count ≈ C (log N)^γ`.
    PolylogInN,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    pub gamma: f64,
    /// Log of the constant `C`.
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Least-squares exponent on log–log (or log–log log) axes.
pub fn growth_fit(points: &[(f64, f64)], model: GrowthModel) -> Result<GrowthFit> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!(
            "growth fit needs ≥ 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Precondition(format!("nonpositive count {y} at {x}")));
    }
    let xs = points
        .iter()
        .map(|&(x, _)| {
            let lx = match model {
                GrowthModel::PolyInN => (x > 0.0).then(|| x.ln()),
                GrowthModel::PolylogInN => (x > 1.0).then(|| x.ln().ln()),
            };
            lx.ok_or_else(|| {
                Error::Precondition(format!("abscissa {x} outside the model's domain"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.ln()).collect();
    let LineFit {
        slope,
        intercept,
        r_squared,
    } = stats::linear_fit(&xs, &ys);
    Ok(GrowthFit {
        model,
        gamma: slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{sample_set, SelectorSchedule};

    fn full(n: u64) -> RandomSetSample {
        let s = SelectorSchedule::constant(1.0)
            .unwrap()
            .with_k_min(1)
            .unwrap();
        sample_set(&s, (1, n), 0).unwrap()
    }

    #[test]
    fn geometric_sum() {
        let s = full(100);
        for &t in &[0.01, 0.3, 2.0, -1.1] {
            let z = ergodic_mean(&s, 100, t).unwrap();
            let e = Complex64::from_polar(1.0, t);
            let want = e * (Complex64::from_polar(1.0, 100.0 * t) - 1.0) / (100.0 * (e - 1.0));
            assert!((z - want).norm() < 1e-12);
        }
        assert_eq!(
            ergodic_mean(&s, 100, 0.0).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let a = ergodic_mean(&s, 50, 0.7).unwrap();
        assert!((ergodic_mean(&s, 50, -0.7).unwrap() - a.conj()).norm() < 1e-14);
    }

    #[test]
    fn empty_mean_is_undefined() {
        let s = SelectorSchedule::constant(1.0).unwrap();
        let sample = sample_set(&s, (20, 30), 0).unwrap();
        assert!(matches!(
            ergodic_mean(&sample, 10, 1.0),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn singleton_does_not_decay() {
        let mut s = full(1);
        s.range = (1, 1 << 12);
        let scan = uniform_distribution_scan(&s, &[16, 256, 4096], &default_t_grid(4096)).unwrap();
        assert!(scan.rows.iter().all(|r| (r.max_abs - 1.0).abs() < 1e-12));
        assert!(scan.kendall_tau >= 0.0);
    }

    #[test]
    fn full_interval_decays() {
        let s = full(4096);
        let scan =
            uniform_distribution_scan(&s, &[64, 256, 1024, 4096], &default_t_grid(4096)).unwrap();
        assert!(scan.kendall_tau < 0.0);
    }

    #[test]
    fn densities() {
        let l: Vec<u64> = (1..=100).filter(|k| k % 3 == 0).collect();
        let d = upper_density(&l, &l, &[10, 50, 100]);
        assert!(d.ratios.iter().all(|r| *r == Some(1.0)));
        let d = upper_density(&[], &l, &[2, 10]);
        assert_eq!(d.ratios, vec![None, Some(0.0)]);
        assert_eq!(d.last_running_max(), Some(0.0));
    }

    #[test]
    fn exact_model_recovery() {
        let pts: Vec<(f64, f64)> = (10..=20)
            .map(|j| {
                let n = 2f64.powi(j);
                (n, n.ln().powi(2))
            })
            .collect();
        let f = growth_fit(&pts, GrowthModel::PolylogInN).unwrap();
        assert!((f.gamma - 2.0).abs() < 1e-6 && (f.r_squared - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = (3..=8).map(|n| (n as f64, (n as f64).powf(2.2))).collect();
        assert!((growth_fit(&pts, GrowthModel::PolyInN).unwrap().gamma - 2.2).abs() < 1e-12);
        assert!(growth_fit(&pts[..2], GrowthModel::PolyInN).is_err());
        assert!(growth_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)], GrowthModel::PolyInN).is_err());
    }
}
