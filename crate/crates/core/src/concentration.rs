//! Monte Carlo checks of deviation inequalities for `Z = ‖Σ Xⱼ vⱼ‖`.
//!
//! Two ambient spaces are supported: `ℝᵐ` with the sup norm, and the span of
//! characters `e_k` inside `L^{Ψ₂}(𝕋)`.

use std::collections::HashSet;
use std::f64::consts::{LN_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynorm::{grid_values, solve_luxemburg, weak_l2_norm, NormEstimate, OrliczConfig};
use crate::rng::{trial_rng, Stream};
use crate::spectra::SelectorSchedule;
use crate::stats::{self, Z99};

/// Vectors `v₁..vₙ` in a Banach space whose norm we can evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum BanachFrame {
    /// Rows of `vectors` live in `(ℝᵐ, ‖·‖_∞)`.
    #[serde(rename = "coordinate_sup")]
    Coordinate { vectors: Vec<Vec<f64>> },
    /// `vⱼ = e_{kⱼ}` in `L^{Ψ₂}` with normalized Haar measure.
    #[serde(rename = "exp_psi2")]
    Exponential {
        frequencies: Vec<i64>,
        config: OrliczConfig,
    },
}

impl BanachFrame {
    pub fn coordinate(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Precondition(
                "coordinate frame needs n ≥ 1 vectors of one positive dimension".into(),
            ));
        }
        Ok(Self::Coordinate { vectors })
    }

    pub fn exponential(frequencies: Vec<i64>, config: OrliczConfig) -> Result<Self> {
        config.validate()?;
        if frequencies.is_empty() {
            return Err(Error::Precondition("exponential frame is empty".into()));
        }
        let distinct: HashSet<_> = frequencies.iter().collect();
        if distinct.len() != frequencies.len() {
            return Err(Error::Precondition(
                "frame frequencies must be distinct".into(),
            ));
        }
        let lo = *frequencies.iter().min().unwrap();
        let hi = *frequencies.iter().max().unwrap();
        config.checked_points_for(hi.abs_diff(lo))?;
        Ok(Self::Exponential {
            frequencies,
            config,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Coordinate { vectors } => vectors.len(),
            Self::Exponential { frequencies, .. } => frequencies.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σⱼ ‖vⱼ‖²`.
    pub fn strong_norm_sq(&self) -> f64 {
        match self {
            Self::Coordinate { vectors } => vectors
                .iter()
                .map(|v| v.iter().fold(0.0f64, |a, x| a.max(x.abs())).powi(2))
                .sum(),
            Self::Exponential { frequencies, .. } => frequencies.len() as f64 / LN_2,
        }
    }

    /// The frame with every vector negated.
    pub fn negated(&self) -> Self {
        match self {
            Self::Coordinate { vectors } => Self::Coordinate {
                vectors: vectors
                    .iter()
                    .map(|v| v.iter().map(|x| -x).collect())
                    .collect(),
            },
            Self::Exponential { .. } => self.clone(),
        }
    }

    /// `‖Σ xⱼ vⱼ‖` for real coefficients `x`.
    pub fn norm_of_combination(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.len() {
            return Err(Error::Precondition(format!(
                "expected {} coefficients, got {}",
                self.len(),
                x.len()
            )));
        }
        let ev = Evaluator::new(self);
        let state = ev.combine(x);
        Ok(ev.norm(&state, None))
    }
}

enum State {
    Coord(Vec<f64>),
    Exp(Vec<Complex64>),
}

/// Precomputed evaluation data for repeated norm computations on one frame.
enum Evaluator<'a> {
    Coord {
        vectors: &'a [Vec<f64>],
    },
    Exp {
        offsets: Vec<usize>,
        len: usize,
        config: &'a OrliczConfig,
        twiddle: Vec<Complex64>,
    },
}

impl<'a> Evaluator<'a> {
    fn new(frame: &'a BanachFrame) -> Self {
        match frame {
            BanachFrame::Coordinate { vectors } => Self::Coord { vectors },
            BanachFrame::Exponential {
                frequencies,
                config,
            } => {
                let lo = *frequencies.iter().min().unwrap();
                let hi = *frequencies.iter().max().unwrap();
                let len = config.points_for((hi - lo) as u64);
                let twiddle = (0..len)
                    .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / len as f64))
                    .collect();
                Self::Exp {
                    offsets: frequencies
                        .iter()
                        .map(|k| (k - lo) as usize % len)
                        .collect(),
                    len,
                    config,
                    twiddle,
                }
            }
        }
    }

    fn combine(&self, x: &[f64]) -> State {
        match self {
            Self::Coord { vectors } => {
                let mut acc = vec![0.0; vectors[0].len()];
                for (v, &xj) in vectors.iter().zip(x) {
                    for (a, vi) in acc.iter_mut().zip(v) {
                        *a += xj * vi;
                    }
                }
                State::Coord(acc)
            }
            Self::Exp { offsets, len, .. } => State::Exp(grid_values(
                offsets
                    .iter()
                    .zip(x)
                    .map(|(&p, &xj)| (p as i64, Complex64::new(xj, 0.0))),
                *len,
            )),
        }
    }

    fn norm(&self, state: &State, guess: Option<f64>) -> f64 {
        match (self, state) {
            (Self::Coord { .. }, State::Coord(acc)) => {
                acc.iter().fold(0.0f64, |a, x| a.max(x.abs()))
            }
            (Self::Exp { config, .. }, State::Exp(f)) => {
                let w: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
                solve_luxemburg(&w, config.bisection_tol, config.exponent_clamp, guess).value
            }
            _ => unreachable!("state built by a different evaluator"),
        }
    }

    /// Norm after replacing coefficient `j` by `x_j + d`.
    fn norm_with_change(&self, state: &State, j: usize, d: f64, guess: f64) -> f64 {
        match (self, state) {
            (Self::Coord { vectors }, State::Coord(acc)) => acc
                .iter()
                .zip(&vectors[j])
                .fold(0.0f64, |a, (s, v)| a.max((s + d * v).abs())),
            (
                Self::Exp {
                    offsets,
                    len,
                    config,
                    twiddle,
                },
                State::Exp(f),
            ) => {
                let p = offsets[j];
                let w: Vec<f64> = f
                    .iter()
                    .enumerate()
                    .map(|(i, z)| (z + twiddle[(p * i) % len] * d).norm_sqr())
                    .collect();
                solve_luxemburg(&w, config.bisection_tol, config.exponent_clamp, Some(guess)).value
            }
            _ => unreachable!("state built by a different evaluator"),
        }
    }
}

/// Distribution of the coefficients `Xⱼ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariateKind {
    Rademacher,
    UniformPm1,
    Gaussian,
}

impl VariateKind {
    pub fn is_bounded(self) -> bool {
        !matches!(self, Self::Gaussian)
    }

    pub fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::UniformPm1 => rng.random_range(-1.0..=1.0),
            Self::Gaussian => rng.sample(StandardNormal),
        }
    }

    fn draw_vec(self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// One draw of `Z = ‖Σ Xⱼ vⱼ‖`.
pub fn sample_z(frame: &BanachFrame, variate: VariateKind, seed: u64) -> f64 {
    let mut rng = trial_rng(seed, Stream::Trial, 0);
    let x = variate.draw_vec(&mut rng, frame.len());
    let ev = Evaluator::new(frame);
    ev.norm(&ev.combine(&x), None)
}

fn draw_many(frame: &BanachFrame, variate: VariateKind, trials: usize, seed: u64) -> Vec<f64> {
    let ev = Evaluator::new(frame);
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, Stream::Trial, i as u64);
            let x = variate.draw_vec(&mut rng, frame.len());
            ev.norm(&ev.combine(&x), None)
        })
        .collect()
}

/// Survival estimates against the analytic deviation bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub variate: VariateKind,
    pub t_grid: Vec<f64>,
    /// `P(Z − ÊZ > t)`.
    pub empirical_survival: Vec<f64>,
    pub mc_stderr: Vec<f64>,
    /// `P(ÊZ − Z > t)`, measured only.
    pub lower_survival: Vec<f64>,
    /// `P(|Z − ÊZ| > t)`.
    pub two_sided_survival: Vec<f64>,
    /// `exp(−t²/(32σ²))`.
    pub bound_24: Vec<f64>,
    /// `2exp(−t²/(8Σ‖vⱼ‖²))`.
    pub bound_21: Vec<f64>,
    /// `2exp(−t²/((π²/2)σ²))`, Gaussian runs only.
    pub bound_23: Option<Vec<f64>>,
    pub trials: usize,
    pub mean_z: f64,
    pub sigma: f64,
    pub strong_norm_sq: f64,
}

/// Grid indices `i` where `survival[i] > bound[i] + k·stderr[i]`.
pub fn bound_violations(survival: &[f64], stderr: &[f64], bound: &[f64], k: f64) -> Vec<usize> {
    (0..survival.len())
        .filter(|&i| survival[i] > bound[i] + k * stderr[i])
        .collect()
}

impl TailReport {
    pub fn violations_24(&self, k: f64) -> Vec<usize> {
        bound_violations(&self.empirical_survival, &self.mc_stderr, &self.bound_24, k)
    }

    pub fn violations_21(&self, k: f64) -> Vec<usize> {
        bound_violations(&self.empirical_survival, &self.mc_stderr, &self.bound_21, k)
    }

    /// Checked against the two-sided survival, which the Gaussian bound controls.
    pub fn violations_23(&self, k: f64) -> Vec<usize> {
        match &self.bound_23 {
            Some(b) => {
                let se: Vec<f64> = self
                    .two_sided_survival
                    .iter()
                    .map(|&p| (p * (1.0 - p) / self.trials as f64).sqrt())
                    .collect();
                bound_violations(&self.two_sided_survival, &se, b, k)
            }
            None => Vec::new(),
        }
    }

    /// CSV rows `t,survival,stderr,bound_24,bound_21,bound_23`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,survival,stderr,bound_24,bound_21,bound_23")?;
        for i in 0..self.t_grid.len() {
            let b23 = self
                .bound_23
                .as_ref()
                .map_or(String::new(), |b| format!("{:.10e}", b[i]));
            writeln!(
                out,
                "{},{:.10e},{:.10e},{:.10e},{:.10e},{}",
                self.t_grid[i],
                self.empirical_survival[i],
                self.mc_stderr[i],
                self.bound_24[i],
                self.bound_21[i],
                b23
            )?;
        }
        Ok(())
    }
}

/// `points` evenly spaced values in `[0, 8σ]`.
pub fn default_t_grid(sigma: f64, points: usize) -> Vec<f64> {
    let top = 8.0 * sigma;
    (0..points)
        .map(|i| top * i as f64 / (points.max(2) - 1) as f64)
        .collect()
}

/// The σ used in the bounds: exact for coordinate frames, the ascent lower
/// bound for exponential frames. A smaller σ only tightens the bounds.
pub fn frame_sigma(frame: &BanachFrame) -> Result<NormEstimate> {
    weak_l2_norm(frame)
}

pub fn tail_experiment(
    frame: &BanachFrame,
    variate: VariateKind,
    trials: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<TailReport> {
    let sigma = frame_sigma(frame)?.value;
    tail_experiment_with_sigma(frame, variate, trials, t_grid, seed, sigma)
}

pub fn tail_experiment_with_sigma(
    frame: &BanachFrame,
    variate: VariateKind,
    trials: usize,
    t_grid: &[f64],
    seed: u64,
    sigma: f64,
) -> Result<TailReport> {
    if trials == 0 {
        return Err(Error::Precondition(
            "tail experiment needs trials ≥ 1".into(),
        ));
    }
    let z = draw_many(frame, variate, trials, seed);
    let mean_z = stats::mean(&z);
    let strong = frame.strong_norm_sq();
    let tf = trials as f64;
    let frac = |pred: &dyn Fn(f64) -> bool| z.iter().filter(|&&v| pred(v)).count() as f64 / tf;
    let mut report = TailReport {
        variate,
        t_grid: t_grid.to_vec(),
        empirical_survival: Vec::new(),
        mc_stderr: Vec::new(),
        lower_survival: Vec::new(),
        two_sided_survival: Vec::new(),
        bound_24: Vec::new(),
        bound_21: Vec::new(),
        bound_23: (variate == VariateKind::Gaussian).then(Vec::new),
        trials,
        mean_z,
        sigma,
        strong_norm_sq: strong,
    };
    for &t in t_grid {
        let p = frac(&|v| v - mean_z > t);
        report.empirical_survival.push(p);
        report.mc_stderr.push((p * (1.0 - p) / tf).sqrt());
        report.lower_survival.push(frac(&|v| mean_z - v > t));
        report
            .two_sided_survival
            .push(frac(&|v| (v - mean_z).abs() > t));
        report
            .bound_24
            .push(gaussian_tail(t, 32.0 * sigma * sigma, 1.0));
        report.bound_21.push(gaussian_tail(t, 8.0 * strong, 2.0));
        if let Some(b) = report.bound_23.as_mut() {
            b.push(gaussian_tail(t, PI * PI / 2.0 * sigma * sigma, 2.0));
        }
    }
    Ok(report)
}

/// `min(1, scale·exp(−t²/denom))`.
fn gaussian_tail(t: f64, denom: f64, scale: f64) -> f64 {
    if denom == 0.0 {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    (scale * (-t * t / denom).exp()).min(1.0)
}

/// Outcome of the self-bounding check `Σᵢ (Z − Z′ᵢ)² 1{Z > Z′ᵢ} ≤ 4σ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlmReport {
    pub max_statistic: f64,
    pub bound: f64,
    pub violations: usize,
    pub trials: usize,
    pub sigma: f64,
}

/// Relative slack on the `4σ²` bound for floating-point noise.
pub const BLM_SLACK: f64 = 1e-8;

pub fn blm_condition_check(
    frame: &BanachFrame,
    variate: VariateKind,
    trials: usize,
    seed: u64,
) -> Result<BlmReport> {
    let sigma = frame_sigma(frame)?.value;
    blm_condition_check_with_sigma(frame, variate, trials, seed, sigma)
}

pub fn blm_condition_check_with_sigma(
    frame: &BanachFrame,
    variate: VariateKind,
    trials: usize,
    seed: u64,
    sigma: f64,
) -> Result<BlmReport> {
    if !variate.is_bounded() {
        return Err(Error::Precondition(
            "the self-bounding check needs |Xⱼ| ≤ 1; gaussian variates are unbounded".into(),
        ));
    }
    let n = frame.len();
    let ev = Evaluator::new(frame);
    let stats: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, Stream::Trial, i as u64);
            let x = variate.draw_vec(&mut rng, n);
            let xp = variate.draw_vec(&mut rng, n);
            blm_statistic(&ev, &x, &xp)
        })
        .collect();
    Ok(summarize_blm(&stats, sigma))
}

fn summarize_blm(stats: &[f64], sigma: f64) -> BlmReport {
    let bound = 4.0 * sigma * sigma;
    let limit = bound + BLM_SLACK * sigma * sigma;
    BlmReport {
        max_statistic: stats.iter().copied().fold(0.0, f64::max),
        bound,
        violations: stats.iter().filter(|&&s| s > limit).count(),
        trials: stats.len(),
        sigma,
    }
}

fn blm_statistic(ev: &Evaluator<'_>, x: &[f64], xp: &[f64]) -> f64 {
    let state = ev.combine(x);
    let z = ev.norm(&state, None);
    let mut total = 0.0;
    for j in 0..x.len() {
        let d = xp[j] - x[j];
        if d == 0.0 {
            continue;
        }
        let zj = ev.norm_with_change(&state, j, d, z.max(f64::MIN_POSITIVE));
        if z > zj {
            total += (z - zj) * (z - zj);
        }
    }
    total
}

/// The statistic over every pair of sign patterns `(X, X′) ∈ {±1}ⁿ × {±1}ⁿ`.
pub fn blm_exhaustive(frame: &BanachFrame, sigma: f64) -> Result<BlmReport> {
    let n = frame.len();
    if n > 10 {
        return Err(Error::Capacity {
            what: "exhaustive sign enumeration",
            size: n,
            limit: 10,
        });
    }
    let ev = Evaluator::new(frame);
    let signs = |mask: usize| -> Vec<f64> {
        (0..n)
            .map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 })
            .collect()
    };
    let mut stats = Vec::with_capacity(1 << (2 * n));
    for a in 0..1usize << n {
        let x = signs(a);
        for b in 0..1usize << n {
            stats.push(blm_statistic(&ev, &x, &signs(b)));
        }
    }
    Ok(summarize_blm(&stats, sigma))
}

/// Monte Carlo estimate of the Pisier ratio
/// `E‖Σ_{k∈A}(ε_k − δ_k)e_k‖_{Ψ₂} / (Σ δ_k(1 − δ_k))^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PisierReport {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub denominator: f64,
    pub trials: usize,
}

pub fn pisier_probe(
    set: &[i64],
    schedule: &SelectorSchedule,
    trials: usize,
    seed: u64,
    config: &OrliczConfig,
) -> Result<PisierReport> {
    if trials < 2 {
        return Err(Error::Precondition("pisier probe needs trials ≥ 2".into()));
    }
    let mut deltas = Vec::with_capacity(set.len());
    for &k in set {
        if k < 1 {
            return Err(Error::Precondition(format!(
                "frequency {k} outside the schedule domain"
            )));
        }
        deltas.push(schedule.mean_at(k as u64)?);
    }
    let var: f64 = deltas.iter().map(|d| d * (1.0 - d)).sum();
    if var == 0.0 {
        return Err(Error::Precondition(
            "degenerate denominator: every selector mean is 0 or 1".into(),
        ));
    }
    let frame = BanachFrame::exponential(set.to_vec(), *config)?;
    let ev = Evaluator::new(&frame);
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, Stream::Trial, i as u64);
            let x: Vec<f64> = deltas
                .iter()
                .map(|&d| f64::from(u8::from(rng.random::<f64>() < d)) - d)
                .collect();
            ev.norm(&ev.combine(&x), None)
        })
        .collect();
    let denom = var.sqrt();
    let m = stats::mean(&values) / denom;
    let se = stats::std_error(&values) / denom;
    Ok(PisierReport {
        ratio: m,
        lower: (m - Z99 * se).max(0.0),
        upper: m + Z99 * se,
        denominator: denom,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident(n: usize, scale: f64) -> BanachFrame {
        BanachFrame::coordinate(
            (0..n)
                .map(|j| (0..n).map(|i| if i == j { scale } else { 0.0 }).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_frames_are_deterministic() {
        let f = ident(1, 1.0);
        for s in 0..20 {
            assert_eq!(sample_z(&f, VariateKind::Rademacher, s), 1.0);
        }
        let e = BanachFrame::exponential(vec![7], OrliczConfig::default()).unwrap();
        for s in 0..5 {
            let z = sample_z(&e, VariateKind::Rademacher, s);
            assert!((z - 1.0 / LN_2.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn all_plus_one_hook() {
        let f = BanachFrame::coordinate(vec![vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
        assert_eq!(f.norm_of_combination(&[1.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn blm_small_frames_exhaustive() {
        let r = blm_exhaustive(&ident(1, 1.0), 1.0).unwrap();
        assert!(r.max_statistic == 0.0 || r.max_statistic == 4.0);
        assert_eq!(r.violations, 0);
        let f = BanachFrame::coordinate(vec![vec![1.0, 0.5], vec![-0.3, 1.0]]).unwrap();
        let sigma = weak_l2_norm(&f).unwrap().value;
        let r = blm_exhaustive(&f, sigma).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_statistic <= 4.0 * sigma * sigma);
    }

    #[test]
    fn gaussian_rejected_by_blm() {
        assert!(matches!(
            blm_condition_check_with_sigma(&ident(2, 1.0), VariateKind::Gaussian, 10, 1, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn incremental_change_matches_recompute() {
        let e = BanachFrame::exponential(vec![3, 5, 11, 20], OrliczConfig::default()).unwrap();
        let ev = Evaluator::new(&e);
        let x = [1.0, -1.0, 1.0, 1.0];
        let st = ev.combine(&x);
        let z = ev.norm(&st, None);
        for j in 0..4 {
            let mut y = x;
            y[j] = -y[j];
            let direct = ev.norm(&ev.combine(&y), None);
            let inc = ev.norm_with_change(&st, j, -2.0 * x[j], z);
            assert!((direct - inc).abs() < 1e-8 * direct);
        }
    }

    #[test]
    fn tail_at_zero_has_unit_bound() {
        let f = ident(4, 0.5);
        let r = tail_experiment(&f, VariateKind::UniformPm1, 2000, &[0.0, 0.1], 3).unwrap();
        assert_eq!(r.bound_24[0], 1.0);
        assert!(r.empirical_survival[0] <= 1.0);
        assert!(r.bound_23.is_none());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn pisier_degenerate_denominator() {
        let s = SelectorSchedule::constant(1.0).unwrap();
        assert!(matches!(
            pisier_probe(&[16, 17], &s, 10, 0, &OrliczConfig::default()),
            Err(Error::Precondition(_))
        ));
    }
}
