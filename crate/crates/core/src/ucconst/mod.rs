//! Lower bounds for partial-sum operator norms and UC constants.
//!
//! For a finite spectrum `E` and a window `[−N, N]`, the norm of `S_N` on
//! `C_E` is `sup{Re S_N f(0) : ‖f‖_∞ ≤ 1, Sp(f) ⊆ E}`: translating `f` moves
//! the base point to 0, and a unimodular factor rotates the value onto the
//! real axis. Replacing `f` by `(f + conj f(−·))/2` keeps the spectrum, the
//! norm bound and the objective, so real coefficients suffice. The modulus
//! `|f|` and the objective only depend on `E` up to translation, so the
//! spectrum is shifted to start at 0 before building the grid.
//!
//! The sup-norm constraint is discretized with `m` half-planes per point on a
//! grid of `G` points. The LP optimum is a relaxation; it becomes a certified
//! lower bound after scaling by `cos(π/m)(1 − πr/G)`, and independently by
//! re-measuring the optimal polynomial on a much finer grid.

mod ipm;
mod simplex;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynorm::{sup_norm, TrigPolynomial};
use crate::rng::{derive_seed, trial_rng, Stream};
use crate::spectra::{sample_set, thin, ScheduleKind, SelectorSchedule};
use crate::stats::{self, LineFit};
use ipm::InteriorPoint;
use simplex::{Mode, SemiInfiniteLp};

/// Largest spectrum size and spread handled by the LP.
pub const MAX_LP_SET: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LpConfig {
    /// Minimum constraint grid; raised to the next power of two `≥ 8·width`.
    pub constraint_grid: usize,
    /// Base points `x₀`. Every base point gives the same optimum, so one is
    /// enough; larger values are accepted and ignored.
    pub objective_grid: usize,
    /// Half-planes approximating the unit disc.
    pub polygon_sides: usize,
    pub solver_tol: f64,
    pub max_iters: usize,
    /// Oversampling for re-measuring optimal polynomials.
    pub reeval_oversample: f64,
    /// Random polynomials tried by the search lower bound.
    pub search_trials: usize,
    pub search_seed: u64,
    pub solver: LpSolver,
    /// Windows solved per spectrum before switching to a coarse scan plus
    /// local refinement.
    pub max_windows: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpSolver {
    /// Simplex up to [`SIMPLEX_MAX_DIM`] variables, interior point above.
    #[default]
    Auto,
    /// Dense primal simplex with Dantzig pricing and a Bland fallback.
    Simplex,
    /// Mehrotra predictor-corrector with FFT-assembled normal equations.
    InteriorPoint,
}

/// Largest LP handed to the simplex under [`LpSolver::Auto`].
pub const SIMPLEX_MAX_DIM: usize = 32;

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            constraint_grid: 64,
            objective_grid: 1,
            polygon_sides: 16,
            solver_tol: 1e-9,
            max_iters: 200_000,
            reeval_oversample: 64.0,
            search_trials: 8,
            search_seed: 0xc0de5,
            solver: LpSolver::Auto,
            max_windows: 48,
        }
    }
}

impl LpConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.constraint_grid.is_power_of_two() {
            return Err(Error::Config(
                "constraint_grid must be a power of two".into(),
            ));
        }
        if self.polygon_sides < 8 {
            return Err(Error::Config("polygon_sides must be at least 8".into()));
        }
        if self.objective_grid == 0 {
            return Err(Error::Config("objective_grid must be positive".into()));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1e-3) {
            return Err(Error::Config("solver_tol out of range".into()));
        }
        if self.max_windows < 4 {
            return Err(Error::Config("max_windows must be at least 4".into()));
        }
        if self.reeval_oversample < 4.0 {
            return Err(Error::Config("reeval_oversample must be at least 4".into()));
        }
        Ok(())
    }

    /// Grid used for a spectrum of the given width.
    pub fn grid_for(&self, width: u64) -> usize {
        self.constraint_grid
            .max((8 * width.max(1) as usize).next_power_of_two())
    }

    /// `cos(π/m)`.
    pub fn polygon_factor(&self) -> f64 {
        (PI / self.polygon_sides as f64).cos()
    }
}

/// Certified lower bound for `‖S_N‖` on `C_E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnEstimate {
    /// `max(lp_certified, reevaluated)`.
    pub value: f64,
    /// Raw discretized LP optimum (a relaxation, not a bound).
    pub relaxation: f64,
    /// Dual objective from the interior point, when that solver ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation_dual: Option<f64>,
    /// `relaxation·cos(π/m)(1 − πr/G)`.
    pub lp_certified: f64,
    /// `Re S_N f*(0) / ‖f*‖_∞` with the sup norm bounded above on a fine grid.
    pub reevaluated: f64,
    pub n: u64,
    pub grid: usize,
    pub polygon_sides: usize,
    pub iterations: usize,
    /// Optimal polynomial of the discretized problem, in the original frequencies.
    pub optimizer: Option<TrigPolynomial>,
}

impl SnEstimate {
    fn exact(value: f64, n: u64) -> Self {
        Self {
            value,
            relaxation: value,
            relaxation_dual: None,
            lp_certified: value,
            reevaluated: value,
            n,
            grid: 0,
            polygon_sides: 0,
            iterations: 0,
            optimizer: None,
        }
    }
}

fn canonical_set(set: &[i64]) -> Result<Vec<i64>> {
    let mut e = set.to_vec();
    e.sort_unstable();
    e.dedup();
    if e.is_empty() {
        return Err(Error::Precondition("spectrum must be nonempty".into()));
    }
    let width = e[e.len() - 1].abs_diff(e[0]);
    if e.len() > MAX_LP_SET || width > MAX_LP_SET as u64 {
        return Err(Error::Capacity {
            what: "UC linear program spectrum (size or spread)",
            size: e.len().max(width as usize),
            limit: MAX_LP_SET,
        });
    }
    Ok(e)
}

enum Engine {
    Simplex(SemiInfiniteLp),
    InteriorPoint(InteriorPoint),
}

/// The LP on one spectrum, reused across windows.
struct Instance<'a> {
    set: &'a [i64],
    engine: Engine,
    config: &'a LpConfig,
    radius: f64,
    grid: usize,
    dim: usize,
}

impl<'a> Instance<'a> {
    fn new(set: &'a [i64], config: &'a LpConfig, mode: Mode) -> Self {
        let lo = set[0];
        let width = set[set.len() - 1].abs_diff(lo);
        let grid = config.grid_for(width);
        let offsets: Vec<i64> = set.iter().map(|k| k - lo).collect();
        let dim = match mode {
            Mode::Real => set.len(),
            Mode::Complex => 2 * set.len(),
        };
        let simplex = match config.solver {
            LpSolver::Simplex => true,
            LpSolver::InteriorPoint => false,
            LpSolver::Auto => dim <= SIMPLEX_MAX_DIM,
        };
        let (tol, sides, iters) = (config.solver_tol, config.polygon_sides, config.max_iters);
        let engine = if simplex {
            Engine::Simplex(SemiInfiniteLp::new(offsets, mode, grid, sides, tol, iters))
        } else {
            Engine::InteriorPoint(InteriorPoint::new(
                offsets,
                mode,
                grid,
                sides,
                tol,
                iters.min(500),
            ))
        };
        Self {
            set,
            engine,
            config,
            radius: width as f64 / 2.0,
            grid,
            dim,
        }
    }

    fn objective(&self, mask: &[bool]) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim);
        for (i, &m) in mask.iter().enumerate() {
            if m {
                c[i] = 1.0;
            }
        }
        c
    }

    fn solve(&mut self, mask: &[bool], n: u64) -> Result<SnEstimate> {
        let c = self.objective(mask);
        let (a, max_activity, iterations, relaxation_dual) = match &mut self.engine {
            Engine::Simplex(lp) => {
                lp.maximize(&c)?;
                (lp.point(), lp.max_activity(), lp.iterations, None)
            }
            Engine::InteriorPoint(ip) => {
                let sol = ip.maximize(&c)?;
                let act = ip
                    .apply(&sol.a)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                (sol.a, act, ip.iterations, Some(sol.dual))
            }
        };
        let relaxation = c.dot(&a);
        let d = self.set.len();
        let coeffs: Vec<Complex64> = (0..d)
            .map(|k| Complex64::new(a[k], if self.dim > d { a[d + k] } else { 0.0 }))
            .collect();
        let poly = TrigPolynomial::from_terms(self.set.iter().copied().zip(coeffs.iter().copied()));
        let sup = sup_norm(&poly, self.config.reeval_oversample)?;
        let reevaluated = if sup.upper > 0.0 {
            relaxation / sup.upper
        } else {
            0.0
        };
        // Scaling by the largest activity makes the point exactly feasible
        // for the discretized constraints before the correction applies.
        let factor = self.config.polygon_factor() * (1.0 - PI * self.radius / self.grid as f64);
        let lp_certified = relaxation * factor / max_activity.max(1.0);
        Ok(SnEstimate {
            value: lp_certified.max(reevaluated),
            relaxation,
            relaxation_dual,
            lp_certified,
            reevaluated,
            n,
            grid: self.grid,
            polygon_sides: self.config.polygon_sides,
            iterations,
            optimizer: Some(poly),
        })
    }
}

/// Certified lower bound for `sup{‖S_N f‖_∞ : ‖f‖_∞ ≤ 1, Sp(f) ⊆ E}`.
pub fn sn_operator_norm(set: &[i64], n: u64, config: &LpConfig) -> Result<SnEstimate> {
    sn_operator_norm_mode(set, n, config, Mode::Real)
}

/// As [`sn_operator_norm`] without the real-coefficient reduction: real and
/// imaginary parts are separate variables and the full grid is constrained.
pub fn sn_operator_norm_complex(set: &[i64], n: u64, config: &LpConfig) -> Result<SnEstimate> {
    sn_operator_norm_mode(set, n, config, Mode::Complex)
}

fn sn_operator_norm_mode(set: &[i64], n: u64, config: &LpConfig, mode: Mode) -> Result<SnEstimate> {
    config.validate()?;
    let e = canonical_set(set)?;
    let mask: Vec<bool> = e.iter().map(|k| k.unsigned_abs() <= n).collect();
    if mask.iter().all(|&m| m) {
        return Ok(SnEstimate::exact(1.0, n));
    }
    if !mask.iter().any(|&m| m) {
        return Ok(SnEstimate::exact(0.0, n));
    }
    Instance::new(&e, config, mode).solve(&mask, n)
}

/// Writes the discretized LP for `(E, N)` in CPLEX LP format.
pub fn write_lp_instance<W: Write>(set: &[i64], n: u64, config: &LpConfig, out: W) -> Result<()> {
    config.validate()?;
    let e = canonical_set(set)?;
    let mask: Vec<bool> = e.iter().map(|k| k.unsigned_abs() <= n).collect();
    let lo = e[0];
    let grid = config.grid_for(e[e.len() - 1].abs_diff(lo));
    let offsets: Vec<i64> = e.iter().map(|k| k - lo).collect();
    let lp = SemiInfiniteLp::new(
        offsets,
        Mode::Real,
        grid,
        config.polygon_sides,
        config.solver_tol,
        0,
    );
    let c = DVector::from_iterator(mask.len(), mask.iter().map(|&m| if m { 1.0 } else { 0.0 }));
    lp.write_lp(&c, out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcEstimate {
    /// Best certified lower bound over windows (1 for a nonempty spectrum at least).
    pub value_lower: f64,
    /// Independent lower bound from random polynomials.
    pub value_search: f64,
    /// `√|E|`, from `‖S_N f‖_∞ ≤ Σ|f̂| ≤ √|E|‖f‖₂`.
    pub upper_trivial: f64,
    pub best_n: u64,
    /// LP relaxation at `best_n`.
    pub relaxation: f64,
    pub set: Vec<i64>,
    /// Windows solved, out of `windows_total` that change the projection.
    pub windows: usize,
    pub windows_total: usize,
}

impl UcEstimate {
    pub fn best(&self) -> f64 {
        self.value_lower.max(self.value_search)
    }
}

/// Lower bound for `U(E) = sup_N ‖S_N‖` over the windows that change the
/// projected set (`N` ranging over the distinct `|k|`, `k ∈ E`).
pub fn uc_constant(set: &[i64], config: &LpConfig) -> Result<UcEstimate> {
    config.validate()?;
    if set.is_empty() {
        return Ok(UcEstimate {
            value_lower: 0.0,
            value_search: 0.0,
            upper_trivial: 0.0,
            best_n: 0,
            relaxation: 0.0,
            set: Vec::new(),
            windows: 0,
            windows_total: 0,
        });
    }
    let e = canonical_set(set)?;
    let mut ns: Vec<u64> = e.iter().map(|k| k.unsigned_abs()).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut best = SnEstimate::exact(1.0, *ns.last().unwrap());
    let mut inst = Instance::new(&e, config, Mode::Real);
    let candidates = &ns[..ns.len() - 1];
    let mut solved = vec![false; candidates.len()];
    let mut best_index = None;
    let mut windows = 0;
    // Returns whether window `i` was newly solved.
    let mut visit =
        |i: usize, best: &mut SnEstimate, best_index: &mut Option<usize>| -> Result<bool> {
            if solved[i] {
                return Ok(false);
            }
            solved[i] = true;
            let n = candidates[i];
            let mask: Vec<bool> = e.iter().map(|k| k.unsigned_abs() <= n).collect();
            let est = inst.solve(&mask, n)?;
            windows += 1;
            if est.value > best.value {
                *best = est;
                *best_index = Some(i);
            }
            Ok(true)
        };
    if candidates.len() <= config.max_windows {
        for i in 0..candidates.len() {
            visit(i, &mut best, &mut best_index)?;
        }
    } else {
        // Evenly spaced scan, then the nearest unsolved windows around the best.
        let coarse = config.max_windows / 2;
        let last = candidates.len() - 1;
        for j in 0..coarse {
            visit(j * last / (coarse - 1), &mut best, &mut best_index)?;
        }
        let mut budget = config.max_windows - coarse;
        let mut radius = 1;
        while budget > 0 && radius <= last {
            let Some(c) = best_index else { break };
            for i in [
                c.checked_sub(radius),
                Some(c + radius).filter(|&i| i <= last),
            ]
            .into_iter()
            .flatten()
            {
                if budget > 0 && visit(i, &mut best, &mut best_index)? {
                    budget -= 1;
                }
            }
            radius += 1;
        }
    }
    let value_search = random_search(&e, &ns, config)?;
    Ok(UcEstimate {
        value_lower: best.value,
        value_search,
        upper_trivial: (e.len() as f64).sqrt(),
        best_n: best.n,
        relaxation: best.relaxation,
        windows,
        windows_total: candidates.len(),
        set: e,
    })
}

/// `max_N max_grid |S_N f| / ‖f‖_∞` over random unimodular-coefficient `f`.
fn random_search(e: &[i64], ns: &[u64], config: &LpConfig) -> Result<f64> {
    let lo = e[0];
    let width = e[e.len() - 1].abs_diff(lo);
    let len = (4 * width.max(1) as usize).next_power_of_two().max(64);
    let twiddle: Vec<Complex64> = (0..len)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / len as f64))
        .collect();
    let mut best: f64 = 0.0;
    for t in 0..config.search_trials {
        let mut rng = trial_rng(config.search_seed, Stream::Search, t as u64);
        let coeffs: Vec<Complex64> = e
            .iter()
            .map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
            .collect();
        let poly = TrigPolynomial::from_terms(e.iter().copied().zip(coeffs.iter().copied()));
        let sup = sup_norm(&poly, 16.0)?.upper;
        // Partial sums grow through the windows in order of |k|.
        let mut order: Vec<usize> = (0..e.len()).collect();
        order.sort_by_key(|&i| e[i].unsigned_abs());
        let mut partial = vec![Complex64::new(0.0, 0.0); len];
        let mut idx = 0;
        for &n in ns {
            while idx < order.len() && e[order[idx]].unsigned_abs() <= n {
                let i = order[idx];
                let p = (e[i] - lo) as usize;
                for (j, z) in partial.iter_mut().enumerate() {
                    *z += coeffs[i] * twiddle[(p * j) % len];
                }
                idx += 1;
            }
            let m = partial.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            best = best.max(m / sup);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtRow {
    pub n: u64,
    /// Median of `U` over nonempty samples; `None` when every sample was empty.
    pub median_u: Option<f64>,
    /// `log(2 + δN/log N)`.
    pub curve: f64,
    /// `median_u / curve`.
    pub gamma_fit: Option<f64>,
    pub values: Vec<f64>,
    pub empty: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtReport {
    pub delta: f64,
    pub trials: usize,
    pub rows: Vec<KtRow>,
    /// Least-squares `γ` through the origin over rows with a median.
    pub gamma: Option<f64>,
    /// Spearman correlation between medians and the curve.
    pub spearman: Option<f64>,
}

impl KtReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,median_U,curve,gamma_fit")?;
        for r in &self.rows {
            let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.10}"));
            writeln!(
                out,
                "{},{},{:.10},{}",
                r.n,
                opt(r.median_u),
                r.curve,
                opt(r.gamma_fit)
            )?;
        }
        Ok(())
    }
}

/// Samples `σ(ω) ⊆ [1, N]` with selectors of equal mean `δ` and compares the
/// median UC bound with `log(2 + δN/log N)`.
pub fn kashin_tzafriri_experiment(
    n_list: &[u64],
    delta: f64,
    trials: usize,
    config: &LpConfig,
    seed: u64,
) -> Result<KtReport> {
    if n_list.iter().any(|&n| n < 2 || n > MAX_LP_SET as u64) {
        return Err(Error::Precondition(format!(
            "every N must lie in [2, {MAX_LP_SET}]"
        )));
    }
    let schedule = SelectorSchedule::constant(delta)?.with_k_min(1)?;
    let mut rows = Vec::new();
    for &n in n_list {
        let mut values = Vec::new();
        let mut empty = 0;
        for t in 0..trials {
            let s = derive_seed(derive_seed(seed, Stream::Trial, n), Stream::Trial, t as u64);
            let sample = sample_set(&schedule, (1, n), s)?;
            if sample.is_empty() {
                empty += 1;
                continue;
            }
            let e: Vec<i64> = sample.elements.iter().map(|&k| k as i64).collect();
            values.push(uc_constant(&e, config)?.best());
        }
        let nf = n as f64;
        let curve = (2.0 + delta * nf / nf.ln()).ln();
        let median_u = (!values.is_empty()).then(|| stats::median(&values));
        rows.push(KtRow {
            n,
            median_u,
            curve,
            gamma_fit: median_u.map(|m| m / curve),
            values,
            empty,
        });
    }
    let fitted: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.median_u.map(|m| (m, r.curve)))
        .collect();
    let gamma = (!fitted.is_empty()).then(|| {
        fitted.iter().map(|(m, c)| m * c).sum::<f64>()
            / fitted.iter().map(|(_, c)| c * c).sum::<f64>()
    });
    let spearman = (fitted.len() >= 2).then(|| {
        let (m, c): (Vec<f64>, Vec<f64>) = fitted.iter().copied().unzip();
        stats::spearman(&m, &c)
    });
    Ok(KtReport {
        delta,
        trials,
        rows,
        gamma,
        spearman,
    })
}

/// Desk-scale stand-in for the blocks `[M_n, M_{n+1})`, `M_n = n^{βn}`.
///
/// Block `n` is a run of `block_size` consecutive integers; blocks are laid
/// end to end from `start`. Cell `i` of block `n` represents the genuine
/// integers around `M_n + (i + ½)N_n/S`, so its selector mean is the rider
/// density there times `N_n/S` (clamped to 1), and the thinning target
/// `q_n/N_n` per genuine integer becomes `q_n/S` per cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateGeometry {
    pub beta: f64,
    pub block_size: u64,
    pub start: u64,
    pub n_range: (u32, u32),
}

impl SurrogateGeometry {
    pub fn new(beta: f64, block_size: u64, n_range: (u32, u32)) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if block_size < 2 || block_size > MAX_LP_SET as u64 {
            return Err(Error::Config(format!(
                "surrogate block size must lie in [2, {MAX_LP_SET}]"
            )));
        }
        if n_range.0 < 3 || n_range.0 > n_range.1 {
            return Err(Error::Config(
                "surrogate blocks need 3 ≤ n_lo ≤ n_hi".into(),
            ));
        }
        Ok(Self {
            beta,
            block_size,
            start: 16,
            n_range,
        })
    }

    /// Inclusive surrogate range of block `n`.
    pub fn block(&self, n: u32) -> (u64, u64) {
        let lo = self.start + u64::from(n - self.n_range.0) * self.block_size;
        (lo, lo + self.block_size - 1)
    }

    /// `log M_n = βn log n`.
    pub fn log_m(&self, n: u32) -> f64 {
        self.beta * f64::from(n) * f64::from(n).ln()
    }

    /// `log N_n = log(M_{n+1} − M_n)`.
    pub fn log_len(&self, n: u32) -> f64 {
        let (a, b) = (self.log_m(n), self.log_m(n + 1));
        b + (-(a - b).exp()).ln_1p()
    }
}

/// `q_n = n^α / log n`.
pub fn q_n(alpha: f64, n: u32) -> f64 {
    f64::from(n).powf(alpha) / f64::from(n).ln()
}

/// `(q_n / log N_n) / (n^{α−1}/(log n)²)`; constant in `n` when the
/// construction has the intended shape.
pub fn shape_ratio(alpha: f64, beta: f64, n: u32) -> f64 {
    let g = SurrogateGeometry {
        beta,
        block_size: 2,
        start: 16,
        n_range: (n, n),
    };
    let nf = f64::from(n);
    (q_n(alpha, n) / g.log_len(n)) / (nf.powf(alpha - 1.0) / nf.ln().powi(2))
}

fn rider_density_unclamped(c: f64, alpha: f64, log_t: f64) -> f64 {
    // c (log t)^α / (t (log log t)^{α+1}) evaluated from log t.
    (c.ln() + alpha * log_t.ln() - log_t - (alpha + 1.0) * log_t.ln().ln()).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: u32,
    pub q_n: f64,
    pub log_len_nominal: f64,
    /// `log(2 + q_n/log N_n)` with the genuine `N_n`.
    pub curve_nominal: f64,
    /// `log(2 + q_n/log S)` with the surrogate block size.
    pub curve_realized: f64,
    pub shape_ratio: f64,
    pub median_u: Option<f64>,
    pub values: Vec<f64>,
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Always `true`: blocks are surrogates, not `[M_n, M_{n+1})`.
    pub surrogate: bool,
    pub geometry: SurrogateGeometry,
    pub alpha: f64,
    pub c: f64,
    pub trials: usize,
    pub rows: Vec<GrowthRow>,
    /// Median `U` against `n`; `None` with fewer than two usable rows.
    pub slope: Option<LineFit>,
}

/// Thins rider-schedule surrogate blocks to equal mean `q_n/N_n` and tracks
/// the UC lower bound of each thinned block across `n`.
pub fn thinned_uc_growth(
    geometry: &SurrogateGeometry,
    alpha: f64,
    c: f64,
    trials: usize,
    config: &LpConfig,
    seed: u64,
) -> Result<GrowthReport> {
    let s = geometry.block_size as f64;
    let mut source_table = Vec::new();
    let mut target_table = Vec::new();
    for n in geometry.n_range.0..=geometry.n_range.1 {
        let (lo, hi) = geometry.block(n);
        let log_m = geometry.log_m(n);
        let log_len = geometry.log_len(n);
        let target = q_n(alpha, n) / s;
        for (i, k) in (lo..=hi).enumerate() {
            // log of M_n + (i + ½)·N_n/S.
            let frac = (i as f64 + 0.5) / s;
            let log_x = log_m + (1.0 + frac * (log_len - log_m).exp()).ln();
            let mean =
                (rider_density_unclamped(c, alpha, log_x) * (log_len - s.ln()).exp()).min(1.0);
            source_table.push((k, mean));
            target_table.push((k, target.min(1.0)));
        }
    }
    let source = SelectorSchedule::custom(source_table)?;
    let target = SelectorSchedule::custom(target_table)?;
    debug_assert!(matches!(source.kind, ScheduleKind::Custom { .. }));
    let full = (geometry.start, geometry.block(geometry.n_range.1).1);
    let mut per_block: Vec<(Vec<f64>, Vec<usize>)> =
        vec![(Vec::new(), Vec::new()); (geometry.n_range.1 - geometry.n_range.0 + 1) as usize];
    for t in 0..trials {
        let sample = sample_set(&source, full, derive_seed(seed, Stream::Trial, t as u64))?;
        let thinned = thin(
            &sample,
            &target,
            derive_seed(seed, Stream::Thinning, t as u64),
        )?;
        for (bi, n) in (geometry.n_range.0..=geometry.n_range.1).enumerate() {
            let (lo, hi) = geometry.block(n);
            let e: Vec<i64> = thinned.slice(lo, hi).iter().map(|&k| k as i64).collect();
            per_block[bi].1.push(e.len());
            if !e.is_empty() {
                per_block[bi].0.push(uc_constant(&e, config)?.best());
            }
        }
    }
    let rows: Vec<GrowthRow> = (geometry.n_range.0..=geometry.n_range.1)
        .zip(per_block)
        .map(|(n, (values, sizes))| {
            let q = q_n(alpha, n);
            let log_len = geometry.log_len(n);
            GrowthRow {
                n,
                q_n: q,
                log_len_nominal: log_len,
                curve_nominal: (2.0 + q / log_len).ln(),
                curve_realized: (2.0 + q / s.ln()).ln(),
                shape_ratio: shape_ratio(alpha, geometry.beta, n),
                median_u: (!values.is_empty()).then(|| stats::median(&values)),
                values,
                sizes,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.median_u.map(|m| (f64::from(r.n), m)))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        stats::linear_fit(&x, &y)
    });
    Ok(GrowthReport {
        surrogate: true,
        geometry: *geometry,
        alpha,
        c,
        trials,
        rows,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_and_windows() {
        let cfg = LpConfig::default();
        assert_eq!(sn_operator_norm(&[5], 5, &cfg).unwrap().value, 1.0);
        assert_eq!(sn_operator_norm(&[5], 4, &cfg).unwrap().value, 0.0);
        assert_eq!(uc_constant(&[9], &cfg).unwrap().value_lower, 1.0);
        assert_eq!(uc_constant(&[], &cfg).unwrap().value_lower, 0.0);
        let full = sn_operator_norm(&[1, 2, 3], 3, &cfg).unwrap();
        assert_eq!(full.value, 1.0);
    }

    #[test]
    fn estimates_are_ordered() {
        let cfg = LpConfig::default();
        let e: Vec<i64> = (1..=16).collect();
        let est = sn_operator_norm(&e, 8, &cfg).unwrap();
        assert!(est.lp_certified <= est.relaxation);
        assert!(est.value >= est.lp_certified && est.value >= est.reevaluated);
        assert!(est.value > 1.0);
        let p = est.optimizer.unwrap();
        let sup = sup_norm(&p, 64.0).unwrap();
        let bound = 1.0 / (cfg.polygon_factor() * (1.0 - PI * 7.5 / est.grid as f64));
        assert!(sup.lower <= bound + 1e-9);
    }

    #[test]
    fn complex_mode_matches_real() {
        let cfg = LpConfig::default();
        let e = [1i64, 2, 5, 9, 10];
        let r = sn_operator_norm(&e, 5, &cfg).unwrap();
        let c = sn_operator_norm_complex(&e, 5, &cfg).unwrap();
        assert!(
            (r.relaxation - c.relaxation).abs() < 1e-7,
            "{} vs {}",
            r.relaxation,
            c.relaxation
        );
    }

    #[test]
    fn translation_gives_identical_estimates() {
        let cfg = LpConfig::default();
        let e = [3i64, 4, 9, 11, 20];
        let shifted: Vec<i64> = e.iter().map(|k| k + 17).collect();
        let a = uc_constant(&e, &cfg).unwrap();
        let b = uc_constant(&shifted, &cfg).unwrap();
        assert!((a.value_lower - b.value_lower).abs() <= cfg.solver_tol);
    }

    #[test]
    fn lacunary_versus_full_block() {
        let cfg = LpConfig::default();
        let full: Vec<i64> = (1..=16).collect();
        let lac = [1i64, 2, 4, 8, 16];
        assert!(
            uc_constant(&full, &cfg).unwrap().value_lower
                > uc_constant(&lac, &cfg).unwrap().value_lower
        );
    }

    #[test]
    fn surrogate_shape_is_flat_far_out() {
        let r: Vec<f64> = (20..=40).map(|n| shape_ratio(1.5, 1.7, n)).collect();
        let (lo, hi) = r
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.10);
    }

    #[test]
    fn single_block_growth_has_no_fit() {
        let g = SurrogateGeometry::new(1.5, 64, (5, 5)).unwrap();
        let r = thinned_uc_growth(&g, 1.5, 2.0, 3, &LpConfig::default(), 1).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.slope.is_none());
    }
}
