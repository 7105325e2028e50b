use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::poly::{next_pow2, TrigPolynomial};
use crate::error::{Error, Result};
use crate::rng::{trial_rng, Stream};
use crate::stats::{self, Z99};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ClosedForm,
    GridFft,
    Bisection,
    OptimizationLowerBound,
    MonteCarlo,
}

/// A numerical norm value with an enclosing bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub lower: f64,
    /// May be `f64::INFINITY` when no finite upper bound is available.
    pub upper: f64,
    pub method: NormMethod,
    /// Grid size, or number of trials for Monte Carlo estimates.
    pub samples: usize,
}

impl NormEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            lower: value,
            upper: value,
            method: NormMethod::ClosedForm,
            samples: 0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Smallest grid used as a bracket candidate is the one where the Bernstein
/// factor `1 − πr/L` reaches one half.
fn bernstein_factor(radius: f64, len: usize) -> f64 {
    1.0 - PI * radius / len as f64
}

/// `‖f‖_∞` from an oversampled grid.
///
/// The grid maximum `m` is a lower bound. Bernstein's inequality for the
/// modulus (`‖f′‖ ≤ r‖f‖` with `r` the spectral radius) gives
/// `‖f‖_∞ ≤ m / (1 − πr/L)`; the reported upper bound is the minimum of that
/// over all power-of-two subgrids, so doubling `L` always nests brackets.
pub fn sup_norm(poly: &TrigPolynomial, oversample: f64) -> Result<NormEstimate> {
    if !(oversample.is_finite() && oversample >= 4.0) {
        return Err(Error::Config(format!(
            "oversample must be at least 4, got {oversample}"
        )));
    }
    if poly.is_zero() {
        return Ok(NormEstimate::exact(0.0));
    }
    let width = poly.width().max(1) as f64;
    let len = next_pow2((oversample * width * TAU).ceil() as usize);
    Ok(sup_norm_on_grid(poly, len))
}

/// Sup-norm bracket on a fixed power-of-two grid.
pub fn sup_norm_on_grid(poly: &TrigPolynomial, len: usize) -> NormEstimate {
    assert!(len.is_power_of_two());
    if poly.is_zero() {
        return NormEstimate::exact(0.0);
    }
    let r = poly.radius();
    let m2 = poly.modulus_sq_grid(len);
    sup_bracket(&m2, r)
}

/// Bracket from squared moduli on a power-of-two grid.
pub(crate) fn sup_bracket(modulus_sq: &[f64], radius: f64) -> NormEstimate {
    let len = modulus_sq.len();
    let lower = modulus_sq.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
    let mut upper = f64::INFINITY;
    let mut sub = len;
    let mut stride = 1;
    while sub >= 1 {
        let factor = bernstein_factor(radius, sub);
        if factor < 0.5 {
            break;
        }
        let m = modulus_sq
            .iter()
            .step_by(stride)
            .fold(0.0f64, |a, &b| a.max(b))
            .sqrt();
        upper = upper.min(m / factor);
        if sub == 1 {
            break;
        }
        sub /= 2;
        stride *= 2;
    }
    if radius == 0.0 {
        upper = lower;
    }
    NormEstimate {
        value: upper,
        lower,
        upper,
        method: NormMethod::GridFft,
        samples: len,
    }
}

/// Quadrature settings for Orlicz and `Lᵖ` integrals against normalized Haar
/// measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrliczConfig {
    /// Minimum grid size; raised to `8·width` (next power of two) per call.
    pub quadrature_points: usize,
    pub bisection_tol: f64,
    /// Exponent above which `e^{|f/t|²}` is treated as infinite.
    pub exponent_clamp: f64,
}

impl Default for OrliczConfig {
    fn default() -> Self {
        Self {
            quadrature_points: 64,
            bisection_tol: 1e-9,
            exponent_clamp: 700.0,
        }
    }
}

impl OrliczConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.quadrature_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "quadrature_points must be a power of two, got {}",
                self.quadrature_points
            )));
        }
        if !(self.bisection_tol > 0.0 && self.bisection_tol < 1e-2) {
            return Err(Error::Config(format!(
                "bisection_tol out of range: {}",
                self.bisection_tol
            )));
        }
        if !(self.exponent_clamp > 1.0 && self.exponent_clamp <= 709.0) {
            return Err(Error::Config(format!(
                "exponent_clamp out of range: {}",
                self.exponent_clamp
            )));
        }
        Ok(())
    }

    /// Grid size for a polynomial of the given spectral width.
    pub fn points_for(&self, width: u64) -> usize {
        self.quadrature_points
            .max(next_pow2(8 * width.max(1) as usize))
    }

    /// [`points_for`](Self::points_for), refusing grids above
    /// [`MAX_QUADRATURE_POINTS`].
    pub fn checked_points_for(&self, width: u64) -> Result<usize> {
        if width > (MAX_QUADRATURE_POINTS / 8) as u64 {
            return Err(Error::Capacity {
                what: "quadrature grid",
                size: usize::try_from(width.saturating_mul(8)).unwrap_or(usize::MAX),
                limit: MAX_QUADRATURE_POINTS,
            });
        }
        Ok(self.points_for(width))
    }
}

/// Largest quadrature grid for Orlicz and `Lᵖ` integrals.
pub const MAX_QUADRATURE_POINTS: usize = 1 << 22;

/// `(1/2π ∫|f|ᵖ)^{1/p}` by uniform-grid quadrature. For `p = 2` the result
/// is checked against Parseval.
pub fn lp_norm(poly: &TrigPolynomial, p: f64, config: &OrliczConfig) -> Result<NormEstimate> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Config(format!("p must be at least 1, got {p}")));
    }
    config.validate()?;
    if poly.is_zero() {
        return Ok(NormEstimate::exact(0.0));
    }
    let len = config.checked_points_for(poly.width())?;
    let m2 = poly.modulus_sq_grid(len);
    let value = if p == 2.0 {
        let q = stats::mean(&m2).sqrt();
        let parseval = poly.coeff_l2();
        if (q - parseval).abs() > 1e-10 * parseval {
            return Err(Error::Numerical(format!(
                "L2 quadrature {q} disagrees with Parseval {parseval}"
            )));
        }
        q
    } else {
        stats::mean(&m2.iter().map(|w| w.powf(p / 2.0)).collect::<Vec<_>>()).powf(1.0 / p)
    };
    Ok(NormEstimate {
        value,
        lower: value,
        upper: value,
        method: NormMethod::GridFft,
        samples: len,
    })
}

/// Evaluates `Φ(t) = mean(e^{w_j/t²} − 1)` on squared moduli `w`.
pub(crate) struct OrliczFunctional<'a> {
    w: &'a [f64],
    clamp: f64,
    wmax: f64,
}

impl<'a> OrliczFunctional<'a> {
    pub(crate) fn new(w: &'a [f64], clamp: f64) -> Self {
        let wmax = w.iter().fold(0.0f64, |a, &b| a.max(b));
        Self { w, clamp, wmax }
    }

    /// `Φ(t)`, or `+∞` when some exponent exceeds the clamp.
    pub(crate) fn value(&self, t: f64) -> f64 {
        let s = 1.0 / (t * t);
        if self.wmax * s > self.clamp {
            return f64::INFINITY;
        }
        self.w.iter().map(|&w| (w * s).exp()).sum::<f64>() / self.w.len() as f64 - 1.0
    }

    /// `(Φ(t), Φ′(t))`.
    pub(crate) fn value_and_slope(&self, t: f64) -> (f64, f64) {
        let s = 1.0 / (t * t);
        if self.wmax * s > self.clamp {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        let mut v = 0.0;
        let mut d = 0.0;
        for &w in self.w {
            let u = w * s;
            let e = u.exp();
            v += e;
            d += e * u;
        }
        let n = self.w.len() as f64;
        (v / n - 1.0, -2.0 * d / (n * t))
    }
}

/// Result of the Luxemburg solve on a fixed grid.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LuxemburgSolve {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub closed_form: bool,
}

/// Solves `Φ(t) = 1` for squared grid moduli `w`.
///
/// Jensen gives `Φ ≥ 1` at `√(mean w / ln 2)` and the pointwise bound gives
/// `Φ ≤ 1` at `√(max w / ln 2)`, so the root is bracketed from the start.
/// Safeguarded Newton steps run inside the bracket; the final bracket is
/// tightened to relative width `tol` around the root.
pub(crate) fn solve_luxemburg(
    w: &[f64],
    tol: f64,
    clamp: f64,
    guess: Option<f64>,
) -> LuxemburgSolve {
    let phi = OrliczFunctional::new(w, clamp);
    if phi.wmax == 0.0 {
        return LuxemburgSolve {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            closed_form: true,
        };
    }
    let wmean = w.iter().sum::<f64>() / w.len() as f64;
    let mut lo = (wmean / LN_2).sqrt();
    let mut hi = (phi.wmax / LN_2).sqrt();
    if hi - lo <= 4.0 * f64::EPSILON * hi {
        return LuxemburgSolve {
            value: hi,
            lower: hi,
            upper: hi,
            closed_form: true,
        };
    }
    let mut t = guess
        .filter(|g| *g > lo && *g < hi)
        .unwrap_or((lo * hi).sqrt());
    for _ in 0..200 {
        let (v, d) = phi.value_and_slope(t);
        let v = v - 1.0;
        if v > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        if v.abs() < 1e-15 || hi - lo <= 1e-15 * hi {
            break;
        }
        let newton = if v.is_finite() && d.is_finite() && d < 0.0 {
            t - v / d
        } else {
            f64::NAN
        };
        let step_ok = newton.is_finite() && newton > lo && newton < hi;
        let next = if step_ok { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-15 * t {
            break;
        }
        t = next;
    }
    // Certify a tight bracket around the root.
    let half = 0.5 * tol * t;
    let (mut a, mut b) = ((t - half).max(lo), (t + half).min(hi));
    if phi.value(a) <= 1.0 {
        a = lo;
    }
    if phi.value(b) > 1.0 {
        b = hi;
    }
    while b - a > tol * b {
        let m = 0.5 * (a + b);
        if phi.value(m) > 1.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let value = t.clamp(a, b);
    LuxemburgSolve {
        value,
        lower: a,
        upper: b,
        closed_form: false,
    }
}

/// `inf{t > 0 : ∫(e^{|f/t|²} − 1) dm ≤ 1}` against normalized Haar measure.
pub fn luxemburg_psi2(poly: &TrigPolynomial, config: &OrliczConfig) -> Result<NormEstimate> {
    config.validate()?;
    if poly.is_zero() {
        return Ok(NormEstimate::exact(0.0));
    }
    let len = config.checked_points_for(poly.width())?;
    let w = poly.modulus_sq_grid(len);
    let s = solve_luxemburg(&w, config.bisection_tol, config.exponent_clamp, None);
    Ok(NormEstimate {
        value: s.value,
        lower: s.lower,
        upper: s.upper,
        method: if s.closed_form {
            NormMethod::ClosedForm
        } else {
            NormMethod::Bisection
        },
        samples: len,
    })
}

/// `Ψ_A = ‖Σ_{n∈A} e_n‖_{Ψ₂}`.
pub fn psi_a(set: &[i64], config: &OrliczConfig) -> Result<NormEstimate> {
    if set.is_empty() {
        return Err(Error::Precondition("psi_A needs a nonempty set".into()));
    }
    luxemburg_psi2(&TrigPolynomial::characteristic(set), config)
}

/// Oversampling used for each Monte Carlo sup-norm in [`rider_norm`].
pub const RIDER_OVERSAMPLE: f64 = 16.0;

/// `[[f]] = E‖Σ εₙ f̂(n) eₙ‖_∞` over Rademacher signs, with a 99% normal
/// confidence interval widened by the per-draw sup-norm brackets.
pub fn rider_norm(poly: &TrigPolynomial, trials: usize, seed: u64) -> Result<NormEstimate> {
    if trials < 100 {
        return Err(Error::Precondition(format!(
            "rider_norm needs at least 100 trials, got {trials}"
        )));
    }
    if poly.is_zero() {
        return Ok(NormEstimate::exact(0.0));
    }
    let terms: Vec<(i64, Complex64)> = poly.terms().collect();
    let draws: Vec<NormEstimate> = (0..trials)
        .map(|i| {
            let mut rng = trial_rng(seed, Stream::Trial, i as u64);
            let signed = TrigPolynomial::from_terms(
                terms
                    .iter()
                    .map(|&(k, c)| (k, if rng.random::<bool>() { c } else { -c })),
            );
            sup_norm(&signed, RIDER_OVERSAMPLE).expect("oversample is valid")
        })
        .collect();
    let values: Vec<f64> = draws.iter().map(|d| d.value).collect();
    let lowers: Vec<f64> = draws.iter().map(|d| d.lower).collect();
    let half = Z99 * stats::std_error(&values);
    Ok(NormEstimate {
        value: stats::mean(&values),
        lower: stats::mean(&lowers) - half,
        upper: stats::mean(&values) + half,
        method: NormMethod::MonteCarlo,
        samples: trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sup_of_aligned_sum() {
        let p = TrigPolynomial::from_real((0..8).map(|k| (k, 1.0)));
        let s = sup_norm(&p, 4.0).unwrap();
        assert!(s.contains(8.0), "{s:?}");
        assert!((s.lower - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sup_of_character_is_exact() {
        let s = sup_norm(&TrigPolynomial::monomial(5, c(1.0)), 4.0).unwrap();
        assert_eq!((s.lower, s.upper), (1.0, 1.0));
    }

    #[test]
    fn sup_bracket_narrow() {
        let p = TrigPolynomial::from_real([(0, 1.0), (1, 1.0)]);
        let s = sup_norm(&p, 64.0).unwrap();
        assert!(s.contains(2.0));
        assert!((s.upper - s.lower) / 2.0 < 1e-2);
    }

    #[test]
    fn sup_rejects_small_oversample() {
        let p = TrigPolynomial::monomial(3, c(1.0));
        assert!(matches!(sup_norm(&p, 2.0), Err(Error::Config(_))));
    }

    #[test]
    fn lp_of_characters_and_parseval() {
        let cfg = OrliczConfig::default();
        let e = TrigPolynomial::monomial(7, c(1.0));
        for p in [1.0, 1.5, 2.0, 3.0, 10.0] {
            assert!((lp_norm(&e, p, &cfg).unwrap().value - 1.0).abs() < 1e-12);
        }
        let f = TrigPolynomial::from_real([(0, 1.0), (1, 1.0)]);
        assert!((lp_norm(&f, 2.0, &cfg).unwrap().value - 2f64.sqrt()).abs() < 1e-12);
        assert!(lp_norm(&f, 0.5, &cfg).is_err());
    }

    #[test]
    fn luxemburg_of_constants() {
        let cfg = OrliczConfig::default();
        assert_eq!(
            luxemburg_psi2(&TrigPolynomial::zero(), &cfg).unwrap().value,
            0.0
        );
        for a in [1.0, 0.3, 5.0] {
            let n = luxemburg_psi2(&TrigPolynomial::monomial(0, c(a)), &cfg).unwrap();
            assert_eq!(n.method, NormMethod::ClosedForm);
            assert!((n.value - a / LN_2.sqrt()).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn singleton_psi_a() {
        let n = psi_a(&[37], &OrliczConfig::default()).unwrap();
        assert!((n.value - 1.0 / LN_2.sqrt()).abs() < 1e-12);
        assert!(psi_a(&[], &OrliczConfig::default()).is_err());
    }

    #[test]
    fn luxemburg_root_is_tight() {
        let cfg = OrliczConfig::default();
        let p = TrigPolynomial::from_real([(1, 1.0), (4, -0.5), (9, 2.0)]);
        let n = luxemburg_psi2(&p, &cfg).unwrap();
        let w = p.modulus_sq_grid(cfg.points_for(p.width()));
        let phi = OrliczFunctional::new(&w, cfg.exponent_clamp);
        assert!((phi.value(n.value) - 1.0).abs() < cfg.bisection_tol);
        assert!(n.lower <= n.value && n.value <= n.upper);
        assert!(n.upper - n.lower <= cfg.bisection_tol * n.upper * 1.000001);
    }

    #[test]
    fn rider_norm_simple_cases() {
        let a = TrigPolynomial::monomial(3, Complex64::new(0.0, -2.5));
        let r = rider_norm(&a, 100, 1).unwrap();
        assert_eq!((r.lower, r.value, r.upper), (2.5, 2.5, 2.5));
        let two = TrigPolynomial::from_real([(2, 1.0), (9, 1.0)]);
        let r = rider_norm(&two, 200, 5).unwrap();
        assert!(r.contains(2.0), "{r:?}");
        assert!(rider_norm(&two, 50, 5).is_err());
    }
}
