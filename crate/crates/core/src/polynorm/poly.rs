use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized DFT. `inverse = true` computes `Σ_k c_k e^{+2πi jk/L}`.
pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

/// Values of `Σ c_k e^{ikx}` at `x_j = 2πj/len` for frequency/coefficient
/// pairs, via one inverse FFT (frequencies are folded modulo `len`, which is
/// exact at the sample points).
pub(crate) fn grid_values<I>(terms: I, len: usize) -> Vec<Complex64>
where
    I: IntoIterator<Item = (i64, Complex64)>,
{
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (k, c) in terms {
        buf[k.rem_euclid(len as i64) as usize] += c;
    }
    fft_in_place(&mut buf, true);
    buf
}

pub(crate) fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// A trigonometric polynomial `f(x) = Σ f̂(k) e^{ikx}` on the circle.
///
/// Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<(i64, f64, f64)>", from = "Vec<(i64, f64, f64)>")]
pub struct TrigPolynomial {
    coeffs: BTreeMap<i64, Complex64>,
}

impl From<TrigPolynomial> for Vec<(i64, f64, f64)> {
    fn from(p: TrigPolynomial) -> Self {
        p.coeffs.into_iter().map(|(k, c)| (k, c.re, c.im)).collect()
    }
}

impl From<Vec<(i64, f64, f64)>> for TrigPolynomial {
    fn from(v: Vec<(i64, f64, f64)>) -> Self {
        TrigPolynomial::from_terms(v.into_iter().map(|(k, re, im)| (k, Complex64::new(re, im))))
    }
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a polynomial, summing repeated frequencies and dropping zeros.
    pub fn from_terms<I: IntoIterator<Item = (i64, Complex64)>>(terms: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in terms {
            *coeffs.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn from_real<I: IntoIterator<Item = (i64, f64)>>(terms: I) -> Self {
        Self::from_terms(terms.into_iter().map(|(k, a)| (k, Complex64::new(a, 0.0))))
    }

    /// `e_k` scaled by `c`.
    pub fn monomial(k: i64, c: Complex64) -> Self {
        Self::from_terms([(k, c)])
    }

    /// `Σ_{k∈A} e_k`.
    pub fn characteristic<'a, I: IntoIterator<Item = &'a i64>>(set: I) -> Self {
        Self::from_real(set.into_iter().map(|&k| (k, 1.0)))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of nonzero coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    /// The spectrum `Sp(f)` in increasing order.
    pub fn spectrum(&self) -> Vec<i64> {
        self.coeffs.keys().copied().collect()
    }

    /// `max |k|` over the support; 0 for the zero polynomial.
    pub fn degree(&self) -> u64 {
        self.coeffs
            .keys()
            .map(|k| k.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// `max Sp − min Sp`.
    pub fn width(&self) -> u64 {
        match (self.coeffs.keys().next(), self.coeffs.keys().next_back()) {
            (Some(&lo), Some(&hi)) => (hi - lo) as u64,
            _ => 0,
        }
    }

    /// Half the spectral width. `|f|` is the modulus of a polynomial with
    /// frequencies in `[−r, r]`, which is what Bernstein's inequality sees.
    pub fn radius(&self) -> f64 {
        self.width() as f64 / 2.0
    }

    /// A polynomial with the same modulus whose lowest frequency is 0.
    pub fn modulus_canonical(&self) -> TrigPolynomial {
        match self.coeffs.keys().next() {
            Some(&lo) => self.shifted(-lo),
            None => self.clone(),
        }
    }

    /// `e_a · f`.
    pub fn shifted(&self, a: i64) -> TrigPolynomial {
        Self {
            coeffs: self.coeffs.iter().map(|(&k, &c)| (k + a, c)).collect(),
        }
    }

    pub fn scaled(&self, lambda: Complex64) -> TrigPolynomial {
        Self::from_terms(self.terms().map(|(k, c)| (k, c * lambda)))
    }

    /// `‖f̂‖₁`.
    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `‖f̂‖₂`, which equals `‖f‖_{L²}` by Parseval.
    pub fn coeff_l2(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.terms()
            .map(|(k, c)| c * Complex64::cis(k as f64 * x))
            .sum()
    }

    /// `S_N f = Σ_{|k|≤N} f̂(k) e_k`.
    pub fn partial_sum(&self, n: u64) -> TrigPolynomial {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| k.unsigned_abs() <= n)
                .map(|(&k, &c)| (k, c))
                .collect(),
        }
    }

    /// Values at `x_j = 2πj/len`, `j = 0..len`. Uses the FFT once the grid
    /// is at least `4·(degree + 1)` points, direct summation below that.
    pub fn evaluate_grid(&self, len: usize) -> Vec<Complex64> {
        assert!(len >= 1, "grid must have at least one point");
        if len as u64 >= 4 * (self.degree() + 1) {
            self.evaluate_grid_fft(len)
        } else {
            self.evaluate_grid_direct(len)
        }
    }

    pub fn evaluate_grid_fft(&self, len: usize) -> Vec<Complex64> {
        grid_values(self.terms(), len)
    }

    pub fn evaluate_grid_direct(&self, len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|j| self.eval(TAU * j as f64 / len as f64))
            .collect()
    }

    /// `|f(x_j)|²` on a grid, after moving the spectrum to start at 0.
    pub(crate) fn modulus_sq_grid(&self, len: usize) -> Vec<f64> {
        let lo = self.coeffs.keys().next().copied().unwrap_or(0);
        grid_values(self.terms().map(|(k, c)| (k - lo, c)), len)
            .into_iter()
            .map(|z| z.norm_sqr())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_and_character_grids() {
        let one = TrigPolynomial::monomial(0, c(1.0, 0.0));
        for z in one.evaluate_grid(4) {
            assert!((z - c(1.0, 0.0)).norm() < 1e-15);
        }
        let e1 = TrigPolynomial::monomial(1, c(1.0, 0.0));
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (z, w) in e1.evaluate_grid(4).into_iter().zip(want) {
            assert!((z - w).norm() < 1e-15);
        }
    }

    #[test]
    fn zeros_are_not_stored() {
        let p = TrigPolynomial::from_real([(3, 1.0), (3, -1.0), (5, 0.0), (-2, 2.0)]);
        assert_eq!(p.spectrum(), vec![-2]);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn partial_sums() {
        let p = TrigPolynomial::from_real([(-3, 1.0), (0, 2.0), (2, 1.0)]);
        assert_eq!(p.partial_sum(3), p);
        assert_eq!(p.partial_sum(0), TrigPolynomial::from_real([(0, 2.0)]));
        let s = p.partial_sum(2);
        assert_eq!(s.partial_sum(2), s);
    }

    #[test]
    fn json_triples() {
        let p = TrigPolynomial::from_terms([(-1, c(0.5, -2.0)), (4, c(1.0, 0.0))]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[-1,0.5,-2.0],[4,1.0,0.0]]");
        let q: TrigPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
