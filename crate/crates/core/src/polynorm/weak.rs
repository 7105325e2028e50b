use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::norms::{solve_luxemburg, NormEstimate, NormMethod, OrliczConfig};
use super::poly::{fft_in_place, grid_values};
use crate::concentration::BanachFrame;
use crate::error::Result;
use crate::rng::{trial_rng, Stream};

/// Envelope constant for `σ ≤ C₀·√(n / log n)` over exponential frames.
///
/// Fitted from the ascent lower bounds on full dyadic blocks `|A| = 16..1024`,
/// where `σ̂·√(log n / n)` rises slowly from 0.911 to 0.934; rounded up.
pub const DEFAULT_C0: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakNormOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub c0: f64,
}

impl Default for WeakNormOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            iterations: 60,
            seed: 0x5eed,
            c0: DEFAULT_C0,
        }
    }
}

/// Weak ℓ₂ norm `σ = sup_{‖a‖₂ ≤ 1} ‖Σ aⱼ vⱼ‖` with default search options.
pub fn weak_l2_norm(frame: &BanachFrame) -> Result<NormEstimate> {
    weak_l2_norm_with(frame, &WeakNormOptions::default())
}

/// Weak ℓ₂ norm of a frame.
///
/// For vectors in `(ℝᵐ, ‖·‖_∞)` the dual ball is the ℓ₁ ball, whose extreme
/// points are `±eᵢ`, so `σ = maxᵢ (Σⱼ vⱼ[i]²)^{1/2}` exactly.
///
/// For characters in `L^{Ψ₂}` the supremum is not convex; the value is the
/// best multi-start projected-gradient ascent result, which is a certified
/// lower bound. The upper bound is `√n/√ln 2` (from `‖f‖_∞ ≤ √n`) or the
/// envelope `C₀√(n/log n)` when that is smaller and still above the lower
/// bound.
pub fn weak_l2_norm_with(frame: &BanachFrame, opts: &WeakNormOptions) -> Result<NormEstimate> {
    match frame {
        BanachFrame::Coordinate { vectors } => {
            let dim = vectors.first().map_or(0, Vec::len);
            let sigma = (0..dim)
                .map(|i| vectors.iter().map(|v| v[i] * v[i]).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            Ok(NormEstimate::exact(sigma))
        }
        BanachFrame::Exponential {
            frequencies,
            config,
        } => {
            config.validate()?;
            let n = frequencies.len();
            let lower = ascend(frequencies, config, opts);
            let trivial = (n as f64 / LN_2).sqrt();
            let mut upper = trivial;
            if n >= 2 {
                let envelope = opts.c0 * (n as f64 / (n as f64).ln()).sqrt();
                if envelope < upper && envelope >= lower {
                    upper = envelope;
                }
            }
            if n == 1 {
                return Ok(NormEstimate::exact(trivial));
            }
            Ok(NormEstimate {
                value: lower,
                lower,
                upper,
                method: NormMethod::OptimizationLowerBound,
                samples: opts.restarts,
            })
        }
    }
}

struct Objective<'a> {
    offsets: Vec<i64>,
    len: usize,
    config: &'a OrliczConfig,
}

impl Objective<'_> {
    fn grid(&self, a: &[Complex64]) -> Vec<Complex64> {
        grid_values(
            self.offsets.iter().copied().zip(a.iter().copied()),
            self.len,
        )
    }

    fn norm_of(&self, f: &[Complex64], guess: Option<f64>) -> f64 {
        let w: Vec<f64> = f.iter().map(|z| z.norm_sqr()).collect();
        solve_luxemburg(
            &w,
            self.config.bisection_tol,
            self.config.exponent_clamp,
            guess,
        )
        .value
    }

    /// Gradient of `a ↦ ‖f_a‖_{Ψ₂}` (as `∂/∂Re + i∂/∂Im`) at norm `t`.
    fn gradient(&self, f: &[Complex64], t: f64) -> Vec<Complex64> {
        let s = 1.0 / (t * t);
        let mut dt = 0.0;
        let mut buf: Vec<Complex64> = f
            .iter()
            .map(|z| {
                let u = z.norm_sqr() * s;
                let e = u.exp();
                dt += e * u;
                z * e
            })
            .collect();
        fft_in_place(&mut buf, false);
        let l = self.len as f64;
        // ∂Φ/∂t = −(2/(L t)) Σ e_j u_j;  ∂Φ/∂ā = (2/(L t²)) FFT(e f).
        let dphi_dt = -2.0 * dt / (l * t);
        let scale = 2.0 * s / l / -dphi_dt;
        self.offsets
            .iter()
            .map(|&p| buf[p.rem_euclid(self.len as i64) as usize] * scale)
            .collect()
    }
}

fn normalize(a: &mut [Complex64]) {
    let n = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in a.iter_mut() {
        *z /= n;
    }
}

fn ascend(frequencies: &[i64], config: &OrliczConfig, opts: &WeakNormOptions) -> f64 {
    let n = frequencies.len();
    let lo = *frequencies.iter().min().expect("nonempty frame");
    let width = (*frequencies.iter().max().unwrap() - lo) as u64;
    let obj = Objective {
        offsets: frequencies.iter().map(|k| k - lo).collect(),
        len: config.points_for(width),
        config,
    };
    let mut best = 0.0f64;
    for restart in 0..opts.restarts.max(1) {
        let mut a: Vec<Complex64> = match restart {
            0 => vec![Complex64::new(1.0, 0.0); n],
            1 => (0..n)
                .map(|i| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0))
                .collect(),
            _ => {
                let mut rng = trial_rng(opts.seed, Stream::Search, restart as u64);
                (0..n)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect()
            }
        };
        normalize(&mut a);
        let mut f = obj.grid(&a);
        let mut t = obj.norm_of(&f, None);
        let mut step = 0.5;
        for _ in 0..opts.iterations {
            let g = obj.gradient(&f, t);
            // Tangential part on the unit sphere.
            let radial: f64 = g.iter().zip(&a).map(|(gi, ai)| (gi * ai.conj()).re).sum();
            let tangent: Vec<Complex64> =
                g.iter().zip(&a).map(|(gi, ai)| gi - ai * radial).collect();
            let tn = tangent.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if tn < 1e-12 * t {
                break;
            }
            loop {
                let mut trial: Vec<Complex64> = a
                    .iter()
                    .zip(&tangent)
                    .map(|(ai, ti)| ai + ti * (step / tn))
                    .collect();
                normalize(&mut trial);
                let tf = obj.grid(&trial);
                let tt = obj.norm_of(&tf, Some(t));
                if tt > t {
                    a = trial;
                    f = tf;
                    t = tt;
                    step = (step * 1.5).min(1.0);
                    break;
                }
                step *= 0.5;
                if step < 1e-4 {
                    break;
                }
            }
            if step < 1e-4 {
                break;
            }
        }
        best = best.max(t);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_closed_forms() {
        let f = BanachFrame::coordinate(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(weak_l2_norm(&f).unwrap().value, 1.0);
        let f = BanachFrame::coordinate(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert!((weak_l2_norm(&f).unwrap().value - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exponential_singleton() {
        let f = BanachFrame::exponential(vec![5], OrliczConfig::default()).unwrap();
        let s = weak_l2_norm(&f).unwrap();
        assert!((s.value - 1.0 / LN_2.sqrt()).abs() < 1e-12);
        assert_eq!(s.lower, s.upper);
    }

    #[test]
    fn ascent_beats_flat_start() {
        let freqs: Vec<i64> = (64..128).collect();
        let cfg = OrliczConfig::default();
        let f = BanachFrame::exponential(freqs.clone(), cfg).unwrap();
        let opts = WeakNormOptions {
            restarts: 4,
            iterations: 30,
            ..Default::default()
        };
        let s = weak_l2_norm_with(&f, &opts).unwrap();
        let flat = super::super::psi_a(&freqs, &cfg).unwrap().value / 8.0;
        assert!(s.lower >= flat * (1.0 - 1e-9));
        assert!(s.lower <= s.upper);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = OrliczConfig::default();
        let offsets = vec![0i64, 3, 7];
        let obj = Objective {
            offsets: offsets.clone(),
            len: cfg.points_for(7),
            config: &cfg,
        };
        let a = vec![
            Complex64::new(0.6, 0.1),
            Complex64::new(-0.3, 0.5),
            Complex64::new(0.2, -0.4),
        ];
        let f = obj.grid(&a);
        let t = obj.norm_of(&f, None);
        let g = obj.gradient(&f, t);
        let h = 1e-6;
        for i in 0..3 {
            for (dir, part) in [(Complex64::new(1.0, 0.0), 0), (Complex64::new(0.0, 1.0), 1)] {
                let mut ap = a.clone();
                let mut am = a.clone();
                ap[i] += dir * h;
                am[i] -= dir * h;
                let d = (obj.norm_of(&obj.grid(&ap), None) - obj.norm_of(&obj.grid(&am), None))
                    / (2.0 * h);
                let want = if part == 0 { g[i].re } else { g[i].im };
                assert!(
                    (d - want).abs() < 1e-5,
                    "i={i} part={part}: fd {d} vs {want}"
                );
            }
        }
    }
}
