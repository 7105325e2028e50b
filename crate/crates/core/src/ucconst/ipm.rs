//! Primal-dual interior point (Mehrotra predictor-corrector) for
//! `max cᵀa` subject to `Re(e^{iθ_s} f_a(y_j)) ≤ 1`.
//!
//! The constraint matrix is never formed. `Av`, `Aᵀy` and the normal matrix
//! `AᵀDA` all reduce to FFTs on the grid: with `φ_k = θ_s + p_k y_j`,
//! `Σ D cos φ_k cos φ_l = ½ Re[Ŵ(p_k − p_l) + V̂(p_k + p_l)]` where
//! `W_j = Σ_s D_{js}` and `V_j = Σ_s D_{js} e^{2iθ_s}`.

use std::f64::consts::TAU;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::simplex::Mode;
use crate::error::{Error, Result};
use crate::polynorm::{fft_in_place, grid_values};

const STEP_FRACTION: f64 = 0.995;
const MU_FLOOR: f64 = 1e-18;
/// Accepted merit when the strict tolerance cannot be met.
const LOOSE_TOL: f64 = 1e-6;

pub(crate) struct InteriorPoint {
    offsets: Vec<i64>,
    mode: Mode,
    grid: usize,
    sides: usize,
    grid_rows: usize,
    rot: Vec<Complex64>,
    tol: f64,
    max_iters: usize,
    pub iterations: usize,
}

pub(crate) struct IpmSolution {
    pub a: DVector<f64>,
    /// Dual objective `Σ y`; an upper bound for the discretized optimum up to
    /// the dual residual.
    pub dual: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub primal: f64,
}

impl InteriorPoint {
    /// `offsets` must be nonnegative and below `grid`.
    pub(crate) fn new(
        offsets: Vec<i64>,
        mode: Mode,
        grid: usize,
        sides: usize,
        tol: f64,
        max_iters: usize,
    ) -> Self {
        let grid_rows = match mode {
            Mode::Real => grid / 2 + 1,
            Mode::Complex => grid,
        };
        Self {
            rot: (0..sides)
                .map(|s| Complex64::from_polar(1.0, TAU * s as f64 / sides as f64))
                .collect(),
            offsets,
            mode,
            grid,
            sides,
            grid_rows,
            tol,
            max_iters,
            iterations: 0,
        }
    }

    fn dim(&self) -> usize {
        match self.mode {
            Mode::Real => self.offsets.len(),
            Mode::Complex => 2 * self.offsets.len(),
        }
    }

    fn rows(&self) -> usize {
        self.grid_rows * self.sides
    }

    /// `A v`.
    pub(crate) fn apply(&self, v: &DVector<f64>) -> Vec<f64> {
        let d = self.offsets.len();
        let terms = self.offsets.iter().enumerate().map(|(k, &p)| {
            let c = match self.mode {
                Mode::Real => Complex64::new(v[k], 0.0),
                Mode::Complex => Complex64::new(v[k], v[d + k]),
            };
            (p, c)
        });
        let f = grid_values(terms, self.grid);
        let mut out = Vec::with_capacity(self.rows());
        for z in &f[..self.grid_rows] {
            for r in &self.rot {
                out.push((r * z).re);
            }
        }
        out
    }

    /// `Aᵀ y`.
    fn apply_t(&self, y: &[f64]) -> DVector<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid];
        for (j, chunk) in y.chunks(self.sides).enumerate() {
            buf[j] = chunk.iter().zip(&self.rot).map(|(w, r)| r * w).sum();
        }
        fft_in_place(&mut buf, true);
        let d = self.offsets.len();
        let mut out = DVector::zeros(self.dim());
        for (k, &p) in self.offsets.iter().enumerate() {
            let z = buf[p as usize % self.grid];
            out[k] = z.re;
            if self.mode == Mode::Complex {
                out[d + k] = -z.im;
            }
        }
        out
    }

    /// `Aᵀ diag(w) A`.
    fn normal_matrix(&self, w: &[f64]) -> DMatrix<f64> {
        let mut wb = vec![Complex64::new(0.0, 0.0); self.grid];
        let mut vb = vec![Complex64::new(0.0, 0.0); self.grid];
        for (j, chunk) in w.chunks(self.sides).enumerate() {
            wb[j] = Complex64::new(chunk.iter().sum(), 0.0);
            vb[j] = chunk.iter().zip(&self.rot).map(|(x, r)| r * r * x).sum();
        }
        fft_in_place(&mut wb, true);
        fft_in_place(&mut vb, true);
        let g = self.grid as i64;
        let at = |buf: &[Complex64], m: i64| buf[m.rem_euclid(g) as usize];
        let d = self.offsets.len();
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for k in 0..d {
            for l in 0..=k {
                let (pk, pl) = (self.offsets[k], self.offsets[l]);
                let wd = at(&wb, pk - pl);
                let vs = at(&vb, pk + pl);
                let rr = 0.5 * (wd.re + vs.re);
                m[(k, l)] = rr;
                m[(l, k)] = rr;
                if self.mode == Mode::Complex {
                    let ii = 0.5 * (wd.re - vs.re);
                    m[(d + k, d + l)] = ii;
                    m[(d + l, d + k)] = ii;
                    // cos φ_k · (−sin φ_l) and its mirror.
                    let ri = 0.5 * (wd.im - vs.im);
                    let ir = 0.5 * (-wd.im - vs.im);
                    m[(k, d + l)] = ri;
                    m[(d + l, k)] = ri;
                    m[(l, d + k)] = ir;
                    m[(d + k, l)] = ir;
                }
            }
        }
        m
    }

    fn factor(&self, w: &[f64]) -> Result<Cholesky<f64, Dyn>> {
        let mut m = self.normal_matrix(w);
        let scale = m.diagonal().amax().max(1e-300);
        for i in 0..m.nrows() {
            m[(i, i)] += 1e-13 * scale;
        }
        m.cholesky()
            .ok_or_else(|| Error::Numerical("normal matrix lost positive definiteness".into()))
    }

    pub(crate) fn maximize(&mut self, c: &DVector<f64>) -> Result<IpmSolution> {
        let rows = self.rows();
        let n = self.dim();
        let cn = c.norm();
        // Start: a = 0, s = 1, y = least-norm solution of Aᵀy = c shifted positive.
        let mut a = DVector::zeros(n);
        let mut s = vec![1.0; rows];
        let ones = vec![1.0; rows];
        let z = self.factor(&ones)?.solve(c);
        let mut y = self.apply(&z);
        let shift = (-1.5 * y.iter().cloned().fold(f64::INFINITY, f64::min)).max(0.0);
        let floor = (cn / rows as f64).max(1e-8);
        for v in &mut y {
            *v += shift + floor;
        }
        let mut best: Option<(f64, IpmSolution)> = None;
        for it in 0..self.max_iters {
            self.iterations += 1;
            let aa = self.apply(&a);
            let rp: Vec<f64> = (0..rows).map(|r| 1.0 - aa[r] - s[r]).collect();
            let rd = c - self.apply_t(&y);
            let mu = s.iter().zip(&y).map(|(s, y)| s * y).sum::<f64>() / rows as f64;
            let primal = c.dot(&a);
            let dual: f64 = y.iter().sum();
            let rp_n = rp.iter().map(|x| x * x).sum::<f64>().sqrt() / (1.0 + (rows as f64).sqrt());
            let rd_n = rd.norm() / (1.0 + cn);
            let gap = (dual - primal).abs() / (1.0 + primal.abs());
            let merit = rp_n.max(rd_n).max(gap);
            if best.as_ref().is_none_or(|b| merit < b.0) {
                best = Some((
                    merit,
                    IpmSolution {
                        a: a.clone(),
                        dual,
                        primal,
                    },
                ));
            }
            // Once complementarity is exhausted the dual residual only drifts.
            if merit < self.tol || mu < MU_FLOOR * (1.0 + primal.abs()) {
                break;
            }
            let dw: Vec<f64> = (0..rows).map(|r| y[r] / s[r]).collect();
            let chol = self.factor(&dw)?;
            let direction = |rc: &[f64]| -> Result<(DVector<f64>, Vec<f64>, Vec<f64>)> {
                // Δy = D(AΔa) + S⁻¹rc − D rp and AᵀDA Δa = rd − Aᵀ(S⁻¹rc − D rp).
                let t: Vec<f64> = (0..rows).map(|r| rc[r] / s[r] - dw[r] * rp[r]).collect();
                let rhs = &rd - self.apply_t(&t);
                let da = chol.solve(&rhs);
                let ada = self.apply(&da);
                let dy: Vec<f64> = (0..rows).map(|r| dw[r] * ada[r] + t[r]).collect();
                let ds: Vec<f64> = (0..rows).map(|r| rp[r] - ada[r]).collect();
                Ok((da, ds, dy))
            };
            let max_step = |v: &[f64], dv: &[f64]| {
                v.iter()
                    .zip(dv)
                    .filter(|(_, d)| **d < 0.0)
                    .map(|(x, d)| -x / d)
                    .fold(1.0f64, f64::min)
            };
            // Predictor.
            let rc: Vec<f64> = (0..rows).map(|r| -s[r] * y[r]).collect();
            let (_, ds, dy) = direction(&rc)?;
            let (ap, ad) = (max_step(&s, &ds), max_step(&y, &dy));
            let mu_aff = (0..rows)
                .map(|r| (s[r] + ap * ds[r]) * (y[r] + ad * dy[r]))
                .sum::<f64>()
                / rows as f64;
            let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
            // Corrector.
            let rc: Vec<f64> = (0..rows)
                .map(|r| sigma * mu - s[r] * y[r] - ds[r] * dy[r])
                .collect();
            let (da, ds, dy) = direction(&rc)?;
            let ap = (STEP_FRACTION * max_step(&s, &ds)).min(1.0);
            let ad = (STEP_FRACTION * max_step(&y, &dy)).min(1.0);
            a.axpy(ap, &da, 1.0);
            for r in 0..rows {
                s[r] += ap * ds[r];
                y[r] += ad * dy[r];
            }
            if !a.iter().all(|x| x.is_finite()) {
                return Err(Error::Numerical(format!(
                    "interior point diverged at iteration {it}"
                )));
            }
        }
        match best {
            Some((merit, sol)) if merit < LOOSE_TOL.max(self.tol) => Ok(sol),
            Some((merit, _)) => Err(Error::Numerical(format!(
                "interior point stalled at merit {merit:.2e} after {} iterations",
                self.iterations
            ))),
            None => Err(Error::Numerical("interior point made no iterations".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::simplex::SemiInfiniteLp;
    use super::*;

    fn dense(ip: &InteriorPoint, w: &[f64]) -> DMatrix<f64> {
        let n = ip.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, &wr) in w.iter().enumerate() {
            let mut e = DVector::zeros(n);
            for k in 0..n {
                let mut unit = DVector::zeros(n);
                unit[k] = 1.0;
                e[k] = ip.apply(&unit)[r];
            }
            m += &e * e.transpose() * wr;
        }
        m
    }

    #[test]
    fn normal_matrix_matches_dense_product() {
        for mode in [Mode::Real, Mode::Complex] {
            let ip = InteriorPoint::new(vec![0, 1, 4, 9], mode, 32, 8, 1e-9, 100);
            let w: Vec<f64> = (0..ip.rows())
                .map(|r| 1.0 + (r as f64 * 0.37).sin())
                .collect();
            let diff = (ip.normal_matrix(&w) - dense(&ip, &w)).amax();
            assert!(diff < 1e-10, "{mode:?}: {diff}");
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let ip = InteriorPoint::new(vec![0, 2, 3, 7], Mode::Complex, 32, 8, 1e-9, 100);
        let v = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.7, -0.6]);
        let y: Vec<f64> = (0..ip.rows()).map(|r| (r as f64 * 0.11).cos()).collect();
        let lhs: f64 = ip.apply(&v).iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((lhs - v.dot(&ip.apply_t(&y))).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_simplex() {
        let offsets = vec![0i64, 1, 2, 3, 5, 8, 9, 12];
        for mode in [Mode::Real, Mode::Complex] {
            let n = if mode == Mode::Real { 8 } else { 16 };
            let c = DVector::from_fn(n, |i, _| if i < 4 { 1.0 } else { 0.0 });
            let mut sx = SemiInfiniteLp::new(offsets.clone(), mode, 128, 16, 1e-10, 100_000);
            let v = sx.maximize(&c).unwrap();
            let mut ip = InteriorPoint::new(offsets.clone(), mode, 128, 16, 1e-10, 200);
            let sol = ip.maximize(&c).unwrap();
            assert!(
                (sol.primal - v).abs() < 1e-7,
                "{mode:?}: {} vs {v}",
                sol.primal
            );
            assert!((sol.dual - v).abs() < 1e-7);
        }
    }
}
