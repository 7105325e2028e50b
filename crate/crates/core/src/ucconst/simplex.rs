//! Primal simplex for `max cᵀa` subject to `Re(e^{iθ_s} f_a(y_j)) ≤ 1`.
//!
//! `f_a(y) = Σ_k a_k e^{i p_k y}` with `y_j = 2πj/G` and `θ_s = 2πs/m`. The
//! basis holds `d` rows (constraint rows or placeholder rows `a_k = 0`); its
//! inverse is kept explicitly, updated by column operations after each pivot
//! and rebuilt from an LU factorization periodically. All row activities for
//! a direction come from one FFT of length `G`.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polynorm::grid_values;

/// Coefficient model. `Real` uses `f(−y) = conj f(y)`, so only half the grid
/// carries distinct constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Placeholder(usize),
    Row(usize),
}

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN_FOR_BLAND: usize = 40;
const PIVOT_TOL: f64 = 1e-7;
const FEAS_TOL: f64 = 1e-10;
const TIE_CANDIDATES: usize = 32;
const CRASH_TOL: f64 = 1e-9;

pub(crate) struct SemiInfiniteLp {
    offsets: Vec<i64>,
    mode: Mode,
    grid: usize,
    sides: usize,
    cos_s: Vec<f64>,
    sin_s: Vec<f64>,
    grid_rows: usize,
    basis: Vec<Slot>,
    in_basis: Vec<bool>,
    /// Values held fixed by placeholder rows.
    pin: Vec<f64>,
    minv: DMatrix<f64>,
    a: DVector<f64>,
    activity: Vec<f64>,
    since_refactor: usize,
    degenerate_run: usize,
    pub iterations: usize,
    tol: f64,
    max_iters: usize,
}

impl SemiInfiniteLp {
    /// `offsets` must be nonnegative and below `grid`.
    pub(crate) fn new(
        offsets: Vec<i64>,
        mode: Mode,
        grid: usize,
        sides: usize,
        tol: f64,
        max_iters: usize,
    ) -> Self {
        let d = offsets.len();
        let n = match mode {
            Mode::Real => d,
            Mode::Complex => 2 * d,
        };
        let grid_rows = match mode {
            Mode::Real => grid / 2 + 1,
            Mode::Complex => grid,
        };
        let rows = grid_rows * sides;
        Self {
            cos_s: (0..sides)
                .map(|s| (TAU * s as f64 / sides as f64).cos())
                .collect(),
            sin_s: (0..sides)
                .map(|s| (TAU * s as f64 / sides as f64).sin())
                .collect(),
            offsets,
            mode,
            grid,
            sides,
            grid_rows,
            basis: (0..n).map(Slot::Placeholder).collect(),
            in_basis: vec![false; rows],
            pin: vec![0.0; n],
            minv: DMatrix::identity(n, n),
            a: DVector::zeros(n),
            activity: vec![0.0; rows],
            since_refactor: 0,
            degenerate_run: 0,
            iterations: 0,
            tol,
            max_iters,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.a.len()
    }

    pub(crate) fn rows(&self) -> usize {
        self.grid_rows * self.sides
    }

    /// Current point.
    pub(crate) fn point(&self) -> DVector<f64> {
        self.a.clone()
    }

    fn coeffs_of(&self, v: &DVector<f64>) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let d = self.offsets.len();
        let v = v.clone();
        self.offsets.iter().enumerate().map(move |(k, &p)| {
            let c = match self.mode {
                Mode::Real => Complex64::new(v[k], 0.0),
                Mode::Complex => Complex64::new(v[k], v[d + k]),
            };
            (p, c)
        })
    }

    /// `A v` for every constraint row.
    fn activities(&self, v: &DVector<f64>) -> Vec<f64> {
        let f = grid_values(self.coeffs_of(v), self.grid);
        let mut out = Vec::with_capacity(self.rows());
        for z in &f[..self.grid_rows] {
            for s in 0..self.sides {
                out.push(self.cos_s[s] * z.re - self.sin_s[s] * z.im);
            }
        }
        out
    }

    /// Row `r` as a dense coefficient vector.
    pub(crate) fn row(&self, r: usize) -> DVector<f64> {
        let (j, s) = (r / self.sides, r % self.sides);
        let d = self.offsets.len();
        let theta = TAU * s as f64 / self.sides as f64;
        let mut row = DVector::zeros(self.dim());
        for (k, &p) in self.offsets.iter().enumerate() {
            let phase = (p as u128 * j as u128 % self.grid as u128) as f64;
            let ang = theta + TAU * phase / self.grid as f64;
            row[k] = ang.cos();
            if self.mode == Mode::Complex {
                row[d + k] = -ang.sin();
            }
        }
        row
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|s| match s {
                Slot::Placeholder(k) => self.pin[*k],
                Slot::Row(_) => 1.0,
            }),
        )
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.dim();
        let mut b = DMatrix::zeros(n, n);
        for (i, slot) in self.basis.iter().enumerate() {
            match *slot {
                Slot::Placeholder(k) => b[(i, k)] = 1.0,
                Slot::Row(r) => b.set_row(i, &self.row(r).transpose()),
            }
        }
        self.minv = b
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;
        self.a = &self.minv * self.rhs();
        self.activity = self.activities(&self.a);
        self.since_refactor = 0;
        Ok(())
    }

    /// Runs the simplex from the current basis to optimality for objective `c`.
    pub(crate) fn maximize(&mut self, c: &DVector<f64>) -> Result<f64> {
        let mut just_crashed = false;
        loop {
            if self.iterations >= self.max_iters {
                return Err(Error::Numerical(format!(
                    "simplex did not converge in {} iterations",
                    self.max_iters
                )));
            }
            let lambda = self.minv.tr_mul(c);
            let bland = self.degenerate_run > DEGENERATE_RUN_FOR_BLAND;
            let placeholder = self
                .basis
                .iter()
                .position(|s| matches!(s, Slot::Placeholder(_)));
            if placeholder.is_some() && !just_crashed {
                let active = (0..self.rows())
                    .filter(|&r| !self.in_basis[r] && self.activity[r] >= 1.0 - CRASH_TOL)
                    .count();
                if active >= 2 {
                    self.crash()?;
                    just_crashed = true;
                    continue;
                }
            }
            just_crashed = false;
            let (pos, dir) = if let Some(i) = placeholder {
                let sign = if lambda[i] >= 0.0 { 1.0 } else { -1.0 };
                (i, self.minv.column(i) * sign)
            } else {
                let mut best: Option<usize> = None;
                for i in 0..lambda.len() {
                    if lambda[i] >= -self.tol {
                        continue;
                    }
                    best = match best {
                        None => Some(i),
                        Some(b) if bland => {
                            if self.row_id(i) < self.row_id(b) {
                                Some(i)
                            } else {
                                Some(b)
                            }
                        }
                        Some(b) => {
                            if lambda[i] < lambda[b] {
                                Some(i)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
                match best {
                    None => return Ok(c.dot(&self.a)),
                    Some(i) => (i, -self.minv.column(i)),
                }
            };
            let ad = self.activities(&dir);
            let scale = ad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let piv_tol = PIVOT_TOL * scale.max(1e-300);
            // Harris ratio test: bound the step with a small feasibility
            // slack, then take the largest pivot among rows within that bound.
            let mut bound = f64::INFINITY;
            for (r, &g) in ad.iter().enumerate() {
                if g > piv_tol && !self.in_basis[r] {
                    bound = bound.min((1.0 + FEAS_TOL - self.activity[r]) / g);
                }
            }
            let mut candidates: Vec<usize> = (0..ad.len())
                .filter(|&r| {
                    ad[r] > piv_tol
                        && !self.in_basis[r]
                        && (1.0 - self.activity[r]) / ad[r] <= bound
                })
                .collect();
            let enter = if bland {
                candidates.first().copied()
            } else {
                self.stablest(pos, &ad, &mut candidates)
            };
            let r =
                enter.ok_or_else(|| Error::Numerical("unbounded discretized problem".into()))?;
            let t = ((1.0 - self.activity[r]) / ad[r]).max(0.0);
            self.a.axpy(t, &dir, 1.0);
            for (x, g) in self.activity.iter_mut().zip(&ad) {
                *x += t * g;
            }
            self.pivot(pos, r)?;
            self.iterations += 1;
            if t * scale <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
        }
    }

    /// Among tied entering rows, the one whose pivot is largest relative to
    /// the rest of its transformed row (partial pivoting on the tie set).
    fn stablest(&self, pos: usize, ad: &[f64], candidates: &mut Vec<usize>) -> Option<usize> {
        if candidates.len() <= 1 {
            return candidates.first().copied();
        }
        candidates.sort_by(|&x, &y| ad[y].total_cmp(&ad[x]).then(x.cmp(&y)));
        candidates.truncate(TIE_CANDIDATES);
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for &r in candidates.iter() {
            let w = self.minv.tr_mul(&self.row(r));
            let score = w[pos].abs() / w.amax().max(1e-300);
            if score > best_score * (1.0 + 1e-12) {
                best = Some(r);
                best_score = score;
            }
        }
        best
    }

    /// Rebuilds the basis at the current point from its active rows, picking
    /// them by Gaussian elimination with partial pivoting. Directions the
    /// active rows do not span keep placeholders pinned at their current value.
    fn crash(&mut self) -> Result<()> {
        let n = self.dim();
        let active: Vec<usize> = (0..self.rows())
            .filter(|&r| self.activity[r] >= 1.0 - CRASH_TOL)
            .collect();
        let mut m = DMatrix::zeros(active.len(), n);
        for (i, &r) in active.iter().enumerate() {
            m.set_row(i, &self.row(r).transpose());
        }
        let mut used = vec![false; active.len()];
        let mut basis = Vec::with_capacity(n);
        for k in 0..n {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..active.len() {
                if !used[i] && best.is_none_or(|(_, v)| m[(i, k)].abs() > v) {
                    best = Some((i, m[(i, k)].abs()));
                }
            }
            match best {
                Some((i, v)) if v > 1e-9 => {
                    used[i] = true;
                    basis.push(Slot::Row(active[i]));
                    let pivot_row = m.row(i).clone_owned();
                    for i2 in 0..active.len() {
                        if !used[i2] {
                            let f = m[(i2, k)] / pivot_row[k];
                            if f != 0.0 {
                                for j in k..n {
                                    m[(i2, j)] -= f * pivot_row[j];
                                }
                            }
                        }
                    }
                }
                _ => {
                    self.pin[k] = self.a[k];
                    basis.push(Slot::Placeholder(k));
                }
            }
        }
        self.in_basis.iter_mut().for_each(|b| *b = false);
        for slot in &basis {
            if let Slot::Row(r) = *slot {
                self.in_basis[r] = true;
            }
        }
        self.basis = basis;
        self.refactor()
    }

    fn row_id(&self, i: usize) -> usize {
        match self.basis[i] {
            Slot::Placeholder(k) => k,
            Slot::Row(r) => self.dim() + r,
        }
    }

    fn pivot(&mut self, pos: usize, r: usize) -> Result<()> {
        let u = self.row(r);
        let w = self.minv.tr_mul(&u);
        let piv = w[pos];
        if piv.abs() < 1e-14 {
            return Err(Error::Numerical("vanishing simplex pivot".into()));
        }
        let col = self.minv.column(pos) / piv;
        for j in 0..self.dim() {
            if j == pos {
                continue;
            }
            let wj = w[j];
            if wj != 0.0 {
                let mut cj = self.minv.column_mut(j);
                cj.axpy(-wj, &col, 1.0);
            }
        }
        self.minv.set_column(pos, &col);
        if let Slot::Row(old) = self.basis[pos] {
            self.in_basis[old] = false;
        }
        self.basis[pos] = Slot::Row(r);
        self.in_basis[r] = true;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Largest constraint activity at the current point, recomputed from scratch.
    pub(crate) fn max_activity(&self) -> f64 {
        self.activities(&self.a)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The instance in CPLEX LP text format.
    pub(crate) fn write_lp<W: Write>(&self, c: &DVector<f64>, mut out: W) -> Result<()> {
        let names: Vec<String> = (0..self.dim())
            .map(|i| {
                let d = self.offsets.len();
                if i < d {
                    format!("re_{}", self.offsets[i])
                } else {
                    format!("im_{}", self.offsets[i - d])
                }
            })
            .collect();
        let term = |v: f64, name: &str| {
            if v >= 0.0 {
                format!(" + {v:.17} {name}")
            } else {
                format!(" - {:.17} {name}", -v)
            }
        };
        writeln!(
            out,
            "\\ grid {} sides {} mode {:?}",
            self.grid, self.sides, self.mode
        )?;
        write!(out, "Maximize\n obj:")?;
        for (i, name) in names.iter().enumerate() {
            if c[i] != 0.0 {
                write!(out, "{}", term(c[i], name))?;
            }
        }
        writeln!(out, "\nSubject To")?;
        for r in 0..self.rows() {
            let row = self.row(r);
            write!(out, " c{}_{}:", r / self.sides, r % self.sides)?;
            for (i, name) in names.iter().enumerate() {
                write!(out, "{}", term(row[i], name))?;
            }
            writeln!(out, " <= 1")?;
        }
        writeln!(out, "Bounds")?;
        for name in &names {
            writeln!(out, " {name} free")?;
        }
        writeln!(out, "End")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_character_has_value_one_up_to_polygon() {
        let mut lp = SemiInfiniteLp::new(vec![0], Mode::Real, 64, 16, 1e-10, 1000);
        let v = lp.maximize(&DVector::from_vec(vec![1.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let mut lp = SemiInfiniteLp::new(vec![0, 3], Mode::Real, 64, 16, 1e-10, 1000);
        let v = lp.maximize(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!(v >= 1.0 - 1e-12 && v <= 1.0 / (TAU / 32.0).cos() + 1e-12);
    }

    #[test]
    fn real_and_complex_modes_agree() {
        let offsets = vec![0, 1, 2, 5, 7];
        let c = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        let mut re = SemiInfiniteLp::new(offsets.clone(), Mode::Real, 128, 16, 1e-10, 10_000);
        let vr = re.maximize(&c).unwrap();
        let mut cx = SemiInfiniteLp::new(offsets, Mode::Complex, 128, 16, 1e-10, 10_000);
        let mut c2 = c.clone().resize_vertically(10, 0.0);
        c2[0] = 1.0;
        let vc = cx.maximize(&c2).unwrap();
        assert!((vr - vc).abs() < 1e-8, "{vr} vs {vc}");
        assert!(re.max_activity() <= 1.0 + 1e-9);
    }

    #[test]
    fn lp_text_has_all_rows() {
        let lp = SemiInfiniteLp::new(vec![0, 2], Mode::Real, 16, 8, 1e-10, 10);
        let mut buf = Vec::new();
        lp.write_lp(&DVector::from_vec(vec![1.0, 0.0]), &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.matches("<= 1").count(), lp.rows());
        assert!(text.trim_end().ends_with("End"));
    }
}
