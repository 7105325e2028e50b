//! Selector schedules and the random sets they generate.
//!
//! A schedule assigns a mean `δ_k ∈ [0, 1]` to every integer `k ≥ k_min`; a
//! sample includes each `k` independently with probability `δ_k`. All
//! randomness is keyed by `(seed, k)` so replays are bit-identical and the
//! per-index decisions do not depend on iteration order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{KeyedUniform, Stream};

/// Smallest index at which schedules are evaluated by default. The rider
/// formula needs `log log k > 0`, and 16 is the first power of two past `e^e`.
pub const DEFAULT_K_MIN: u64 = 16;

/// Above this many terms `expected_count` switches from summation to
/// quadrature for schedules without a closed block form.
pub const EXACT_SUM_LIMIT: u64 = 10_000_000;

const SIMPSON_PANELS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `δ_k = c·n/2ⁿ` for `k ∈ [2ⁿ, 2ⁿ⁺¹)`.
    Dyadic {
        c: f64,
    },
    /// `δ_k = c·(log k)^α / (k·(log log k)^{α+1})`.
    Rider {
        c: f64,
        alpha: f64,
    },
    Constant {
        delta: f64,
    },
    /// Explicit `(k, δ_k)` pairs sorted by `k`; unlisted indices have mean 0.
    Custom {
        table: Vec<(u64, f64)>,
    },
}

/// A family of selector means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorSchedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    pub k_min: u64,
}

fn check_scale(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "schedule scale c must be positive, got {c}"
        )))
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must lie in [0, 1], got {p}")))
    }
}

impl SelectorSchedule {
    pub fn dyadic(c: f64) -> Result<Self> {
        check_scale(c)?;
        Ok(Self {
            kind: ScheduleKind::Dyadic { c },
            k_min: DEFAULT_K_MIN,
        })
    }

    pub fn rider(c: f64, alpha: f64) -> Result<Self> {
        check_scale(c)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            kind: ScheduleKind::Rider { c, alpha },
            k_min: DEFAULT_K_MIN,
        })
    }

    pub fn constant(delta: f64) -> Result<Self> {
        check_probability(delta, "constant mean")?;
        Ok(Self {
            kind: ScheduleKind::Constant { delta },
            k_min: DEFAULT_K_MIN,
        })
    }

    pub fn custom(mut table: Vec<(u64, f64)>) -> Result<Self> {
        table.sort_by_key(|&(k, _)| k);
        for w in table.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Config(format!(
                    "duplicate custom entry for k = {}",
                    w[0].0
                )));
            }
        }
        for &(_, d) in &table {
            check_probability(d, "custom mean")?;
        }
        Ok(Self {
            kind: ScheduleKind::Custom { table },
            k_min: DEFAULT_K_MIN,
        })
    }

    /// Overrides the smallest admissible index. Rider schedules need
    /// `k_min ≥ 16`; the other kinds accept any `k_min ≥ 1`.
    pub fn with_k_min(mut self, k_min: u64) -> Result<Self> {
        let floor = match self.kind {
            ScheduleKind::Rider { .. } => DEFAULT_K_MIN,
            _ => 1,
        };
        if k_min < floor {
            return Err(Error::Config(format!(
                "k_min must be at least {floor}, got {k_min}"
            )));
        }
        self.k_min = k_min;
        Ok(self)
    }

    /// Short human-readable identifier used in file headers and reports.
    pub fn label(&self) -> String {
        match &self.kind {
            ScheduleKind::Dyadic { c } => format!("dyadic(c={c})"),
            ScheduleKind::Rider { c, alpha } => format!("rider(c={c},alpha={alpha})"),
            ScheduleKind::Constant { delta } => format!("constant(delta={delta})"),
            ScheduleKind::Custom { table } => format!("custom({} entries)", table.len()),
        }
    }

    /// Selector mean at `k`, clamped to `[0, 1]`.
    pub fn mean_at(&self, k: u64) -> Result<f64> {
        if k < self.k_min {
            return Err(Error::Domain {
                k,
                k_min: self.k_min,
            });
        }
        Ok(self.mean_unchecked(k))
    }

    fn mean_unchecked(&self, k: u64) -> f64 {
        match &self.kind {
            ScheduleKind::Dyadic { c } => dyadic_mean(*c, block_index(k)),
            ScheduleKind::Rider { c, alpha } => rider_density(*c, *alpha, k as f64),
            ScheduleKind::Constant { delta } => *delta,
            ScheduleKind::Custom { table } => match table.binary_search_by_key(&k, |&(j, _)| j) {
                Ok(i) => table[i].1,
                Err(_) => 0.0,
            },
        }
    }
}

/// `n` with `k ∈ [2ⁿ, 2ⁿ⁺¹)`.
#[inline]
pub fn block_index(k: u64) -> u32 {
    63 - k.leading_zeros()
}

#[inline]
fn dyadic_mean(c: f64, n: u32) -> f64 {
    (c * f64::from(n) * 0.5f64.powi(n as i32)).min(1.0)
}

/// Continuous rider density, clamped to `[0, 1]`; valid for `t > e`.
#[inline]
pub(crate) fn rider_density(c: f64, alpha: f64, t: f64) -> f64 {
    let l = t.ln();
    let ll = l.ln();
    (c * l.powf(alpha) / (t * ll.powf(alpha + 1.0))).clamp(0.0, 1.0)
}

/// One realization `Λ(ω)` restricted to an inclusive index range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSetSample {
    pub elements: Vec<u64>,
    pub seed: u64,
    pub schedule: SelectorSchedule,
    /// Inclusive `(k_lo, k_hi)`.
    pub range: (u64, u64),
    /// Seed of the sample this one was thinned from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinned_from: Option<u64>,
}

impl RandomSetSample {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements in the inclusive interval `[a, b]`.
    pub fn slice(&self, a: u64, b: u64) -> &[u64] {
        let lo = self.elements.partition_point(|&k| k < a);
        let hi = self.elements.partition_point(|&k| k <= b);
        &self.elements[lo..hi.max(lo)]
    }

    /// `|Λ ∩ [1, n]|`.
    pub fn count_up_to(&self, n: u64) -> usize {
        self.elements.partition_point(|&k| k <= n)
    }
}

fn check_range(schedule: &SelectorSchedule, range: (u64, u64)) -> Result<()> {
    if range.0 < schedule.k_min {
        return Err(Error::Domain {
            k: range.0,
            k_min: schedule.k_min,
        });
    }
    if range.1 >= 1 << 63 {
        return Err(Error::Precondition(format!(
            "range end {} must be below 2^63",
            range.1
        )));
    }
    Ok(())
}

/// Draws `Λ(ω) ∩ [k_lo, k_hi]`: each `k` is kept independently with
/// probability `mean_at(k)`.
pub fn sample_set(
    schedule: &SelectorSchedule,
    range: (u64, u64),
    seed: u64,
) -> Result<RandomSetSample> {
    check_range(schedule, range)?;
    let mut u = KeyedUniform::new(seed, Stream::Selector);
    let mut elements = Vec::new();
    if range.0 <= range.1 {
        for k in range.0..=range.1 {
            let p = schedule.mean_unchecked(k);
            if p > 0.0 && u.at(k) < p {
                elements.push(k);
            }
        }
    }
    Ok(RandomSetSample {
        elements,
        seed,
        schedule: schedule.clone(),
        range,
        thinned_from: None,
    })
}

/// Keeps each element `k` with probability `δ′_k / δ_k`, so the result has
/// selector law of mean `δ′_k` and is always a subset of the input.
pub fn thin(
    sample: &RandomSetSample,
    target: &SelectorSchedule,
    seed: u64,
) -> Result<RandomSetSample> {
    check_range(target, sample.range)?;
    let source = &sample.schedule;
    if sample.range.0 <= sample.range.1 {
        for k in sample.range.0..=sample.range.1 {
            let (t, s) = (target.mean_unchecked(k), source.mean_unchecked(k));
            if t > s * (1.0 + 1e-12) {
                return Err(Error::ThinningTarget {
                    k,
                    target: t,
                    source_mean: s,
                });
            }
        }
    }
    let mut u = KeyedUniform::new(seed, Stream::Thinning);
    let elements = sample
        .elements
        .iter()
        .copied()
        .filter(|&k| {
            let (t, s) = (target.mean_unchecked(k), source.mean_unchecked(k));
            t >= s || u.at(k) < t / s
        })
        .collect();
    Ok(RandomSetSample {
        elements,
        seed,
        schedule: target.clone(),
        range: sample.range,
        thinned_from: Some(sample.seed),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    /// Term-by-term summation.
    Exact,
    /// Block-wise closed form (dyadic, constant, custom).
    ClosedForm,
    /// Composite Simpson rule in `x = log t` over `[a − ½, b + ½]`.
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub value: f64,
    pub method: CountMethod,
}

/// `Σ_{k=a}^{b} δ_k`, choosing the evaluation route automatically.
pub fn expected_count(schedule: &SelectorSchedule, interval: (u64, u64)) -> Result<CountEstimate> {
    expected_count_with(schedule, interval, None)
}

/// As [`expected_count`], optionally forcing summation or quadrature for the
/// rider schedule (other kinds always use their closed forms).
pub fn expected_count_with(
    schedule: &SelectorSchedule,
    (a, b): (u64, u64),
    force: Option<CountMethod>,
) -> Result<CountEstimate> {
    if a > b {
        return Ok(CountEstimate {
            value: 0.0,
            method: CountMethod::ClosedForm,
        });
    }
    if a < schedule.k_min {
        return Err(Error::Domain {
            k: a,
            k_min: schedule.k_min,
        });
    }
    let closed = |value| {
        Ok(CountEstimate {
            value,
            method: CountMethod::ClosedForm,
        })
    };
    match &schedule.kind {
        ScheduleKind::Constant { delta } => closed((b - a + 1) as f64 * delta),
        ScheduleKind::Custom { table } => closed(
            table
                .iter()
                .filter(|&&(k, _)| (a..=b).contains(&k))
                .map(|&(_, d)| d)
                .sum(),
        ),
        ScheduleKind::Dyadic { c } => {
            let mut total = 0.0;
            for n in block_index(a)..=block_index(b) {
                let start = (1u64 << n).max(a);
                let end = if n == 63 {
                    b
                } else {
                    ((1u64 << (n + 1)) - 1).min(b)
                };
                total += (end - start + 1) as f64 * dyadic_mean(*c, n);
            }
            closed(total)
        }
        ScheduleKind::Rider { c, alpha } => {
            let method = force.unwrap_or(if b - a <= EXACT_SUM_LIMIT {
                CountMethod::Exact
            } else {
                CountMethod::Quadrature
            });
            let value = match method {
                CountMethod::Quadrature => {
                    rider_integral(*c, *alpha, a as f64 - 0.5, b as f64 + 0.5)
                }
                _ => (a..=b).map(|k| rider_density(*c, *alpha, k as f64)).sum(),
            };
            Ok(CountEstimate {
                value,
                method: if method == CountMethod::Quadrature {
                    CountMethod::Quadrature
                } else {
                    CountMethod::Exact
                },
            })
        }
    }
}

/// `∫_lo^hi δ(t) dt` via Simpson's rule after substituting `t = eˣ`.
fn rider_integral(c: f64, alpha: f64, lo: f64, hi: f64) -> f64 {
    let (x0, x1) = (lo.ln(), hi.ln());
    let h = (x1 - x0) / SIMPSON_PANELS as f64;
    let g = |x: f64| {
        let t = x.exp();
        rider_density(c, alpha, t) * t
    };
    let mut acc = g(x0) + g(x1);
    for i in 1..SIMPSON_PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(x0 + i as f64 * h);
    }
    acc * h / 3.0
}

/// How the integers are cut into consecutive blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    /// Block `n` is `[2ⁿ, 2ⁿ⁺¹)`.
    DyadicBlocks,
    /// Block `n` is `[Mₙ, Mₙ₊₁)` with `Mₙ = round(n^{βn})`.
    PowerBlocks { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGeometry {
    #[serde(flatten)]
    pub kind: BlockKind,
    /// Inclusive block index range.
    pub n_range: (u32, u32),
}

/// `round(n^{βn})`, or `None` when it does not fit below 2⁶³.
pub fn power_block_start(n: u32, beta: f64) -> Option<u64> {
    if n == 0 {
        return Some(1);
    }
    let log = beta * f64::from(n) * f64::from(n).ln();
    if log >= 63.0 * std::f64::consts::LN_2 {
        return None;
    }
    Some(log.exp().round() as u64)
}

impl BlockGeometry {
    pub fn dyadic(n_range: (u32, u32)) -> Result<Self> {
        if n_range.1 >= 62 {
            return Err(Error::Config("dyadic blocks must end below 2^63".into()));
        }
        Ok(Self {
            kind: BlockKind::DyadicBlocks,
            n_range,
        })
    }

    pub fn power(beta: f64, n_range: (u32, u32)) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if n_range.0 == 0 {
            return Err(Error::Config("power blocks start at n = 1".into()));
        }
        if power_block_start(n_range.1 + 1, beta).is_none() {
            return Err(Error::Config(format!(
                "M_{} = {}^({beta}·{}) overflows 64 bits",
                n_range.1 + 1,
                n_range.1 + 1,
                n_range.1 + 1
            )));
        }
        Ok(Self {
            kind: BlockKind::PowerBlocks { beta },
            n_range,
        })
    }

    /// Half-open `[start, end)` of block `n`.
    pub fn block(&self, n: u32) -> (u64, u64) {
        match self.kind {
            BlockKind::DyadicBlocks => (1u64 << n, 1u64 << (n + 1)),
            BlockKind::PowerBlocks { beta } => (
                power_block_start(n, beta).expect("validated at construction"),
                power_block_start(n + 1, beta).expect("validated at construction"),
            ),
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (u32, (u64, u64))> + '_ {
        (self.n_range.0..=self.n_range.1).map(move |n| (n, self.block(n)))
    }
}

/// `|elements ∩ block n|` for every block of the geometry.
pub fn block_counts(
    sample: &RandomSetSample,
    geometry: &BlockGeometry,
) -> Result<Vec<(u32, usize)>> {
    let missing: Vec<u32> = geometry
        .blocks()
        .filter(|&(_, (s, e))| s < sample.range.0 || e - 1 > sample.range.1)
        .map(|(n, _)| n)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingBlocks(missing));
    }
    Ok(geometry
        .blocks()
        .map(|(n, (s, e))| (n, sample.slice(s, e - 1).len()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_block_sixteen() {
        let s = SelectorSchedule::dyadic(1.0).unwrap();
        assert_eq!(s.mean_at(16).unwrap(), 0.25);
        assert_eq!(s.mean_at(17).unwrap(), 0.25);
        assert_eq!(s.mean_at(31).unwrap(), 0.25);
        assert_eq!(s.mean_at(32).unwrap(), 5.0 / 32.0);
    }

    #[test]
    fn rider_value_matches_arbitrary_precision() {
        // mpmath, 50 digits: log(100)^2 / (100 * log(log(100))^3)
        let s = SelectorSchedule::rider(1.0, 2.0).unwrap();
        let v = s.mean_at(100).unwrap();
        assert!((v - 0.059_541_669_027_316_045).abs() < 1e-15, "{v}");
    }

    #[test]
    fn below_k_min_is_domain_error() {
        let s = SelectorSchedule::rider(1.0, 1.5).unwrap();
        assert!(matches!(
            s.mean_at(15),
            Err(Error::Domain { k: 15, k_min: 16 })
        ));
        assert!(s.clone().with_k_min(8).is_err());
        let c = SelectorSchedule::constant(0.5)
            .unwrap()
            .with_k_min(1)
            .unwrap();
        assert_eq!(c.mean_at(1).unwrap(), 0.5);
    }

    #[test]
    fn clamped_to_one() {
        let s = SelectorSchedule::dyadic(100.0).unwrap();
        assert_eq!(s.mean_at(16).unwrap(), 1.0);
        let r = SelectorSchedule::rider(1e6, 1.0).unwrap();
        assert_eq!(r.mean_at(20).unwrap(), 1.0);
    }

    #[test]
    fn certain_and_impossible_samples() {
        let one = SelectorSchedule::constant(1.0).unwrap();
        assert_eq!(
            sample_set(&one, (16, 20), 99).unwrap().elements,
            vec![16, 17, 18, 19, 20]
        );
        let zero = SelectorSchedule::constant(0.0).unwrap();
        assert!(sample_set(&zero, (16, 20), 99).unwrap().is_empty());
    }

    #[test]
    fn thinning_identity_and_empty() {
        let s = SelectorSchedule::dyadic(1.0).unwrap();
        let a = sample_set(&s, (16, 4095), 3).unwrap();
        assert_eq!(thin(&a, &s, 11).unwrap().elements, a.elements);
        let empty = RandomSetSample {
            elements: vec![],
            ..a.clone()
        };
        assert!(thin(&empty, &SelectorSchedule::dyadic(0.5).unwrap(), 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn thinning_upwards_names_k() {
        let s = SelectorSchedule::dyadic(0.5).unwrap();
        let a = sample_set(&s, (16, 63), 3).unwrap();
        let err = thin(&a, &SelectorSchedule::dyadic(1.0).unwrap(), 1).unwrap_err();
        assert!(matches!(err, Error::ThinningTarget { k: 16, .. }), "{err}");
    }

    #[test]
    fn expected_dyadic_block_is_n() {
        let s = SelectorSchedule::dyadic(1.0).unwrap();
        for n in 4..40u32 {
            let e = expected_count(&s, (1 << n, (1 << (n + 1)) - 1)).unwrap();
            assert!((e.value - f64::from(n)).abs() < 1e-9 * f64::from(n));
        }
        assert_eq!(expected_count(&s, (40, 30)).unwrap().value, 0.0);
    }

    #[test]
    fn block_counts_small() {
        let s = SelectorSchedule::constant(0.0).unwrap();
        let sample = RandomSetSample {
            elements: vec![16, 17, 32],
            seed: 0,
            schedule: s,
            range: (16, 63),
            thinned_from: None,
        };
        let g = BlockGeometry::dyadic((4, 5)).unwrap();
        assert_eq!(block_counts(&sample, &g).unwrap(), vec![(4, 2), (5, 1)]);
        let g = BlockGeometry::dyadic((4, 6)).unwrap();
        assert!(matches!(block_counts(&sample, &g), Err(Error::MissingBlocks(m)) if m == vec![6]));
    }

    #[test]
    fn power_blocks_guard_overflow() {
        assert_eq!(power_block_start(3, 1.5), Some(140));
        assert!(BlockGeometry::power(1.5, (3, 8)).is_ok());
        assert!(BlockGeometry::power(1.5, (3, 30)).is_err());
    }
}
