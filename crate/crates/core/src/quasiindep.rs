//! Relations `Σ θ_k k = 0` with `θ_k ∈ {−1, 0, +1}` and quasi-independent sets.
//!
//! A finite set of nonzero integers has a relation iff two distinct subsets
//! share a sum. Searches use that form when the range of subset sums is
//! small (a dense table indexed by sum), and meet-in-the-middle over signed
//! half-sums otherwise.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynorm::{psi_a, OrliczConfig};
use crate::rng::{derive_seed, trial_rng, Stream};
use crate::spectra::{sample_set, SelectorSchedule};

/// Largest set accepted by the public relation searches.
pub const MAX_RELATION_SET: usize = 40;
/// Largest set accepted by the exact maximum-subset search.
pub const MAX_EXACT_SET: usize = 20;
/// Largest subset-sum table used by the dense search.
const SUM_TABLE_LIMIT: u128 = 1 << 26;
/// Stored half of a meet-in-the-middle search, in entries.
const STORE_LIMIT: usize = 4_782_969; // 3^14
/// Streamed half of a meet-in-the-middle search, in entries.
const STREAM_LIMIT: u64 = 129_140_163; // 3^17
/// Largest quasi-independent set certified by enumerating its subset sums.
const CERTIFY_LIMIT: usize = 22;
/// Accepted-set size up to which greedy decisions are exact.
const GREEDY_EXACT_LIMIT: usize = 20;
/// Stage tags in the dense search are bytes.
const DENSE_SET_LIMIT: usize = 254;

/// A nontrivial relation `Σ θ_k k = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<i64, i8>", into = "BTreeMap<i64, i8>")]
pub struct Relation {
    terms: BTreeMap<i64, i8>,
}

impl Relation {
    /// Checks the signs and the vanishing sum with exact integer arithmetic.
    pub fn new(terms: BTreeMap<i64, i8>) -> Result<Self> {
        if terms.values().any(|&t| t != 1 && t != -1) {
            return Err(Error::Precondition("relation signs must be ±1".into()));
        }
        if terms.len() < 2 {
            return Err(Error::Precondition(
                "a relation has at least two terms".into(),
            ));
        }
        let sum: i128 = terms
            .iter()
            .map(|(&k, &t)| i128::from(k) * i128::from(t))
            .sum();
        if sum != 0 {
            return Err(Error::Numerical(format!("signed sum is {sum}, not 0")));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &BTreeMap<i64, i8> {
        &self.terms
    }

    /// Number of nonzero signs.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn sign(&self, k: i64) -> i8 {
        self.terms.get(&k).copied().unwrap_or(0)
    }

    fn from_masks(elems: &[i64], pos: u64, neg: u64) -> Self {
        let mut terms = BTreeMap::new();
        for (i, &k) in elems.iter().enumerate() {
            if pos >> i & 1 == 1 {
                terms.insert(k, 1);
            } else if neg >> i & 1 == 1 {
                terms.insert(k, -1);
            }
        }
        Self::new(terms).expect("search produced a vanishing signed sum")
    }
}

impl TryFrom<BTreeMap<i64, i8>> for Relation {
    type Error = Error;
    fn try_from(terms: BTreeMap<i64, i8>) -> Result<Self> {
        Self::new(terms)
    }
}

impl From<Relation> for BTreeMap<i64, i8> {
    fn from(r: Relation) -> Self {
        r.terms
    }
}

fn canonical(set: &[i64]) -> Result<Vec<i64>> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.contains(&0) {
        return Err(Error::Precondition(
            "0 cannot belong to a quasi-independent set".into(),
        ));
    }
    let total: i128 = v.iter().map(|&k| i128::from(k).abs()).sum();
    if total > i128::from(i64::MAX) {
        return Err(Error::Capacity {
            what: "signed sums beyond 64 bits",
            size: v.len(),
            limit: 0,
        });
    }
    Ok(v)
}

/// Some nontrivial relation among the elements of `set`, if one exists.
pub fn find_relation(set: &[i64]) -> Result<Option<Relation>> {
    let a = canonical(set)?;
    if a.len() > MAX_RELATION_SET {
        return Err(Error::Capacity {
            what: "relation search set size",
            size: a.len(),
            limit: MAX_RELATION_SET,
        });
    }
    relation_any(&a)
}

fn relation_any(a: &[i64]) -> Result<Option<Relation>> {
    if a.len() < 2 {
        return Ok(None);
    }
    let neg: i64 = a.iter().filter(|&&k| k < 0).sum();
    let pos: i64 = a.iter().filter(|&&k| k > 0).sum();
    let range = (i128::from(pos) - i128::from(neg) + 1) as u128;
    if range <= SUM_TABLE_LIMIT && a.len() <= DENSE_SET_LIMIT {
        return Ok(Some(dense_relation(a, neg, range as usize)).flatten());
    }
    mitm_relation(a)
}

/// First collision of subset sums, scanning elements in order.
///
/// `stage[s]` is the 1-based index of the element whose addition first made
/// the sum reachable (0 = unreachable; the empty sum is marked separately), so
/// a subset with sum `s` is recovered by walking back through stages.
fn dense_relation(a: &[i64], offset: i64, range: usize) -> Option<Relation> {
    const EMPTY: u8 = u8::MAX;
    let mut stage = vec![0u8; range];
    let idx = |s: i64| (s - offset) as usize;
    stage[idx(0)] = EMPTY;
    let reach = |stage: &[u8], s: i64| -> u64 {
        let mut mask = 0u64;
        let mut s = s;
        loop {
            let st = stage[idx(s)];
            if st == EMPTY {
                return mask;
            }
            let i = usize::from(st) - 1;
            mask |= 1 << i;
            s -= a[i];
        }
    };
    let mut lo = 0i64;
    let mut hi = 0i64;
    for (i, &x) in a.iter().enumerate() {
        let tag = (i + 1) as u8;
        let sums: Box<dyn Iterator<Item = i64>> = if x > 0 {
            Box::new((lo..=hi).rev())
        } else {
            Box::new(lo..=hi)
        };
        for s in sums {
            let st = stage[idx(s)];
            if st == 0 || st == tag {
                continue;
            }
            let t = s + x;
            let tt = stage[idx(t)];
            if tt == 0 {
                stage[idx(t)] = tag;
            } else if tt != tag {
                let y = reach(&stage, s) | 1 << i;
                let z = reach(&stage, t);
                let common = y & z;
                return Some(Relation::from_masks(a, z & !common, y & !common));
            }
        }
        lo = lo.min(lo + x);
        hi = hi.max(hi + x);
    }
    None
}

#[derive(Clone, Copy)]
struct Entry {
    sum: i64,
    pos: u32,
    neg: u32,
}

/// Signed sums over `elems` with at most `max_nonzero` nonzero signs, passed
/// to `visit` until it returns `true`. Returns whether `visit` stopped early.
fn enumerate_signed(
    elems: &[i64],
    max_nonzero: usize,
    visit: &mut dyn FnMut(Entry) -> bool,
) -> bool {
    fn rec(
        elems: &[i64],
        i: usize,
        left: usize,
        e: Entry,
        visit: &mut dyn FnMut(Entry) -> bool,
    ) -> bool {
        if i == elems.len() {
            return visit(e);
        }
        if rec(elems, i + 1, left, e, visit) {
            return true;
        }
        if left == 0 {
            return false;
        }
        let x = elems[i];
        let bit = 1u32 << i;
        rec(
            elems,
            i + 1,
            left - 1,
            Entry {
                sum: e.sum + x,
                pos: e.pos | bit,
                ..e
            },
            visit,
        ) || rec(
            elems,
            i + 1,
            left - 1,
            Entry {
                sum: e.sum - x,
                neg: e.neg | bit,
                ..e
            },
            visit,
        )
    }
    rec(
        elems,
        0,
        max_nonzero,
        Entry {
            sum: 0,
            pos: 0,
            neg: 0,
        },
        visit,
    )
}

/// Number of signed vectors on `h` coordinates with at most `m` nonzeros.
fn signed_count(h: usize, m: usize) -> u64 {
    let mut total = 0u64;
    let mut binom = 1u64;
    for j in 0..=m.min(h) {
        total = total.saturating_add(binom.saturating_mul(1 << j.min(63)));
        binom = binom.saturating_mul((h - j) as u64) / (j as u64 + 1);
    }
    total
}

fn mitm_relation(a: &[i64]) -> Result<Option<Relation>> {
    let n = a.len();
    let h1 = (n / 2).min(14);
    debug_assert!(3usize.pow(h1 as u32) <= STORE_LIMIT);
    let (left, right) = a.split_at(h1);
    let stream = 3u64.pow(right.len() as u32);
    if stream > STREAM_LIMIT {
        return Err(Error::Capacity {
            what: "meet-in-the-middle relation search",
            size: n,
            limit: 31,
        });
    }
    let mut table = Vec::with_capacity(3usize.pow(h1 as u32));
    let mut inner = None;
    enumerate_signed(left, h1, &mut |e| {
        if e.sum == 0 && e.pos | e.neg != 0 {
            inner = Some(e);
            return true;
        }
        table.push(e);
        false
    });
    if let Some(e) = inner {
        return Ok(Some(Relation::from_masks(
            left,
            u64::from(e.pos),
            u64::from(e.neg),
        )));
    }
    table.sort_unstable_by_key(|e| e.sum);
    let mut found = None;
    enumerate_signed(right, right.len(), &mut |e| {
        // Relations are sign-symmetric: only right halves whose first
        // nonzero sign is +1 need to be tried.
        let nz = e.pos | e.neg;
        if nz == 0 || e.pos & nz.wrapping_neg() == 0 {
            return false;
        }
        let i = table.partition_point(|t| t.sum < -e.sum);
        if i < table.len() && table[i].sum == -e.sum {
            found = Some((table[i], e));
            return true;
        }
        false
    });
    Ok(found.map(|(l, r)| {
        let shift = h1 as u32;
        Relation::from_masks(
            a,
            u64::from(l.pos) | u64::from(r.pos) << shift,
            u64::from(l.neg) | u64::from(r.neg) << shift,
        )
    }))
}

/// A relation with exactly `n` nonzero signs, if one exists.
pub fn find_relation_of_length(set: &[i64], n: usize) -> Result<Option<Relation>> {
    let a = canonical(set)?;
    if a.len() > MAX_RELATION_SET {
        return Err(Error::Capacity {
            what: "relation search set size",
            size: a.len(),
            limit: MAX_RELATION_SET,
        });
    }
    if n < 2 || n > a.len() {
        return Err(Error::Precondition(format!(
            "relation length {n} outside [2, {}]",
            a.len()
        )));
    }
    relation_of_length(&a, n)
}

/// Entry limit per half for the length-restricted search.
const LENGTH_TABLE_LIMIT: usize = 1 << 24;

fn relation_of_length(a: &[i64], n: usize) -> Result<Option<Relation>> {
    if n > a.len() {
        return Ok(None);
    }
    if a.len() > 64 {
        return Err(Error::Capacity {
            what: "length-restricted relation search set size",
            size: a.len(),
            limit: 64,
        });
    }
    let h1 = a.len() / 2;
    let (left, right) = a.split_at(h1);
    if left.len() > 32 || right.len() > 32 {
        return Err(Error::Capacity {
            what: "length-restricted relation search set size",
            size: a.len(),
            limit: 64,
        });
    }
    let stored = signed_count(left.len(), n);
    let streamed = signed_count(right.len(), n);
    if stored > LENGTH_TABLE_LIMIT as u64 || streamed > STREAM_LIMIT {
        return Err(Error::Capacity {
            what: "length-restricted relation search entries",
            size: stored.max(streamed) as usize,
            limit: LENGTH_TABLE_LIMIT,
        });
    }
    // Tables by number of nonzero signs, each sorted by sum.
    let mut tables: Vec<Vec<Entry>> = vec![Vec::new(); n + 1];
    enumerate_signed(left, n, &mut |e| {
        tables[(e.pos | e.neg).count_ones() as usize].push(e);
        false
    });
    if let Some(e) = tables[n].iter().find(|e| e.sum == 0) {
        return Ok(Some(Relation::from_masks(
            left,
            u64::from(e.pos),
            u64::from(e.neg),
        )));
    }
    for t in tables.iter_mut() {
        t.sort_unstable_by_key(|e| e.sum);
    }
    let mut found = None;
    enumerate_signed(right, n, &mut |e| {
        let nz = e.pos | e.neg;
        let c = nz.count_ones() as usize;
        if c == 0 || e.pos & nz.wrapping_neg() == 0 {
            return false;
        }
        let t = &tables[n - c];
        let i = t.partition_point(|x| x.sum < -e.sum);
        if i < t.len() && t[i].sum == -e.sum {
            found = Some((t[i], e));
            return true;
        }
        false
    });
    Ok(found.map(|(l, r)| {
        let shift = h1 as u32;
        Relation::from_masks(
            a,
            u64::from(l.pos) | u64::from(r.pos) << shift,
            u64::from(l.neg) | u64::from(r.neg) << shift,
        )
    }))
}

/// Sorted subset sums of a quasi-independent set, extended one element at a
/// time. Extension fails exactly when the new element creates a relation.
#[derive(Clone, Debug)]
struct SubsetSums {
    sums: Vec<i64>,
}

impl SubsetSums {
    fn new() -> Self {
        Self { sums: vec![0] }
    }

    /// Sums of `S ∪ {x}`, or `None` if two subsets would share a sum.
    fn extend(&self, x: i64) -> Option<Self> {
        let a = &self.sums;
        let mut out = Vec::with_capacity(2 * a.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < a.len() {
            let take_left = j == a.len() || (i < a.len() && a[i] < a[j] + x);
            let v = if take_left {
                i += 1;
                a[i - 1]
            } else {
                j += 1;
                a[j - 1] + x
            };
            if out.last() == Some(&v) {
                return None;
            }
            out.push(v);
        }
        Some(Self { sums: out })
    }
}

/// A relation in `set`, or `None` once the set is certified quasi-independent.
fn verify_qi(set: &[i64]) -> Result<Option<Relation>> {
    if set.len() <= CERTIFY_LIMIT {
        let mut s = SubsetSums::new();
        let clean = set.iter().all(|&x| match s.extend(x) {
            Some(t) => {
                s = t;
                true
            }
            None => false,
        });
        if clean {
            return Ok(None);
        }
    }
    relation_any(set)
}

/// A maximum-cardinality quasi-independent subset; among those of maximum
/// size, the lexicographically smallest sorted one.
pub fn max_qi_subset_exact(set: &[i64]) -> Result<Vec<i64>> {
    let a = canonical(set)?;
    if a.len() > MAX_EXACT_SET {
        return Err(Error::Capacity {
            what: "exact maximum quasi-independent subset",
            size: a.len(),
            limit: MAX_EXACT_SET,
        });
    }
    struct Search<'a> {
        a: &'a [i64],
        best: Vec<i64>,
        current: Vec<i64>,
    }
    impl Search<'_> {
        // Include-first depth-first search visits same-size subsets in
        // lexicographic order, so only strict improvements replace `best`.
        fn go(&mut self, i: usize, sums: &SubsetSums) {
            if self.current.len() > self.best.len() {
                self.best = self.current.clone();
            }
            if i == self.a.len() || self.current.len() + (self.a.len() - i) <= self.best.len() {
                return;
            }
            if let Some(next) = sums.extend(self.a[i]) {
                self.current.push(self.a[i]);
                self.go(i + 1, &next);
                self.current.pop();
            }
            self.go(i + 1, sums);
        }
    }
    let mut s = Search {
        a: &a,
        best: Vec::new(),
        current: Vec::new(),
    };
    s.go(0, &SubsetSums::new());
    Ok(s.best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Reporting threshold `δ` in `|E| ≥ δ(|A|/Ψ_A)²`.
    pub delta_cfg: f64,
    pub orlicz: OrliczConfig,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            delta_cfg: 0.05,
            orlicz: OrliczConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub input_size: usize,
    pub output_size: usize,
    /// `None` when `A` is empty or too spread out for the quadrature grid.
    pub psi_a: Option<f64>,
    /// `δ_cfg·(|A|/Ψ_A)²`.
    pub bound_37: Option<f64>,
    pub ratio: f64,
    pub verified_qi: bool,
    /// Some acceptance decisions used the windowed relation search.
    pub heuristic: bool,
    /// Elements removed after the final check (relations found or capacity).
    pub dropped: usize,
}

impl ExtractionReport {
    pub fn meets_bound(&self) -> Option<bool> {
        self.bound_37.map(|b| self.output_size as f64 >= b)
    }
}

pub fn extract_greedy(set: &[i64]) -> Result<(Vec<i64>, ExtractionReport)> {
    extract_greedy_with(set, &ExtractOptions::default())
}

/// Greedy quasi-independent subset, scanning in increasing order.
///
/// While the accepted set is small its subset sums are kept and each
/// candidate is decided exactly. Beyond that, candidates are checked against
/// the 39 largest accepted elements only, and the output is re-certified at
/// the end; relations found then are broken by dropping their largest
/// element, and an output too large to certify is truncated.
pub fn extract_greedy_with(
    set: &[i64],
    opts: &ExtractOptions,
) -> Result<(Vec<i64>, ExtractionReport)> {
    let a = canonical(set)?;
    let mut accepted: Vec<i64> = Vec::new();
    let mut sums = Some(SubsetSums::new());
    let mut heuristic = false;
    for &x in &a {
        if accepted.len() >= GREEDY_EXACT_LIMIT {
            sums = None;
        }
        match &sums {
            Some(s) => {
                if let Some(next) = s.extend(x) {
                    sums = Some(next);
                    accepted.push(x);
                }
            }
            None => {
                heuristic = true;
                let start = accepted.len().saturating_sub(MAX_RELATION_SET - 1);
                let mut window: Vec<i64> = accepted[start..].to_vec();
                window.push(x);
                match relation_any(&window) {
                    Ok(None) => accepted.push(x),
                    Ok(Some(_)) | Err(Error::Capacity { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let mut dropped = 0;
    loop {
        match verify_qi(&accepted) {
            Ok(None) => break,
            Ok(Some(rel)) => {
                let worst = *rel.terms().keys().max_by_key(|k| k.abs()).unwrap();
                accepted.retain(|&k| k != worst);
            }
            Err(Error::Capacity { .. }) => {
                accepted.pop();
            }
            Err(e) => return Err(e),
        }
        dropped += 1;
    }
    let psi = if a.is_empty() {
        None
    } else {
        match psi_a(&a, &opts.orlicz) {
            Ok(p) => Some(p.value),
            Err(Error::Capacity { .. }) => None,
            Err(e) => return Err(e),
        }
    };
    let bound = psi.map(|p| opts.delta_cfg * (a.len() as f64 / p).powi(2));
    let report = ExtractionReport {
        input_size: a.len(),
        output_size: accepted.len(),
        psi_a: psi,
        bound_37: bound,
        ratio: if a.is_empty() {
            0.0
        } else {
            accepted.len() as f64 / a.len() as f64
        },
        verified_qi: true,
        heuristic,
        dropped,
    };
    Ok((accepted, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtPropertyReport {
    /// `min |B|/√|A|` over samples: the empirical `δ`.
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub samples: usize,
    /// `(|A|, |B|)` per sample.
    pub sizes: Vec<(usize, usize)>,
}

/// Samples random finite `A ⊆ E` (mixing blocks) and measures the largest
/// quasi-independent `B ⊆ A` against `√|A|`.
pub fn sqrt_property_check(
    blocks: &[Vec<i64>],
    sample_count: usize,
    max_subset_size: usize,
    seed: u64,
) -> Result<SqrtPropertyReport> {
    if max_subset_size > MAX_EXACT_SET {
        return Err(Error::Capacity {
            what: "square-root property subset size",
            size: max_subset_size,
            limit: MAX_EXACT_SET,
        });
    }
    let mut union: Vec<i64> = blocks.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    if union.is_empty() || max_subset_size == 0 {
        return Err(Error::Precondition("nothing to sample from".into()));
    }
    let top = max_subset_size.min(union.len());
    let mut sizes = Vec::with_capacity(sample_count);
    for i in 0..sample_count {
        let mut rng = trial_rng(seed, Stream::Trial, i as u64);
        let m = rng.random_range(1..=top);
        let sub: Vec<i64> = sample_indices(&mut rng, union.len(), m)
            .into_iter()
            .map(|j| union[j])
            .collect();
        let b = max_qi_subset_exact(&sub)?;
        sizes.push((m, b.len()));
    }
    let ratios: Vec<f64> = sizes
        .iter()
        .map(|&(a, b)| b as f64 / (a as f64).sqrt())
        .collect();
    Ok(SqrtPropertyReport {
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len().max(1) as f64,
        samples: sample_count,
        sizes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationProbabilityReport {
    pub length: usize,
    pub cutoff: u64,
    pub truncation: u64,
    pub trials: usize,
    pub hits: usize,
    pub discarded: usize,
    /// Hits over non-discarded trials.
    pub empirical: f64,
    pub stderr: f64,
    /// `Σ_{j=M+1}^{K} δ_j² σ_j^{n−2}`.
    pub bound_sum: f64,
    /// `(C, Cⁿ/nⁿ·bound_sum, bound ≥ empirical)` per grid value.
    pub by_c: Vec<(f64, f64, bool)>,
    /// Smallest `C` with `Cⁿ/nⁿ·bound_sum ≥ empirical`.
    pub smallest_c: f64,
    pub mean_set_size: f64,
}

/// Monte Carlo estimate of `P(Λ ∩ ]M, K] contains a relation of length n)`
/// against `Cⁿ/nⁿ Σ_{j=M+1}^{K} δ_j² σ_j^{n−2}`, with `σ_j = Σ_{k_min ≤ i ≤ j} δ_i`.
///
/// Sampled sets are not capped at 40 elements; trials whose length-restricted
/// search exceeds its entry capacity are discarded and counted.
pub fn relation_probability_experiment(
    schedule: &SelectorSchedule,
    n: usize,
    cutoff: u64,
    truncation: u64,
    trials: usize,
    seed: u64,
    c_grid: &[f64],
) -> Result<RelationProbabilityReport> {
    if !(2..=6).contains(&n) {
        return Err(Error::Precondition(format!(
            "relation length {n} outside [2, 6]"
        )));
    }
    let lo = (cutoff + 1).max(schedule.k_min);
    let mut sigma = 0.0;
    let mut bound_sum = 0.0;
    for j in schedule.k_min..=truncation {
        let d = schedule.mean_at(j)?;
        sigma += d;
        if j > cutoff {
            bound_sum += d * d * sigma.powi(n as i32 - 2);
        }
    }
    let mut hits = 0;
    let mut discarded = 0;
    let mut total_size = 0usize;
    for i in 0..trials {
        let sample = sample_set(
            schedule,
            (lo, truncation),
            derive_seed(seed, Stream::Trial, i as u64),
        )?;
        let elems: Vec<i64> = sample.elements.iter().map(|&k| k as i64).collect();
        total_size += elems.len();
        match relation_of_length(&elems, n) {
            Ok(Some(_)) => hits += 1,
            Ok(None) => {}
            Err(Error::Capacity { .. }) => discarded += 1,
            Err(e) => return Err(e),
        }
    }
    let kept = trials - discarded;
    let p = if kept == 0 {
        0.0
    } else {
        hits as f64 / kept as f64
    };
    let nf = n as f64;
    let smallest_c = if p == 0.0 {
        0.0
    } else if bound_sum == 0.0 {
        f64::INFINITY
    } else {
        nf * (p / bound_sum).powf(1.0 / nf)
    };
    let by_c = c_grid
        .iter()
        .map(|&c| {
            let b = (c / nf).powf(nf) * bound_sum;
            (c, b, b >= p)
        })
        .collect();
    Ok(RelationProbabilityReport {
        length: n,
        cutoff,
        truncation,
        trials,
        hits,
        discarded,
        empirical: p,
        stderr: if kept == 0 {
            0.0
        } else {
            (p * (1.0 - p) / kept as f64).sqrt()
        },
        bound_sum,
        by_c,
        smallest_c,
        mean_set_size: total_size as f64 / trials.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(pairs: &[(i64, i8)]) -> Relation {
        Relation::new(pairs.iter().copied().collect()).unwrap()
    }

    fn same_up_to_sign(r: &Relation, want: &Relation) -> bool {
        r == want || r.terms().iter().all(|(k, &t)| want.sign(*k) == -t) && r.len() == want.len()
    }

    #[test]
    fn small_relations() {
        let r = find_relation(&[1, 2, 3]).unwrap().unwrap();
        assert!(same_up_to_sign(&r, &rel(&[(1, 1), (2, 1), (3, -1)])));
        assert!(find_relation(&[1, 2, 4, 8, 16]).unwrap().is_none());
        let r = find_relation(&[3, 5, 8]).unwrap().unwrap();
        assert!(same_up_to_sign(&r, &rel(&[(3, 1), (5, 1), (8, -1)])));
    }

    #[test]
    fn mitm_path_on_large_values() {
        let big = 1i64 << 40;
        let a = [3 * big, 5 * big, 8 * big, 1, 17];
        let r = mitm_relation(&canonical(&a).unwrap()).unwrap().unwrap();
        assert_eq!(r.len(), 3);
        let lac: Vec<i64> = (0..24).map(|i| 1i64 << (i + 30)).collect();
        assert!(mitm_relation(&lac).unwrap().is_none());
        let too_many: Vec<i64> = (0..33).map(|i| 1i64 << (i + 25)).collect();
        assert!(matches!(
            find_relation(&too_many),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn lengths() {
        assert_eq!(
            find_relation_of_length(&[1, 2, 3], 3)
                .unwrap()
                .unwrap()
                .len(),
            3
        );
        assert!(find_relation_of_length(&[1, 2, 3], 2).unwrap().is_none());
        assert!(find_relation_of_length(&[5, 9, 13, 40], 2)
            .unwrap()
            .is_none());
        assert_eq!(
            find_relation_of_length(&[1, 2, 3, 4], 4)
                .unwrap()
                .unwrap()
                .len(),
            4
        );
        assert!(find_relation_of_length(&[1, 2, 4, 8], 3).unwrap().is_none());
    }

    #[test]
    fn json_is_element_to_sign() {
        let r = rel(&[(1, 1), (2, 1), (3, -1)]);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"1":1,"2":1,"3":-1}"#);
        let back: Relation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Relation>(r#"{"1":1,"2":1}"#).is_err());
    }

    #[test]
    fn exact_maximum() {
        assert_eq!(max_qi_subset_exact(&[1, 2, 3]).unwrap(), vec![1, 2]);
        assert_eq!(
            max_qi_subset_exact(&[1, 2, 4, 8]).unwrap(),
            vec![1, 2, 4, 8]
        );
        assert!(max_qi_subset_exact(&(1..=21).collect::<Vec<_>>()).is_err());
    }

    #[test]
    fn greedy_examples() {
        let (e, r) = extract_greedy(&[1, 2, 3]).unwrap();
        assert_eq!(e, vec![1, 2]);
        assert!(r.verified_qi);
        let pow: Vec<i64> = (0..12).map(|i| 1 << i).collect();
        assert_eq!(extract_greedy(&pow).unwrap().0, pow);
    }

    #[test]
    fn greedy_on_large_inputs_stays_certified() {
        let a: Vec<i64> = (1..=300).map(|i| i * i * i + 7 * i).collect();
        let (e, r) = extract_greedy(&a).unwrap();
        assert!(verify_qi(&e).unwrap().is_none());
        assert_eq!(r.output_size, e.len());
    }

    #[test]
    fn sqrt_property_trivial_cases() {
        let r = sqrt_property_check(&[vec![1, 2, 4, 8, 16]], 20, 5, 1).unwrap();
        assert!(r.min_ratio >= 1.0);
        let r = sqrt_property_check(&[vec![7]], 3, 1, 1).unwrap();
        assert_eq!(r.min_ratio, 1.0);
    }

    #[test]
    fn relation_experiment_degenerate() {
        let zero = SelectorSchedule::constant(0.0).unwrap();
        let r = relation_probability_experiment(&zero, 3, 64, 256, 50, 1, &[1.0]).unwrap();
        assert_eq!(r.empirical, 0.0);
        assert_eq!(r.bound_sum, 0.0);
        let d = SelectorSchedule::dyadic(1.0).unwrap();
        let r = relation_probability_experiment(&d, 2, 64, 512, 50, 1, &[1.0]).unwrap();
        assert_eq!(r.hits, 0);
    }
}
