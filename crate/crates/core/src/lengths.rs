//! Length sequences `n ↦ ℓ_n` and the asymptotic diagnostics attached to them:
//! δ = liminf nℓ_n / ln n, D(L) = limsup Σ_{s≤N} ℓ_s / ln N, the block
//! transform L′, block schedules, and the two covering series.
//!
//! liminf and limsup are replaced by min and max over log-spaced samples of a
//! finite range; every estimate carries the range it was computed on.
//!
//! Schedule indices grow doubly exponentially, so they are carried as
//! [`Index`] values: exact integers up to 2^53, natural logarithms beyond.
//! Closed-form rules are evaluated in log space at such indices.

use std::cmp::Ordering;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every rule clamps its lengths to this value so that `ℓ_n < 1`.
pub const MAX_LENGTH: f64 = 1.0 - 1e-9;

/// Largest index kept as an exact integer.
pub const MAX_EXACT_INDEX: u64 = 1 << 53;

/// Largest `ln n` a schedule search may reach.
pub const MAX_LN_INDEX: f64 = 1e300;

/// Term-by-term sums are refused beyond this many terms.
pub const MAX_SUM_TERMS: u64 = 2_000_000_000;

/// Samples per decade used by the range estimators.
const SAMPLES_PER_DECADE: usize = 32;

fn ln_max_exact() -> f64 {
    (MAX_EXACT_INDEX as f64).ln()
}

/// A positive integer index, exact when small and logarithmic when huge.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Index {
    #[serde(rename = "n", skip_serializing_if = "Option::is_none", default)]
    exact: Option<u64>,
    #[serde(rename = "ln_n")]
    ln: f64,
}

impl Index {
    /// # Panics
    /// If `n` is zero.
    pub fn exact(n: u64) -> Self {
        assert!(n >= 1, "indices start at 1");
        Index {
            exact: Some(n),
            ln: (n as f64).ln(),
        }
    }

    /// The smallest index `≥ e^ln`; exact whenever it fits below 2^53.
    pub fn from_ln(ln: f64) -> Self {
        if ln <= ln_max_exact() {
            let x = ln.exp();
            let r = x.round();
            let n = if (x - r).abs() <= 1e-9 * x { r } else { x.ceil() };
            Index::exact(n.max(1.0) as u64)
        } else {
            Index { exact: None, ln }
        }
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn as_u64(&self) -> Option<u64> {
        self.exact
    }
}

impl PartialEq for Index {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Index {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => Some(a.cmp(&b)),
            _ => self.ln.partial_cmp(&other.ln),
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "exp({})", self.ln),
        }
    }
}

/// Strictly increasing block ends `n_1 < n_2 < …` with `n_1 ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    ends: Vec<Index>,
}

impl Schedule {
    pub fn new(ends: Vec<Index>) -> Result<Self> {
        if ends.is_empty() {
            return Err(Error::invalid("schedule", "no block ends"));
        }
        if ends[0] < Index::exact(2) {
            return Err(Error::invalid("schedule", "n_1 must be at least 2"));
        }
        if ends.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("schedule", "block ends must be strictly increasing"));
        }
        Ok(Schedule { ends })
    }

    pub fn from_u64(ends: &[u64]) -> Result<Self> {
        if ends.contains(&0) {
            return Err(Error::invalid("schedule", "indices start at 1"));
        }
        Self::new(ends.iter().map(|&n| Index::exact(n)).collect())
    }

    pub fn ends(&self) -> &[Index] {
        &self.ends
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    /// Position of the block `(n_{k-1}, n_k]` holding `idx` (`n_0 = 0`).
    fn block_of(&self, idx: &Index) -> Option<usize> {
        let k = self.ends.partition_point(|e| e < idx);
        (k < self.ends.len()).then_some(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// `ℓ_n = c·ln n / n`, with `ℓ_1 = ℓ_2 = ℓ_3` to keep the sequence positive and non-increasing.
    LogOverN { c: f64 },
    /// `ℓ_n = c / n`.
    Harmonic { c: f64 },
    /// `ℓ_n = c·n^{-γ}`.
    Power { c: f64, gamma: f64 },
    /// Explicit values `ℓ_1, ℓ_2, …`.
    Table { values: Vec<f64> },
    /// `ℓ′_s = ℓ_{n_k}` for `n_{k-1} < s ≤ n_k`.
    Block {
        base: Box<LengthSequence>,
        schedule: Schedule,
    },
}

/// A validated length rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSequence {
    rule: Rule,
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(field, format!("{v} must be positive and finite")))
    }
}

impl LengthSequence {
    pub fn log_over_n(c: f64) -> Result<Self> {
        Ok(LengthSequence {
            rule: Rule::LogOverN { c: positive("c", c)? },
        })
    }

    pub fn harmonic(c: f64) -> Result<Self> {
        Ok(LengthSequence {
            rule: Rule::Harmonic { c: positive("c", c)? },
        })
    }

    pub fn power(c: f64, gamma: f64) -> Result<Self> {
        Ok(LengthSequence {
            rule: Rule::Power {
                c: positive("c", c)?,
                gamma: positive("gamma", gamma)?,
            },
        })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("table", "no values"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid("table", format!("ell_{} = {v} not in (0, 1)", i + 1)));
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::invalid(
                "table",
                format!("not non-increasing at n = {}", i + 2),
            ));
        }
        Ok(LengthSequence {
            rule: Rule::Table { values },
        })
    }

    /// The block sequence `L′` of `self` over `schedule`.
    pub fn block(&self, schedule: Schedule) -> Self {
        LengthSequence {
            rule: Rule::Block {
                base: Box::new(self.clone()),
                schedule,
            },
        }
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// The constant `c` of closed-form rules.
    pub fn scale(&self) -> Option<f64> {
        match self.rule {
            Rule::LogOverN { c } | Rule::Harmonic { c } | Rule::Power { c, .. } => Some(c),
            _ => None,
        }
    }

    /// Largest index this rule can evaluate exactly.
    pub fn max_index(&self) -> u64 {
        match &self.rule {
            Rule::Table { values } => values.len() as u64,
            Rule::Block { schedule, .. } => schedule
                .ends
                .last()
                .and_then(Index::as_u64)
                .unwrap_or(MAX_EXACT_INDEX)
                .min(MAX_EXACT_INDEX),
            _ => MAX_EXACT_INDEX,
        }
    }

    /// `ℓ_n`.
    pub fn eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("n", "indices start at 1"));
        }
        if n > MAX_EXACT_INDEX {
            return Err(Error::OutOfRange(format!(
                "n = {n} exceeds exact range 2^53; use log-space evaluation"
            )));
        }
        let v = match &self.rule {
            Rule::LogOverN { c } => {
                let m = n.max(3) as f64;
                c * m.ln() / m
            }
            Rule::Harmonic { c } => c / n as f64,
            Rule::Power { c, gamma } => c * (n as f64).powf(-gamma),
            Rule::Table { values } => *values.get(n as usize - 1).ok_or_else(|| {
                Error::OutOfRange(format!("n = {n} beyond table of {} values", values.len()))
            })?,
            Rule::Block { base, schedule } => {
                let end = block_end(schedule, &Index::exact(n))?;
                return match end.as_u64() {
                    Some(m) => base.eval(m),
                    None => {
                        let ell = base.ln_eval(end)?.exp();
                        if ell > 0.0 {
                            Ok(ell)
                        } else {
                            Err(Error::OutOfRange(format!(
                                "ell at block end {end} underflows f64"
                            )))
                        }
                    }
                };
            }
        };
        Ok(v.min(MAX_LENGTH))
    }

    /// `ln ℓ_n` at a possibly huge index.
    pub fn ln_eval(&self, idx: Index) -> Result<f64> {
        if let Some(n) = idx.exact {
            if !matches!(self.rule, Rule::Block { .. }) {
                return Ok(self.eval(n)?.ln());
            }
        }
        let big = idx.ln;
        let v = match &self.rule {
            Rule::LogOverN { c } => c.ln() + big.ln() - big,
            Rule::Harmonic { c } => c.ln() - big,
            Rule::Power { c, gamma } => c.ln() - gamma * big,
            Rule::Table { values } => {
                return Err(Error::OutOfRange(format!(
                    "index {idx} beyond table of {} values",
                    values.len()
                )))
            }
            Rule::Block { base, schedule } => {
                let end = block_end(schedule, &idx)?;
                return base.ln_eval(end);
            }
        };
        Ok(v.min(MAX_LENGTH.ln()))
    }

    /// `Σ_{s ≤ idx} ℓ_s`, every term accounted for: blockwise closed form for
    /// block sequences, compensated term-by-term summation otherwise.
    pub fn partial_sum(&self, idx: Index) -> Result<f64> {
        if let Rule::Block { base, schedule } = &self.rule {
            let mut total = 0.0;
            let mut prev: Option<Index> = None;
            for &end in &schedule.ends {
                let upto = if idx < end { idx } else { end };
                total += block_mass(base, prev, upto, end)?;
                if !(end < idx) {
                    return Ok(total);
                }
                prev = Some(end);
            }
            return Err(Error::OutOfRange(format!(
                "index {idx} beyond last block end {}",
                schedule.ends[schedule.ends.len() - 1]
            )));
        }
        let n = idx
            .exact
            .filter(|&n| n <= MAX_SUM_TERMS)
            .ok_or_else(|| Error::OutOfRange(format!("partial sum to {idx}: too many terms")))?;
        let mut sum = Neumaier::default();
        for s in 1..=n {
            sum.add(self.eval(s)?);
        }
        Ok(sum.value())
    }

    /// Analytic value of δ for closed-form rules; a range estimate for tables.
    pub fn delta_hint(&self) -> Option<f64> {
        match &self.rule {
            Rule::LogOverN { c } => Some(*c),
            Rule::Harmonic { .. } => Some(0.0),
            Rule::Power { gamma, .. } => Some(if *gamma >= 1.0 { 0.0 } else { f64::INFINITY }),
            Rule::Table { values } if values.len() >= 3 => {
                estimate_delta(self, (2, values.len() as u64)).ok().map(|e| e.value)
            }
            _ => None,
        }
    }

    /// Rule-string form, e.g. `logn:2.5`.
    pub fn describe(&self) -> String {
        match &self.rule {
            Rule::LogOverN { c } => format!("logn:{c}"),
            Rule::Harmonic { c } => format!("harmonic:{c}"),
            Rule::Power { c, gamma } => format!("power:{c}:{gamma}"),
            Rule::Table { values } => format!("table[{}]", values.len()),
            Rule::Block { base, schedule } => {
                format!("block[{}; {} blocks]", base.describe(), schedule.len())
            }
        }
    }
}

fn block_end(schedule: &Schedule, idx: &Index) -> Result<Index> {
    schedule
        .block_of(idx)
        .map(|k| schedule.ends[k])
        .ok_or_else(|| {
            Error::OutOfRange(format!(
                "index {idx} beyond last block end {}",
                schedule.ends[schedule.ends.len() - 1]
            ))
        })
}

/// `(upto − prev)·ℓ_end`, with `prev = None` meaning 0.
fn block_mass(base: &LengthSequence, prev: Option<Index>, upto: Index, end: Index) -> Result<f64> {
    let prev_exact = prev.map(|p| p.exact);
    if let (Some(u), Some(e)) = (upto.exact, end.exact) {
        if let Some(p) = prev_exact.unwrap_or(Some(0)) {
            return Ok((u - p) as f64 * base.eval(e)?);
        }
    }
    let frac = match prev {
        None => 1.0,
        Some(p) => -(p.ln - upto.ln).exp_m1(),
    };
    Ok((upto.ln + base.ln_eval(end)?).exp() * frac)
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Log-spaced integers in `[lo, hi]`, both ends included.
pub fn log_spaced(lo: u64, hi: u64, per_decade: usize) -> Vec<u64> {
    assert!(1 <= lo && lo <= hi);
    if lo == hi {
        return vec![lo];
    }
    let span = (hi as f64 / lo as f64).log10();
    let m = ((span * per_decade as f64).ceil() as usize).max(1);
    let mut out: Vec<u64> = (0..=m)
        .map(|i| {
            let x = (lo as f64) * (hi as f64 / lo as f64).powf(i as f64 / m as f64);
            (x.round() as u64).clamp(lo, hi)
        })
        .collect();
    out[0] = lo;
    out[m] = hi;
    out.dedup();
    out
}

/// A finite-range proxy for an asymptotic quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    pub value: f64,
    /// Sample at which the extremum was attained.
    pub at: u64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub samples: usize,
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if !(2 <= lo && lo < hi) {
        return Err(Error::invalid("n_range", format!("need 2 <= n_lo < n_hi, got ({lo}, {hi})")));
    }
    Ok(())
}

/// δ proxy: min of `nℓ_n / ln n` over log-spaced `n` in the range.
pub fn estimate_delta(lengths: &LengthSequence, (lo, hi): (u64, u64)) -> Result<RangeEstimate> {
    check_range(lo, hi)?;
    let samples = log_spaced(lo, hi, SAMPLES_PER_DECADE);
    let mut best = RangeEstimate {
        value: f64::INFINITY,
        at: lo,
        n_lo: lo,
        n_hi: hi,
        samples: samples.len(),
    };
    for &n in &samples {
        let v = n as f64 * lengths.eval(n)? / (n as f64).ln();
        if v < best.value {
            best.value = v;
            best.at = n;
        }
    }
    Ok(best)
}

/// `Σ_{s≤N} ℓ_s / ln N`.
pub fn d_ratio_at(lengths: &LengthSequence, idx: Index) -> Result<f64> {
    if idx < Index::exact(2) {
        return Err(Error::invalid("N", "ratio needs N >= 2"));
    }
    Ok(lengths.partial_sum(idx)? / idx.ln())
}

/// D(L) proxy: max of `Σ_{s≤N} ℓ_s / ln N` over log-spaced `N` in the range,
/// partial sums accumulated over every term.
pub fn estimate_d(lengths: &LengthSequence, (lo, hi): (u64, u64)) -> Result<RangeEstimate> {
    check_range(lo, hi)?;
    let samples = log_spaced(lo, hi, SAMPLES_PER_DECADE);
    let mut best = RangeEstimate {
        value: f64::NEG_INFINITY,
        at: lo,
        n_lo: lo,
        n_hi: hi,
        samples: samples.len(),
    };
    let mut consider = |n: u64, sum: f64| {
        let v = sum / (n as f64).ln();
        if v > best.value {
            best.value = v;
            best.at = n;
        }
    };
    if matches!(lengths.rule, Rule::Block { .. }) {
        for &n in &samples {
            consider(n, lengths.partial_sum(Index::exact(n))?);
        }
    } else {
        if hi > MAX_SUM_TERMS {
            return Err(Error::OutOfRange(format!("n_hi = {hi} exceeds {MAX_SUM_TERMS} terms")));
        }
        let mut sum = Neumaier::default();
        let mut next = samples.iter().peekable();
        for s in 1..=hi {
            sum.add(lengths.eval(s)?);
            if next.peek() == Some(&&s) {
                consider(s, sum.value());
                next.next();
            }
        }
    }
    Ok(best)
}

/// Max of the D ratio over explicit indices (e.g. block ends).
pub fn estimate_d_at(lengths: &LengthSequence, at: &[Index]) -> Result<f64> {
    at.iter()
        .map(|&i| d_ratio_at(lengths, i))
        .try_fold(f64::NEG_INFINITY, |m, r| r.map(|v| m.max(v)))
}

/// `L′` of `lengths` over `schedule`.
pub fn block_sequence(lengths: &LengthSequence, schedule: Schedule) -> LengthSequence {
    lengths.block(schedule)
}

/// `n_{k−1}·ℓ_{n_k}^α`.
fn r_term(lengths: &LengthSequence, prev: Index, cur: Index, alpha: f64) -> Result<f64> {
    match (prev.exact, cur.exact) {
        (Some(p), Some(c)) => Ok(p as f64 * lengths.eval(c)?.powf(alpha)),
        _ => Ok((prev.ln + alpha * lengths.ln_eval(cur)?).exp()),
    }
}

/// Greedy block schedule `n_1 = 2 < n_2 < … < n_K`.
///
/// For every `k ≥ 2`, `n_k` is (up to bisection resolution in `ln n`) the
/// smallest index with `ln n_k ≥ 1.5·ln n_{k−1}` such that
/// `n_{k−1}·ℓ_{n_k}^α ≤ 2^{−k}`, and, when `0 < δ < ∞`, such that the block-end
/// ratio `Σ_{s≤n_k} ℓ′_s / ln n_k ≤ δ + 2^{−(k+2)}`.
pub fn choose_schedule(lengths: &LengthSequence, alpha: f64, blocks: usize) -> Result<Schedule> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    if blocks < 1 {
        return Err(Error::invalid("k", "need at least one block"));
    }
    let delta = lengths.delta_hint().filter(|d| d.is_finite() && *d > 0.0);
    let first = Index::exact(2);
    let mut ends = vec![first];
    let search_err = |block: usize, e: Error| Error::ScheduleSearch {
        block,
        reason: e.to_string(),
    };
    let mut prefix = block_mass(lengths, None, first, first).map_err(|e| search_err(1, e))?;

    for k in 2..=blocks {
        let prev = ends[k - 2];
        let r_bound = 0.5f64.powi(k as i32);
        let d_bound = delta.map(|d| d + 0.5f64.powi(k as i32 + 2));
        let holds = |idx: Index| -> Result<bool> {
            if !(prev < idx) || r_term(lengths, prev, idx, alpha)? > r_bound {
                return Ok(false);
            }
            match d_bound {
                None => Ok(true),
                Some(b) => Ok((prefix + block_mass(lengths, Some(prev), idx, idx)?) / idx.ln <= b),
            }
        };
        let floor = (1.5 * prev.ln).max(prev.ln + 1e-12);
        let mut lo = floor;
        let mut step = 1.0;
        let mut hi = floor;
        if !holds(Index::from_ln(hi)).map_err(|e| search_err(k, e))? {
            loop {
                hi = floor + step;
                if hi > MAX_LN_INDEX {
                    return Err(Error::ScheduleSearch {
                        block: k,
                        reason: format!("no index with ln n <= {MAX_LN_INDEX:e} satisfies the block conditions"),
                    });
                }
                if holds(Index::from_ln(hi)).map_err(|e| search_err(k, e))? {
                    break;
                }
                lo = hi;
                step *= 2.0;
            }
            for _ in 0..200 {
                let (a, b) = (Index::from_ln(lo), Index::from_ln(hi));
                let done = match (a.exact, b.exact) {
                    (Some(x), Some(y)) => y <= x + 1,
                    _ => hi - lo <= 1e-12 * hi,
                };
                if done {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if holds(Index::from_ln(mid)).map_err(|e| search_err(k, e))? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        let idx = Index::from_ln(hi);
        prefix += block_mass(lengths, Some(prev), idx, idx).map_err(|e| search_err(k, e))?;
        ends.push(idx);
    }
    Schedule::new(ends)
}

/// Per-block diagnostics of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub k: usize,
    pub end: Index,
    pub ln_ell: f64,
    /// `n_{k−1}·ℓ_{n_k}^α` (zero for the first block).
    pub r_term: f64,
    /// `Σ_{s≤n_k} ℓ′_s / ln n_k`.
    pub d_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub lengths: String,
    pub alpha: f64,
    pub delta_hint: Option<f64>,
    pub rows: Vec<ScheduleRow>,
    pub r_sum: f64,
    pub max_d_ratio: f64,
}

/// Recomputes the block quantities of a schedule from `L′` directly.
pub fn diagnose_schedule(
    lengths: &LengthSequence,
    schedule: &Schedule,
    alpha: f64,
) -> Result<ScheduleReport> {
    let blocked = lengths.block(schedule.clone());
    let mut rows = Vec::with_capacity(schedule.len());
    for (i, &end) in schedule.ends.iter().enumerate() {
        let r = if i == 0 {
            0.0
        } else {
            r_term(lengths, schedule.ends[i - 1], end, alpha)?
        };
        rows.push(ScheduleRow {
            k: i + 1,
            end,
            ln_ell: lengths.ln_eval(end)?,
            r_term: r,
            d_ratio: d_ratio_at(&blocked, end)?,
        });
    }
    Ok(ScheduleReport {
        lengths: lengths.describe(),
        alpha,
        delta_hint: lengths.delta_hint(),
        r_sum: rows.iter().map(|r| r.r_term).sum(),
        max_d_ratio: rows.iter().map(|r| r.d_ratio).fold(f64::NEG_INFINITY, f64::max),
        rows,
    })
}

/// Heuristic series classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Convergent => "convergent",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Fitted term-decay exponent above which a series is called convergent.
pub const CONVERGENT_EXPONENT: f64 = 1.1;
/// Fitted term-decay exponent at or below which a series is called divergent.
pub const DIVERGENT_EXPONENT: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub n: u64,
    pub partial_sum: f64,
    pub ln_partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub series: String,
    pub n_max: u64,
    pub checkpoints: Vec<SeriesPoint>,
    /// `p̂` with `t_n ≈ n^{−p̂}` over the last decade (least squares in log-log).
    pub decay_exponent: f64,
    /// Share of the partial sum contributed by the last decade.
    pub tail_share: f64,
    pub verdict: Verdict,
    /// The verdict rule, stated so no output overclaims.
    pub heuristic: String,
}

fn classify(exponent: f64, tail_share: f64, n_max: u64) -> Verdict {
    if n_max < 100 || !exponent.is_finite() {
        Verdict::Inconclusive
    } else if exponent > CONVERGENT_EXPONENT || (exponent > 1.0 && tail_share < 1e-6) {
        Verdict::Convergent
    } else if exponent <= DIVERGENT_EXPONENT {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Sums `Σ_{n≤N} t_n` given `ln t_n` (called in order n = 1, 2, …).
fn run_series(
    name: String,
    n_max: u64,
    mut ln_term: impl FnMut(u64) -> Result<f64>,
) -> Result<SeriesReport> {
    if n_max < 2 {
        return Err(Error::invalid("n", "need N >= 2"));
    }
    if n_max > MAX_SUM_TERMS {
        return Err(Error::OutOfRange(format!("N = {n_max} exceeds {MAX_SUM_TERMS} terms")));
    }
    let decade_start = (n_max / 10).max(1);
    let mut marks = log_spaced(1, n_max, 16);
    marks.push(decade_start);
    marks.sort_unstable();
    marks.dedup();
    let fit_at = log_spaced(decade_start, n_max, 64);

    let mut ln_sum = f64::NEG_INFINITY;
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut fit = Vec::with_capacity(fit_at.len());
    let (mut mi, mut fi) = (0, 0);
    let mut ln_sum_at_decade = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let lt = ln_term(n)?;
        ln_sum = log_add(ln_sum, lt);
        if fi < fit_at.len() && fit_at[fi] == n {
            fit.push(((n as f64).ln(), lt));
            fi += 1;
        }
        if mi < marks.len() && marks[mi] == n {
            checkpoints.push(SeriesPoint {
                n,
                partial_sum: ln_sum.exp(),
                ln_partial_sum: ln_sum,
            });
            mi += 1;
        }
        if n == decade_start {
            ln_sum_at_decade = ln_sum;
        }
    }
    let decay_exponent = if fit.len() >= 2 { -slope(&fit) } else { f64::NAN };
    let tail_share = -(ln_sum_at_decade - ln_sum).exp_m1();
    Ok(SeriesReport {
        series: name,
        n_max,
        checkpoints,
        decay_exponent,
        tail_share,
        verdict: classify(decay_exponent, tail_share, n_max),
        heuristic: format!(
            "heuristic: convergent if fitted decay exponent over the last decade > {CONVERGENT_EXPONENT} \
             (or > 1 with tail share < 1e-6); divergent if <= {DIVERGENT_EXPONENT}; otherwise inconclusive"
        ),
    })
}

/// `Σ_{n≤N} ℓ_n^{−β}·exp(−n·d·ℓ_n)`.
pub fn theorem_series(lengths: &LengthSequence, beta: f64, d: f64, n_max: u64) -> Result<SeriesReport> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::invalid("d", format!("{d} not in (0, 1)")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("{beta} must be >= 0")));
    }
    let name = format!("sum (1/ell_n)^{beta} exp(-n {d} ell_n), {}", lengths.describe());
    run_series(name, n_max, |n| {
        let ell = lengths.eval(n)?;
        Ok(-beta * ell.ln() - n as f64 * d * ell)
    })
}

/// `Σ_{n≤N} n^{−2}·exp(ℓ_1 + ⋯ + ℓ_n)`, each term formed in log space.
pub fn shepp_series(lengths: &LengthSequence, n_max: u64) -> Result<SeriesReport> {
    let name = format!("sum n^-2 exp(ell_1 + ... + ell_n), {}", lengths.describe());
    let mut prefix = Neumaier::default();
    run_series(name, n_max, |n| {
        prefix.add(lengths.eval(n)?);
        Ok(prefix.value() - 2.0 * (n as f64).ln())
    })
}

/// Parsed length-rule string.
#[derive(Debug, Clone, PartialEq)]
pub enum LengthSpec {
    LogOverN(f64),
    Harmonic(f64),
    Power(f64, f64),
    Table(PathBuf),
}

impl LengthSpec {
    /// Builds the sequence; `table` specs read their CSV relative to `base`.
    ///
    /// Table files hold one length per row (last column, rows in order
    /// n = 1, 2, …); a non-numeric first row is taken as a header.
    pub fn build(&self, base: Option<&Path>) -> Result<LengthSequence> {
        match self {
            LengthSpec::LogOverN(c) => LengthSequence::log_over_n(*c),
            LengthSpec::Harmonic(c) => LengthSequence::harmonic(*c),
            LengthSpec::Power(c, g) => LengthSequence::power(*c, *g),
            LengthSpec::Table(path) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let bad = |why: String| Error::invalid("lengths", format!("{}: {why}", path.display()));
                let mut reader = csv::ReaderBuilder::new()
                    .has_headers(false)
                    .comment(Some(b'#'))
                    .flexible(true)
                    .trim(csv::Trim::All)
                    .from_path(&path)
                    .map_err(|e| bad(e.to_string()))?;
                let mut values = Vec::new();
                for (i, rec) in reader.records().enumerate() {
                    let rec = rec.map_err(|e| bad(e.to_string()))?;
                    let Some(field) = rec.iter().next_back() else { continue };
                    match field.parse::<f64>() {
                        Ok(v) => values.push(v),
                        Err(_) if i == 0 => continue,
                        Err(_) => return Err(bad(format!("row {}: {field:?} is not a number", i + 1))),
                    }
                }
                LengthSequence::table(values)
            }
        }
    }
}

impl FromStr for LengthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::invalid("lengths", format!("{s:?}: {why}"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad("expected a number"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["logn", c] => Ok(LengthSpec::LogOverN(num(c)?)),
            ["harmonic", c] => Ok(LengthSpec::Harmonic(num(c)?)),
            ["power", c, g] => Ok(LengthSpec::Power(num(c)?, num(g)?)),
            ["table", ..] if s.len() > "table:".len() => Ok(LengthSpec::Table(s["table:".len()..].into())),
            _ => Err(bad("expected logn:<c>, harmonic:<c>, power:<c>:<gamma> or table:<file.csv>")),
        }
    }
}

impl fmt::Display for LengthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthSpec::LogOverN(c) => write!(f, "logn:{c}"),
            LengthSpec::Harmonic(c) => write!(f, "harmonic:{c}"),
            LengthSpec::Power(c, g) => write!(f, "power:{c}:{g}"),
            LengthSpec::Table(p) => write!(f, "table:{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let l = LengthSequence::log_over_n(2.0).unwrap();
        assert!((l.eval(7).unwrap() - 2.0 * 7f64.ln() / 7.0).abs() < 1e-15);
        assert!((l.eval(7).unwrap() - 0.5559).abs() < 1e-4);
        assert_eq!(LengthSequence::harmonic(1.0).unwrap().eval(4).unwrap(), 0.25);
        assert!(l.eval(0).is_err());
        assert!(l.eval(MAX_EXACT_INDEX + 1).is_err());
    }

    #[test]
    fn small_indices_are_clamped_and_monotone() {
        let l = LengthSequence::log_over_n(5.0).unwrap();
        assert_eq!(l.eval(1).unwrap(), MAX_LENGTH);
        let l = LengthSequence::log_over_n(1.0).unwrap();
        assert_eq!(l.eval(1).unwrap(), l.eval(3).unwrap());
        assert_eq!(l.eval(2).unwrap(), l.eval(3).unwrap());
        assert_eq!(LengthSequence::harmonic(3.0).unwrap().eval(2).unwrap(), MAX_LENGTH);
    }

    #[test]
    fn monotone_over_scan() {
        let rules = [
            LengthSequence::log_over_n(0.3).unwrap(),
            LengthSequence::log_over_n(4.0).unwrap(),
            LengthSequence::harmonic(2.0).unwrap(),
            LengthSequence::power(1.5, 0.7).unwrap(),
        ];
        for l in &rules {
            let mut prev = f64::INFINITY;
            for n in (1..5000).chain(log_spaced(5000, 1 << 50, 8)) {
                let v = l.eval(n).unwrap();
                assert!(v > 0.0 && v < 1.0);
                assert!(v <= prev, "{} increases at {n}", l.describe());
                prev = v;
            }
        }
    }

    #[test]
    fn table_validation() {
        assert!(LengthSequence::table(vec![0.5, 0.4, 0.4, 0.1]).is_ok());
        assert!(LengthSequence::table(vec![0.5, 0.6]).is_err());
        assert!(LengthSequence::table(vec![1.0]).is_err());
        assert!(LengthSequence::table(vec![]).is_err());
        let t = LengthSequence::table(vec![0.5, 0.4]).unwrap();
        assert!(matches!(t.eval(3), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn log_space_matches_direct() {
        let rules = [
            LengthSequence::log_over_n(0.7).unwrap(),
            LengthSequence::harmonic(2.0).unwrap(),
            LengthSequence::power(1.5, 0.7).unwrap(),
        ];
        for l in &rules {
            for n in [10u64, 12345, 1 << 40] {
                let direct = l.eval(n).unwrap().ln();
                let big = Index { exact: None, ln: (n as f64).ln() };
                assert!((l.ln_eval(big).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_examples() {
        let e = estimate_delta(&LengthSequence::log_over_n(0.5).unwrap(), (10, 1_000_000)).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
        let e = estimate_delta(&LengthSequence::harmonic(3.0).unwrap(), (10, 1_000_000)).unwrap();
        assert!((e.value - 3.0 / 1e6f64.ln()).abs() < 1e-12);
        assert_eq!(e.at, 1_000_000);
        let e = estimate_delta(&LengthSequence::power(1.0, 0.5).unwrap(), (10, 1_000_000)).unwrap();
        assert_eq!(e.at, 10);
        assert!((e.value - 10f64.sqrt() / 10f64.ln()).abs() < 1e-12);
        assert!((e.value - 1.373).abs() < 1e-3);
        assert!(estimate_delta(&LengthSequence::harmonic(1.0).unwrap(), (1, 10)).is_err());
    }

    #[test]
    fn block_examples() {
        let l = LengthSequence::harmonic(1.0).unwrap();
        let b = l.block(Schedule::from_u64(&[2, 4]).unwrap());
        assert_eq!(b.eval(3).unwrap(), 0.25);
        assert_eq!(b.eval(4).unwrap(), 0.25);
        assert_eq!(b.eval(1).unwrap(), 0.5);
        assert!(b.eval(5).is_err());
        let sched = Schedule::from_u64(&[3, 10, 50, 400]).unwrap();
        let b = l.block(sched.clone());
        let mut prev = 0u64;
        let mut want = 0.0;
        for e in sched.ends() {
            let n = e.as_u64().unwrap();
            assert_eq!(b.eval(n).unwrap(), l.eval(n).unwrap());
            want += (n - prev) as f64 / n as f64;
            prev = n;
            let got = b.partial_sum(*e).unwrap();
            assert!((got - want).abs() < 1e-12);
        }
        for s in 1..=400 {
            assert!(b.eval(s).unwrap() <= l.eval(s).unwrap());
        }
    }

    #[test]
    fn closed_form_partial_sum_equals_term_sum() {
        let l = LengthSequence::log_over_n(0.8).unwrap();
        let b = l.block(Schedule::from_u64(&[2, 17, 300, 5000]).unwrap());
        let mut direct = 0.0;
        for s in 1..=5000u64 {
            direct += b.eval(s).unwrap();
            if [2, 10, 17, 200, 300, 4999, 5000].contains(&s) {
                let closed = b.partial_sum(Index::exact(s)).unwrap();
                assert!((closed - direct).abs() < 1e-10, "s={s}");
            }
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::from_u64(&[1, 4]).is_err());
        assert!(Schedule::from_u64(&[4, 4]).is_err());
        assert!(Schedule::from_u64(&[]).is_err());
        assert!(Schedule::from_u64(&[2, 3, 9]).is_ok());
    }

    #[test]
    fn single_block_schedule() {
        let l = LengthSequence::log_over_n(0.5).unwrap();
        let s = choose_schedule(&l, 0.9, 1).unwrap();
        assert_eq!(s.ends().len(), 1);
        assert_eq!(s.ends()[0].as_u64(), Some(2));
        let r = diagnose_schedule(&l, &s, 0.9).unwrap();
        assert_eq!(r.r_sum, 0.0);
    }

    #[test]
    fn harmonic_schedule_r_terms() {
        let l = LengthSequence::harmonic(1.0).unwrap();
        let s = choose_schedule(&l, 0.5, 5).unwrap();
        let ends: Vec<f64> = s.ends().iter().map(|e| e.ln()).collect();
        for k in 1..ends.len() {
            // n_{k−1}·n_k^{−1/2} ≤ 2^{−(k+1)}
            let term = (ends[k - 1] - 0.5 * ends[k]).exp();
            assert!(term <= 0.5f64.powi(k as i32 + 1) * (1.0 + 1e-9));
            assert!(ends[k] >= 1.5 * ends[k - 1] - 1e-12);
        }
    }

    #[test]
    fn schedule_errors() {
        let l = LengthSequence::log_over_n(0.5).unwrap();
        assert!(choose_schedule(&l, 1.0, 3).is_err());
        assert!(choose_schedule(&l, 0.5, 0).is_err());
        let t = LengthSequence::table(vec![0.5, 0.3, 0.2, 0.1]).unwrap();
        assert!(matches!(choose_schedule(&t, 0.9, 4), Err(Error::ScheduleSearch { .. })));
    }

    #[test]
    fn constant_terms_diverge() {
        let l = LengthSequence::harmonic(2.0).unwrap();
        let r = theorem_series(&l, 0.0, 0.5, 100_000).unwrap();
        assert_eq!(r.verdict, Verdict::Divergent);
        assert!(r.decay_exponent.abs() < 1e-3);
    }

    #[test]
    fn series_parameter_checks() {
        let l = LengthSequence::log_over_n(2.0).unwrap();
        assert!(theorem_series(&l, 1.0, 1.0, 1000).is_err());
        assert!(theorem_series(&l, -1.0, 0.5, 1000).is_err());
        assert!(shepp_series(&l, 1).is_err());
        assert_eq!(theorem_series(&l, 1.0, 0.5, 50).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn partial_sums_are_increasing() {
        let l = LengthSequence::log_over_n(5.0).unwrap();
        let r = theorem_series(&l, 1.0, 0.5, 10_000).unwrap();
        assert!(r.checkpoints.windows(2).all(|w| w[0].n < w[1].n && w[0].partial_sum <= w[1].partial_sum));
        assert_eq!(r.checkpoints.last().unwrap().n, 10_000);
        assert!(r.heuristic.starts_with("heuristic"));
    }

    #[test]
    fn parse_length_specs() {
        assert_eq!("logn:2.5".parse::<LengthSpec>().unwrap(), LengthSpec::LogOverN(2.5));
        assert_eq!("harmonic:1".parse::<LengthSpec>().unwrap(), LengthSpec::Harmonic(1.0));
        assert_eq!("power:1:0.5".parse::<LengthSpec>().unwrap(), LengthSpec::Power(1.0, 0.5));
        assert_eq!(
            "table:data/l.csv".parse::<LengthSpec>().unwrap(),
            LengthSpec::Table("data/l.csv".into())
        );
        for bad in ["logn", "logn:x", "power:1", "table:", "geometric:0.5"] {
            assert!(bad.parse::<LengthSpec>().is_err(), "{bad}");
        }
        assert!(LengthSpec::LogOverN(-1.0).build(None).is_err());
    }

    #[test]
    fn index_ordering() {
        let a = Index::exact(10);
        let b = Index::from_ln(100.0);
        assert!(a < b);
        assert_eq!(Index::from_ln(10f64.ln()).as_u64(), Some(10));
        assert!(b.as_u64().is_none());
    }
}
