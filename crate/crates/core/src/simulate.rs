//! Seeded center streams and exact coverage decisions for `E_n`.
//!
//! With all arcs sharing the radius `ℓ_n / 2`, the complement of `E_n` is read
//! off the sorted centers: between circularly consecutive centers `a < b` the
//! piece `(a + ℓ_n/2, b − ℓ_n/2)` is uncovered whenever it is non-empty.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lengths::LengthSequence;
use crate::targets::TargetSet;
use crate::torus::{Interval, IntervalUnion, MERGE_EPS};

/// Generator identity written next to every seed.
pub const PRNG_ID: &str = "rand_chacha-0.3 ChaCha8Rng::seed_from_u64(seed), f64 = rand-0.8 Standard (53-bit, [0,1))";

pub const DEFAULT_CHECKPOINT_RATIO: f64 = 1.1;
pub const DEFAULT_FIRST_CHECKPOINT: u64 = 64;

/// The i.i.d. uniform centers `ω_1, ω_2, …` of one seed.
#[derive(Debug, Clone)]
pub struct CenterStream {
    rng: ChaCha8Rng,
}

impl CenterStream {
    pub fn new(seed: u64) -> Self {
        CenterStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Iterator for CenterStream {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(self.rng.gen::<f64>())
    }
}

/// First `n` centers of `seed`; a prefix of every longer draw.
pub fn sample_centers(seed: u64, n: usize) -> Vec<f64> {
    CenterStream::new(seed).take(n).collect()
}

/// `𝕋 \ E` for closed arcs of length `ell` around sorted `centers`.
///
/// Produces exactly `complement(arcs_to_union(arcs))`: endpoints are formed
/// with the same expressions and gaps are dropped by the same merge rule.
pub fn uncovered_at(centers: &[f64], ell: f64) -> Result<IntervalUnion> {
    if centers.is_empty() {
        return Err(Error::invalid("centers", "need at least one center"));
    }
    if !(ell > 0.0 && ell < 1.0) {
        return Err(Error::invalid("ell", format!("{ell} not in (0, 1)")));
    }
    if centers.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("centers", "centers must be sorted ascending"));
    }
    let r = ell / 2.0;
    let first = centers[0];
    let last = centers[centers.len() - 1];

    // The gap from the last center round to the first.
    let mut head: Vec<Interval> = Vec::with_capacity(1);
    let mut tail: Option<Interval> = None;
    let left = last + r;
    let right = first - r;
    match (left > 1.0, right < 0.0) {
        (true, true) => {}
        (true, false) => {
            let left = left - 1.0;
            if right - left > MERGE_EPS {
                head.push(Interval::raw(left, right));
            }
        }
        (false, true) => {
            let right = right + 1.0;
            if right - left > MERGE_EPS {
                tail = Some(Interval::raw(left, right));
            }
        }
        (false, false) => {
            if right > 0.0 {
                head.push(Interval::raw(0.0, right));
            }
            if left < 1.0 {
                tail = Some(Interval::raw(left, 1.0));
            }
        }
    }

    let mut pieces = head;
    for w in centers.windows(2) {
        let lo = w[0] + r;
        let hi = w[1] - r;
        if hi - lo > MERGE_EPS {
            pieces.push(Interval::raw(lo, hi));
        }
    }
    pieces.extend(tail);
    Ok(IntervalUnion::from_canonical(pieces))
}

/// Largest circular spacing of a sorted sample.
pub fn max_circular_gap(sorted: &[f64]) -> f64 {
    let wrap = sorted[0] + 1.0 - sorted[sorted.len() - 1];
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap, f64::max)
}

/// One simulated trial.
#[derive(Debug, Clone)]
pub struct TrialConfig<'a> {
    pub seed: u64,
    pub lengths: &'a LengthSequence,
    pub target: &'a TargetSet,
    pub n_max: u64,
    pub checkpoint_ratio: f64,
    pub first_checkpoint: u64,
    /// Start of the "eventually covered" window; defaults to the checkpoint
    /// nearest `√n_max`.
    pub tail_start: Option<u64>,
}

impl<'a> TrialConfig<'a> {
    pub fn new(lengths: &'a LengthSequence, target: &'a TargetSet, n_max: u64, seed: u64) -> Self {
        TrialConfig {
            seed,
            lengths,
            target,
            n_max,
            checkpoint_ratio: DEFAULT_CHECKPOINT_RATIO,
            first_checkpoint: DEFAULT_FIRST_CHECKPOINT,
            tail_start: None,
        }
    }

    /// Geometric checkpoint grid ending at `n_max`.
    pub fn checkpoints(&self) -> Result<Vec<u64>> {
        checkpoint_grid(self.first_checkpoint, self.n_max, self.checkpoint_ratio)
    }

    /// The resolved start of the eventual-coverage window.
    pub fn resolved_tail_start(&self, grid: &[u64]) -> u64 {
        match self.tail_start {
            Some(n) => n,
            None => {
                let target = (self.n_max as f64).sqrt();
                *grid
                    .iter()
                    .min_by(|a, b| (**a as f64 - target).abs().total_cmp(&(**b as f64 - target).abs()))
                    .expect("grid is never empty")
            }
        }
    }

    fn validate(&self) -> Result<Vec<u64>> {
        let grid = self.checkpoints()?;
        if self.n_max > self.lengths.max_index() {
            return Err(Error::invalid(
                "n_max",
                format!("{} exceeds what {} can evaluate", self.n_max, self.lengths.describe()),
            ));
        }
        self.target.check_resolution(self.lengths.eval(self.n_max)?)?;
        Ok(grid)
    }
}

pub fn checkpoint_grid(first: u64, n_max: u64, ratio: f64) -> Result<Vec<u64>> {
    if first < 1 {
        return Err(Error::invalid("first_checkpoint", "must be at least 1"));
    }
    if n_max < first {
        return Err(Error::invalid(
            "n_max",
            format!("{n_max} is below the first checkpoint {first}"),
        ));
    }
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::invalid("checkpoint_ratio", format!("{ratio} must exceed 1")));
    }
    let mut grid = vec![first];
    let mut n = first;
    while n < n_max {
        n = ((n as f64 * ratio).ceil() as u64).max(n + 1).min(n_max);
        grid.push(n);
    }
    Ok(grid)
}

/// Coverage state at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub n: u64,
    pub ell_n: f64,
    pub covered: bool,
    pub uncovered_measure: f64,
    pub piece_count: usize,
}

/// Per-checkpoint record of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTrace {
    pub seed: u64,
    pub checkpoints: Vec<CheckpointRecord>,
    /// Largest checkpoint at which `A ⊄ E_n`.
    pub last_failure_n: Option<u64>,
    pub tail_start: u64,
    /// `A ⊂ E_n` at every checkpoint `n ≥ tail_start`.
    pub eventually_covered: bool,
}

/// Sorted multiset of centers, extended in batches.
struct SortedCenters {
    stream: CenterStream,
    sorted: Vec<f64>,
    scratch: Vec<f64>,
    batch: Vec<f64>,
}

impl SortedCenters {
    fn new(seed: u64, capacity: usize) -> Self {
        SortedCenters {
            stream: CenterStream::new(seed),
            sorted: Vec::with_capacity(capacity),
            scratch: Vec::with_capacity(capacity),
            batch: Vec::new(),
        }
    }

    fn grow_to(&mut self, n: usize) {
        let extra = n - self.sorted.len();
        self.batch.clear();
        self.batch.extend((&mut self.stream).take(extra));
        self.batch.sort_unstable_by(f64::total_cmp);
        self.scratch.clear();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.sorted, &self.batch);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                self.scratch.push(a[i]);
                i += 1;
            } else {
                self.scratch.push(b[j]);
                j += 1;
            }
        }
        self.scratch.extend_from_slice(&a[i..]);
        self.scratch.extend_from_slice(&b[j..]);
        std::mem::swap(&mut self.sorted, &mut self.scratch);
    }
}

/// Runs a trial and also returns the union of `A \ E_n` over the last
/// `tail_checkpoints` checkpoints.
pub fn run_trial_with_tail(
    cfg: &TrialConfig<'_>,
    tail_checkpoints: usize,
) -> Result<(CoverageTrace, IntervalUnion)> {
    let grid = cfg.validate()?;
    if tail_checkpoints < 1 || tail_checkpoints > grid.len() {
        return Err(Error::invalid(
            "tail_checkpoints",
            format!("{tail_checkpoints} not in 1..={}", grid.len()),
        ));
    }
    let tail_start = cfg.resolved_tail_start(&grid);
    let tail_from = grid.len() - tail_checkpoints;
    let target = cfg.target.approx();
    let whole_circle = *target == IntervalUnion::full();

    let mut centers = SortedCenters::new(cfg.seed, cfg.n_max as usize);
    let mut records = Vec::with_capacity(grid.len());
    let mut residual_tail = IntervalUnion::empty();
    for (i, &n) in grid.iter().enumerate() {
        centers.grow_to(n as usize);
        let ell = cfg.lengths.eval(n)?;
        let uncovered = uncovered_at(&centers.sorted, ell)?;
        let residual = if whole_circle {
            uncovered
        } else {
            target.intersect(&uncovered)
        };
        records.push(CheckpointRecord {
            n,
            ell_n: ell,
            covered: residual.is_empty(),
            uncovered_measure: residual.measure(),
            piece_count: residual.circular_piece_count(),
        });
        if i >= tail_from {
            residual_tail = residual_tail.union(&residual);
        }
    }
    let last_failure_n = records.iter().rev().find(|r| !r.covered).map(|r| r.n);
    let eventually_covered = records
        .iter()
        .filter(|r| r.n >= tail_start)
        .all(|r| r.covered);
    let trace = CoverageTrace {
        seed: cfg.seed,
        checkpoints: records,
        last_failure_n,
        tail_start,
        eventually_covered,
    };
    Ok((trace, residual_tail))
}

pub fn run_trial(cfg: &TrialConfig<'_>) -> Result<CoverageTrace> {
    run_trial_with_tail(cfg, 1).map(|(t, _)| t)
}

/// Union of `A \ E_n` over the last `tail_checkpoints` checkpoints: a
/// finite-horizon stand-in for the part of `A` outside `liminf E_n`.
pub fn tail_uncovered(cfg: &TrialConfig<'_>, tail_checkpoints: usize) -> Result<IntervalUnion> {
    run_trial_with_tail(cfg, tail_checkpoints).map(|(_, u)| u)
}
