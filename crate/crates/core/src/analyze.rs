//! Coverage-probability scans and box-counting estimates of uncovered residuals.
//!
//! Box dimension is an upper proxy for Hausdorff dimension: an estimate well
//! below the analytic floor `dim_H A − c` is a red flag, one above it is only
//! consistent with the bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lengths::LengthSequence;
use crate::simulate::{
    checkpoint_grid, run_trial_with_tail, TrialConfig, DEFAULT_CHECKPOINT_RATIO,
    DEFAULT_FIRST_CHECKPOINT,
};
use crate::targets::TargetSet;
use crate::torus::IntervalUnion;

/// Relative snapping applied to cell boundaries when counting boxes.
pub const CELL_SNAP: f64 = 1e-9;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Trials per cell from which monotonicity of the fractions is asserted.
pub const MONOTONE_MIN_TRIALS: u64 = 50;

pub const DEFAULT_DIMS_TAIL: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub r_squared: f64,
    /// Set when the set was empty; slope is then 0 by definition.
    pub degenerate: bool,
}

/// Occupied cells of the grid `{[jε, (j+1)ε)}` met by `u`.
pub fn box_count(u: &IntervalUnion, eps: f64) -> u64 {
    let cells = (1.0 / eps - CELL_SNAP).ceil() as i64;
    let mut count = 0u64;
    let mut last: i64 = -1;
    for p in u.pieces() {
        let lo = (p.lo / eps + CELL_SNAP).floor() as i64;
        let hi = if p.is_degenerate() {
            lo
        } else {
            ((p.hi / eps - CELL_SNAP).ceil() as i64 - 1).max(lo)
        };
        let lo = lo.clamp(0, cells - 1);
        let hi = hi.clamp(0, cells - 1);
        let start = lo.max(last + 1);
        if hi >= start {
            count += (hi - start + 1) as u64;
            last = hi;
        }
    }
    count
}

/// Least-squares slope and r² of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

pub fn box_dimension(u: &IntervalUnion, scales: &[f64]) -> Result<DimensionEstimate> {
    if scales.len() < 3 {
        return Err(Error::invalid("scales", "need at least 3 scales"));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
        return Err(Error::invalid("scales", format!("{s} not in (0, 1)")));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("scales", "scales must be strictly decreasing"));
    }
    if u.is_empty() {
        return Ok(DimensionEstimate {
            scales: scales.to_vec(),
            counts: vec![0; scales.len()],
            slope: 0.0,
            r_squared: 0.0,
            degenerate: true,
        });
    }
    let counts: Vec<u64> = scales.iter().map(|&e| box_count(u, e)).collect();
    if let Some(w) = counts.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::Assertion(format!(
            "box counts decreased from {} to {} as the scale shrank",
            w[0], w[1]
        )));
    }
    let x: Vec<f64> = scales.iter().map(|e| -e.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, r_squared) = linear_fit(&x, &y);
    Ok(DimensionEstimate {
        scales: scales.to_vec(),
        counts,
        slope,
        r_squared,
        degenerate: false,
    })
}

/// `2^{−j}` for every `j ≥ 1` with `lo ≤ 2^{−j} ≤ hi`, largest first.
pub fn dyadic_scales(lo: f64, hi: f64) -> Vec<f64> {
    (1..1075)
        .map(|j| 2f64.powi(-j))
        .skip_while(|&e| e > hi)
        .take_while(|&e| e >= lo)
        .collect()
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    NoCover,
    Cover,
    TheoremSilent,
}

impl RegimeLabel {
    pub fn for_c(c: f64, target: &TargetSet) -> Self {
        if target.dim_h().is_some_and(|h| c < h) {
            RegimeLabel::NoCover
        } else if c > target.dim_b_upper() + 1.0 {
            RegimeLabel::Cover
        } else {
            RegimeLabel::TheoremSilent
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::NoCover => "no-cover",
            RegimeLabel::Cover => "cover",
            RegimeLabel::TheoremSilent => "theorem-silent",
        }
    }
}

/// Simulation settings shared by every `(c, seed)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub n_max: u64,
    pub seed0: u64,
    pub trials: u64,
    pub checkpoint_ratio: f64,
    pub first_checkpoint: u64,
    pub tail_start: Option<u64>,
    pub tail_checkpoints: usize,
}

impl ScanSettings {
    pub fn new(n_max: u64, trials: u64, seed0: u64) -> Self {
        ScanSettings {
            n_max,
            seed0,
            trials,
            checkpoint_ratio: DEFAULT_CHECKPOINT_RATIO,
            first_checkpoint: DEFAULT_FIRST_CHECKPOINT,
            tail_start: None,
            tail_checkpoints: 1,
        }
    }

    fn trial<'a>(&self, lengths: &'a LengthSequence, target: &'a TargetSet, seed: u64) -> TrialConfig<'a> {
        TrialConfig {
            seed,
            lengths,
            target,
            n_max: self.n_max,
            checkpoint_ratio: self.checkpoint_ratio,
            first_checkpoint: self.first_checkpoint,
            tail_start: self.tail_start,
        }
    }

    fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.trials).map(move |i| self.seed0.wrapping_add(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub c: f64,
    pub seed: u64,
    pub eventually_covered: bool,
    pub last_failure_n: Option<u64>,
    pub tail_uncovered_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub c: f64,
    pub label: RegimeLabel,
    pub trials: u64,
    /// `"ok"` or the error that stopped this `c`.
    pub status: String,
    pub eventually_covered_fraction: Option<f64>,
    pub wilson_lo: Option<f64>,
    pub wilson_hi: Option<f64>,
    /// Mean over the trials that failed at some checkpoint.
    pub mean_last_failure_n: Option<f64>,
    pub mean_tail_uncovered_measure: Option<f64>,
    #[serde(skip)]
    pub error: Option<Error>,
}

impl ScanRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub c_star: f64,
    pub uncertainty: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub target: String,
    pub dim_h: Option<f64>,
    pub dim_b_upper: f64,
    pub no_cover_below: Option<f64>,
    pub cover_above: f64,
    pub settings: ScanSettings,
    pub checkpoints: Vec<u64>,
    pub tail_start: u64,
    pub rows: Vec<ScanRow>,
    pub cells: Vec<ScanCell>,
    pub transition: Option<Transition>,
    pub monotone: bool,
    /// Monotonicity is only asserted with at least `MONOTONE_MIN_TRIALS` per `c`.
    pub monotone_asserted: bool,
}

impl ScanResult {
    /// First error among the rows, if any `c` failed.
    pub fn first_error(&self) -> Option<&ScanRow> {
        self.rows.iter().find(|r| !r.is_ok())
    }

    pub fn row(&self, c: f64) -> Option<&ScanRow> {
        self.rows.iter().find(|r| r.c == c)
    }
}

pub fn build_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Error::invalid("jobs", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Assertion(format!("thread pool: {e}")))
}

fn check_c_grid(c_grid: &[f64]) -> Result<()> {
    if c_grid.is_empty() {
        return Err(Error::invalid("c_grid", "empty"));
    }
    if let Some(c) = c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::invalid("c_grid", format!("{c} is not positive")));
    }
    if c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("c_grid", "must be strictly increasing"));
    }
    Ok(())
}

fn largest_jump(rows: &[ScanRow]) -> Option<Transition> {
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.eventually_covered_fraction.map(|f| (r.c, f)))
        .collect();
    let mut best: Option<Transition> = None;
    for w in ok.windows(2) {
        let jump = w[1].1 - w[0].1;
        if jump > 0.0 && best.is_none_or(|b| jump > b.jump) {
            best = Some(Transition {
                c_star: 0.5 * (w[0].0 + w[1].0),
                uncertainty: w[1].0 - w[0].0,
                jump,
            });
        }
    }
    best
}

/// Eventual-coverage fractions for `ℓ_n = c ln n / n` over `c_grid`.
///
/// Seeds are shared across `c`, so each seed's outcome is monotone in `c`.
/// Output is independent of `jobs`.
pub fn phase_scan(
    target: &TargetSet,
    c_grid: &[f64],
    settings: &ScanSettings,
    jobs: usize,
) -> Result<ScanResult> {
    check_c_grid(c_grid)?;
    if settings.trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let grid = checkpoint_grid(settings.first_checkpoint, settings.n_max, settings.checkpoint_ratio)?;
    if settings.tail_checkpoints < 1 || settings.tail_checkpoints > grid.len() {
        return Err(Error::invalid(
            "tail_checkpoints",
            format!("{} not in 1..={}", settings.tail_checkpoints, grid.len()),
        ));
    }
    let lengths = c_grid
        .iter()
        .map(|&c| LengthSequence::log_over_n(c))
        .collect::<Result<Vec<_>>>()?;
    let jobs_list: Vec<(usize, u64)> = (0..c_grid.len())
        .flat_map(|i| settings.seeds().map(move |s| (i, s)))
        .collect();
    let pool = build_pool(jobs)?;
    let outcomes: Vec<Result<ScanCell>> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|&(i, seed)| {
                let cfg = settings.trial(&lengths[i], target, seed);
                let (trace, tail) = run_trial_with_tail(&cfg, settings.tail_checkpoints)?;
                Ok(ScanCell {
                    c: c_grid[i],
                    seed,
                    eventually_covered: trace.eventually_covered,
                    last_failure_n: trace.last_failure_n,
                    tail_uncovered_measure: tail.measure(),
                })
            })
            .collect()
    });

    let per_c = settings.trials as usize;
    let mut rows = Vec::with_capacity(c_grid.len());
    let mut cells = Vec::with_capacity(outcomes.len());
    for (i, chunk) in outcomes.chunks(per_c).enumerate() {
        let c = c_grid[i];
        let label = RegimeLabel::for_c(c, target);
        if let Some(Err(e)) = chunk.iter().find(|o| o.is_err()) {
            rows.push(ScanRow {
                c,
                label,
                trials: settings.trials,
                status: e.to_string(),
                eventually_covered_fraction: None,
                wilson_lo: None,
                wilson_hi: None,
                mean_last_failure_n: None,
                mean_tail_uncovered_measure: None,
                error: Some(e.clone()),
            });
            continue;
        }
        let chunk: Vec<ScanCell> = chunk.iter().map(|o| o.clone().unwrap()).collect();
        let k = chunk.iter().filter(|c| c.eventually_covered).count() as u64;
        let n = settings.trials;
        let (lo, hi) = wilson_interval(k, n);
        let failures: Vec<f64> = chunk.iter().filter_map(|c| c.last_failure_n).map(|n| n as f64).collect();
        let mean_fail = (!failures.is_empty()).then(|| failures.iter().sum::<f64>() / failures.len() as f64);
        let mean_tail = chunk.iter().map(|c| c.tail_uncovered_measure).fold(0.0, |a, b| a + b) / n as f64;
        rows.push(ScanRow {
            c,
            label,
            trials: n,
            status: "ok".into(),
            eventually_covered_fraction: Some(k as f64 / n as f64),
            wilson_lo: Some(lo),
            wilson_hi: Some(hi),
            mean_last_failure_n: mean_fail,
            mean_tail_uncovered_measure: Some(mean_tail),
            error: None,
        });
        cells.extend(chunk);
    }
    let fractions: Vec<f64> = rows.iter().filter_map(|r| r.eventually_covered_fraction).collect();
    let monotone = fractions.windows(2).all(|w| w[1] >= w[0]);
    let probe = settings.trial(&lengths[0], target, settings.seed0);
    Ok(ScanResult {
        target: target.describe(),
        dim_h: target.dim_h(),
        dim_b_upper: target.dim_b_upper(),
        no_cover_below: target.dim_h(),
        cover_above: target.dim_b_upper() + 1.0,
        settings: settings.clone(),
        tail_start: probe.resolved_tail_start(&grid),
        checkpoints: grid,
        transition: largest_jump(&rows),
        rows,
        cells,
        monotone,
        monotone_asserted: settings.trials >= MONOTONE_MIN_TRIALS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedDimension {
    pub seed: u64,
    pub uncovered_measure: f64,
    pub pieces: usize,
    pub estimate: DimensionEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimsResult {
    pub target: String,
    pub c: f64,
    pub settings: ScanSettings,
    pub scales: Vec<f64>,
    /// `dim_H A − c`; `None` when `dim_H A` is unknown.
    pub floor: Option<f64>,
    /// The floor is `≤ 0`, so the bound says nothing.
    pub vacuous: bool,
    pub estimates: Vec<SeedDimension>,
    /// Mean slope over the non-degenerate estimates.
    pub mean_slope: Option<f64>,
    pub degenerate_count: usize,
}

/// Box-counting slopes of the tail-uncovered set for `ℓ_n = c ln n / n`, one
/// per seed, over dyadic scales in `[ℓ_{n_max}, 1/2]`.
pub fn uncovered_dimension_experiment(
    target: &TargetSet,
    c: f64,
    settings: &ScanSettings,
    jobs: usize,
) -> Result<DimsResult> {
    if settings.trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let lengths = LengthSequence::log_over_n(c)?;
    let ell = lengths.eval(settings.n_max)?;
    let scales = dyadic_scales(ell, 0.5);
    if scales.len() < 3 {
        return Err(Error::invalid(
            "n_max",
            format!("ℓ_{{n_max}} = {ell} leaves fewer than 3 dyadic scales"),
        ));
    }
    let seeds: Vec<u64> = settings.seeds().collect();
    let pool = build_pool(jobs)?;
    let estimates: Vec<SeedDimension> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let cfg = settings.trial(&lengths, target, seed);
                let (_, tail) = run_trial_with_tail(&cfg, settings.tail_checkpoints)?;
                Ok(SeedDimension {
                    seed,
                    uncovered_measure: tail.measure(),
                    pieces: tail.circular_piece_count(),
                    estimate: box_dimension(&tail, &scales)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let live: Vec<f64> = estimates
        .iter()
        .filter(|e| !e.estimate.degenerate)
        .map(|e| e.estimate.slope)
        .collect();
    let floor = target.dim_h().map(|h| h - c);
    Ok(DimsResult {
        target: target.describe(),
        c,
        settings: settings.clone(),
        scales,
        floor,
        vacuous: floor.is_none_or(|f| f <= 0.0),
        degenerate_count: estimates.len() - live.len(),
        mean_slope: (!live.is_empty()).then(|| live.iter().sum::<f64>() / live.len() as f64),
        estimates,
    })
}
