use std::path::PathBuf;
use std::str::FromStr;

use arccover::analyze::{phase_scan, uncovered_dimension_experiment, ScanSettings, DEFAULT_DIMS_TAIL};
use arccover::lengths::{
    choose_schedule, diagnose_schedule, shepp_series, theorem_series, LengthSequence, LengthSpec,
};
use arccover::simulate::{run_trial, TrialConfig, DEFAULT_CHECKPOINT_RATIO, DEFAULT_FIRST_CHECKPOINT};
use arccover::targets::{TargetSet, TargetSpec};
use serde::Serialize;

use crate::config::{parse_c_grid, pick, require, Loaded, Provenance};
use crate::error::CliError;
use crate::output::{display, num, opt_int, opt_num, Sink};
use crate::plot::scan_svg;
use crate::{Cli, Command, SimArgs};

pub const DEFAULT_N_MAX: u64 = 100_000;
pub const DEFAULT_TRIALS: u64 = 100;
pub const DEFAULT_DIMS_TRIALS: u64 = 20;
pub const DEFAULT_C_GRID: &str = "0.25:3.0:0.25";
pub const DEFAULT_SERIES_TERMS: u64 = 1_000_000;
pub const DEFAULT_ALPHA: f64 = 0.9;
pub const DEFAULT_BLOCKS: usize = 6;

struct Ctx {
    loaded: Loaded,
    jobs: usize,
    sink: Sink,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let name = cli.command.name();
    let loaded = Loaded::read(cli.config.as_deref(), name)?;
    let jobs = match cli.jobs {
        Some(0) => return Err(CliError::validation("jobs", "must be at least 1")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out_dir = pick(cli.out_dir, loaded.file.out_dir.clone(), PathBuf::from("."));
    let prefix = pick(cli.prefix, loaded.file.prefix.clone(), name.to_string());
    let ctx = Ctx {
        sink: Sink::new(out_dir, prefix)?,
        loaded,
        jobs,
    };
    match cli.command {
        Command::Trial { sim, lengths, seed } => trial(&ctx, sim, lengths, seed),
        Command::Scan {
            sim,
            c_grid,
            trials,
            seed0,
            tail_checkpoints,
        } => scan(&ctx, sim, c_grid, trials, seed0, tail_checkpoints),
        Command::Dims {
            sim,
            c_grid,
            trials,
            seed0,
            tail_checkpoints,
        } => dims(&ctx, sim, c_grid, trials, seed0, tail_checkpoints),
        Command::Series { lengths, beta, d, n } => series(&ctx, lengths, beta, d, n),
        Command::Schedule { lengths, alpha, k } => schedule(&ctx, lengths, alpha, k),
    }
}

impl Ctx {
    fn target(&self, flag: Option<String>) -> Result<(String, TargetSet), CliError> {
        let from_flag = flag.is_some();
        let text = pick(flag, self.loaded.file.target.clone(), "circle".into());
        let spec = TargetSpec::from_str(&text)?;
        let set = spec.build(self.loaded.base_for(from_flag))?;
        Ok((spec.to_string(), set))
    }

    fn lengths(&self, flag: Option<String>) -> Result<(String, LengthSequence), CliError> {
        let from_flag = flag.is_some();
        let text = require(flag, self.loaded.file.lengths.clone(), "lengths")?;
        let spec = LengthSpec::from_str(&text)?;
        let seq = spec.build(self.loaded.base_for(from_flag))?;
        Ok((spec.to_string(), seq))
    }

    fn c_grid(&self, flag: Option<String>, default: Option<&str>) -> Result<Vec<f64>, CliError> {
        match (flag, &self.loaded.file.c_grid, default) {
            (Some(s), _, _) => parse_c_grid(&s),
            (None, Some(g), _) => g.values(),
            (None, None, Some(d)) => parse_c_grid(d),
            (None, None, None) => Err(CliError::validation("c_grid", "required (--c or config field)")),
        }
    }

    fn sim(&self, sim: &SimArgs) -> SimResolved {
        let f = &self.loaded.file;
        SimResolved {
            n_max: pick(sim.n_max, f.n_max, DEFAULT_N_MAX),
            checkpoint_ratio: pick(sim.checkpoint_ratio, f.checkpoint_ratio, DEFAULT_CHECKPOINT_RATIO),
            first_checkpoint: pick(sim.first_checkpoint, f.first_checkpoint, DEFAULT_FIRST_CHECKPOINT),
            tail_start: sim.tail_start.or(f.tail_start),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct SimResolved {
    n_max: u64,
    checkpoint_ratio: f64,
    first_checkpoint: u64,
    tail_start: Option<u64>,
}

#[derive(Serialize)]
struct TrialEcho {
    command: &'static str,
    target: String,
    lengths: String,
    seed: u64,
    #[serde(flatten)]
    sim: SimResolved,
}

fn trial(ctx: &Ctx, sim: SimArgs, lengths: Option<String>, seed: Option<u64>) -> Result<(), CliError> {
    let (target_text, target) = ctx.target(sim.target.clone())?;
    let (lengths_text, seq) = ctx.lengths(lengths)?;
    let s = ctx.sim(&sim);
    let seed = pick(seed, ctx.loaded.file.seed, 0);
    let cfg = TrialConfig {
        seed,
        lengths: &seq,
        target: &target,
        n_max: s.n_max,
        checkpoint_ratio: s.checkpoint_ratio,
        first_checkpoint: s.first_checkpoint,
        tail_start: s.tail_start,
    };
    let trace = run_trial(&cfg)?;
    let prov = Provenance::new(TrialEcho {
        command: "trial",
        target: target_text,
        lengths: lengths_text,
        seed,
        sim: s,
    });
    let rows: Vec<Vec<String>> = trace
        .checkpoints
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.ell_n),
                r.covered.to_string(),
                num(r.uncovered_measure),
                r.piece_count.to_string(),
            ]
        })
        .collect();
    let csv = ctx.sink.csv(
        &prov,
        &["n", "ell_n", "covered", "uncovered_measure", "piece_count"],
        &rows,
    )?;

    #[derive(Serialize)]
    struct Summary<'a> {
        target: String,
        lengths: String,
        seed: u64,
        checkpoints: usize,
        tail_start: u64,
        eventually_covered: bool,
        last_failure_n: Option<u64>,
        final_checkpoint: &'a arccover::simulate::CheckpointRecord,
    }
    let last = trace.checkpoints.last().expect("grid is never empty");
    let summary = Summary {
        target: target.describe(),
        lengths: seq.describe(),
        seed,
        checkpoints: trace.checkpoints.len(),
        tail_start: trace.tail_start,
        eventually_covered: trace.eventually_covered,
        last_failure_n: trace.last_failure_n,
        final_checkpoint: last,
    };
    let json = ctx.sink.json(&prov, &summary)?;
    println!(
        "eventually_covered = {} (checkpoints {}..={}, last failure {})",
        trace.eventually_covered,
        trace.tail_start,
        last.n,
        trace.last_failure_n.map_or("none".into(), |n| n.to_string())
    );
    println!("wrote {} and {}", display(&csv), display(&json));
    Ok(())
}

#[derive(Serialize)]
struct ScanEcho {
    command: &'static str,
    target: String,
    c_grid: Vec<f64>,
    trials: u64,
    seed0: u64,
    tail_checkpoints: usize,
    #[serde(flatten)]
    sim: SimResolved,
}

fn settings(s: &SimResolved, trials: u64, seed0: u64, tail_checkpoints: usize) -> ScanSettings {
    ScanSettings {
        n_max: s.n_max,
        seed0,
        trials,
        checkpoint_ratio: s.checkpoint_ratio,
        first_checkpoint: s.first_checkpoint,
        tail_start: s.tail_start,
        tail_checkpoints,
    }
}

fn scan(
    ctx: &Ctx,
    sim: SimArgs,
    c_grid: Option<String>,
    trials: Option<u64>,
    seed0: Option<u64>,
    tail_checkpoints: Option<usize>,
) -> Result<(), CliError> {
    let f = &ctx.loaded.file;
    let (target_text, target) = ctx.target(sim.target.clone())?;
    let grid = ctx.c_grid(c_grid, Some(DEFAULT_C_GRID))?;
    let s = ctx.sim(&sim);
    let echo = ScanEcho {
        command: "scan",
        target: target_text,
        c_grid: grid.clone(),
        trials: pick(trials, f.trials, DEFAULT_TRIALS),
        seed0: pick(seed0, f.seed0, 0),
        tail_checkpoints: pick(tail_checkpoints, f.tail_checkpoints, 1),
        sim: s,
    };
    let result = phase_scan(
        &target,
        &grid,
        &settings(&s, echo.trials, echo.seed0, echo.tail_checkpoints),
        ctx.jobs,
    )?;
    let prov = Provenance::new(echo);
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.c),
                r.label.as_str().to_string(),
                r.status.clone(),
                r.trials.to_string(),
                opt_num(r.eventually_covered_fraction),
                opt_num(r.wilson_lo),
                opt_num(r.wilson_hi),
                opt_num(r.mean_last_failure_n),
                opt_num(r.mean_tail_uncovered_measure),
            ]
        })
        .collect();
    let csv = ctx.sink.csv(
        &prov,
        &[
            "c",
            "label",
            "status",
            "trials",
            "eventually_covered_fraction",
            "wilson_lo",
            "wilson_hi",
            "mean_last_failure_n",
            "mean_tail_uncovered_measure",
        ],
        &rows,
    )?;
    let json = ctx.sink.json(&prov, &result)?;
    let svg = ctx.sink.svg(&scan_svg(&result))?;
    for r in &result.rows {
        println!(
            "c = {:<8} {:<15} fraction = {}",
            r.c,
            r.label.as_str(),
            r.eventually_covered_fraction
                .map_or_else(|| format!("({})", r.status), |v| format!("{v:.3}"))
        );
    }
    if let Some(t) = result.transition {
        println!("empirical transition c* = {} ± {}", t.c_star, t.uncertainty);
    }
    if result.monotone_asserted && !result.monotone {
        println!("warning: fractions are not monotone in c");
    }
    println!("wrote {}, {} and {}", display(&csv), display(&json), display(&svg));
    match result.first_error().and_then(|r| r.error.clone()) {
        None => Ok(()),
        Some(e) => Err(CliError::from(e)),
    }
}

#[derive(Serialize)]
struct DimsEcho {
    command: &'static str,
    target: String,
    c_grid: Vec<f64>,
    trials: u64,
    seed0: u64,
    tail_checkpoints: usize,
    #[serde(flatten)]
    sim: SimResolved,
}

fn dims(
    ctx: &Ctx,
    sim: SimArgs,
    c_grid: Option<String>,
    trials: Option<u64>,
    seed0: Option<u64>,
    tail_checkpoints: Option<usize>,
) -> Result<(), CliError> {
    let f = &ctx.loaded.file;
    let (target_text, target) = ctx.target(sim.target.clone())?;
    let grid = ctx.c_grid(c_grid, None)?;
    let s = ctx.sim(&sim);
    let echo = DimsEcho {
        command: "dims",
        target: target_text,
        c_grid: grid.clone(),
        trials: pick(trials, f.trials, DEFAULT_DIMS_TRIALS),
        seed0: pick(seed0, f.seed0, 0),
        tail_checkpoints: pick(tail_checkpoints, f.tail_checkpoints, DEFAULT_DIMS_TAIL),
        sim: s,
    };
    let st = settings(&s, echo.trials, echo.seed0, echo.tail_checkpoints);
    let results = grid
        .iter()
        .map(|&c| uncovered_dimension_experiment(&target, c, &st, ctx.jobs))
        .collect::<Result<Vec<_>, _>>()?;
    let prov = Provenance::new(echo);
    let mut rows = Vec::new();
    for r in &results {
        for e in &r.estimates {
            rows.push(vec![
                num(r.c),
                e.seed.to_string(),
                num(e.estimate.slope),
                num(e.estimate.r_squared),
                e.estimate.degenerate.to_string(),
                num(e.uncovered_measure),
                e.pieces.to_string(),
                opt_num(r.floor),
            ]);
        }
    }
    let csv = ctx.sink.csv(
        &prov,
        &["c", "seed", "slope", "r_squared", "degenerate", "uncovered_measure", "pieces", "floor"],
        &rows,
    )?;
    let json = ctx.sink.json(&prov, &results)?;
    for r in &results {
        println!(
            "c = {}: mean slope {} over {} scales, floor {}{}",
            r.c,
            r.mean_slope.map_or("n/a".into(), |m| format!("{m:.4}")),
            r.scales.len(),
            r.floor.map_or("unknown".into(), |v| format!("{v:.4}")),
            if r.vacuous { " (bound vacuous)" } else { "" }
        );
    }
    println!("wrote {} and {}", display(&csv), display(&json));
    Ok(())
}

#[derive(Serialize)]
struct SeriesEcho {
    command: &'static str,
    lengths: String,
    beta: f64,
    d: f64,
    n: u64,
}

fn series(
    ctx: &Ctx,
    lengths: Option<String>,
    beta: Option<f64>,
    d: Option<f64>,
    n: Option<u64>,
) -> Result<(), CliError> {
    let f = &ctx.loaded.file;
    let (lengths_text, seq) = ctx.lengths(lengths)?;
    let echo = SeriesEcho {
        command: "series",
        lengths: lengths_text,
        beta: require(beta, f.beta, "beta")?,
        d: require(d, f.d, "d")?,
        n: pick(n, f.n, DEFAULT_SERIES_TERMS),
    };
    let theorem = theorem_series(&seq, echo.beta, echo.d, echo.n)?;
    let shepp = shepp_series(&seq, echo.n)?;
    let prov = Provenance::new(echo);
    let mut rows = Vec::new();
    for (name, rep) in [("theorem", &theorem), ("shepp", &shepp)] {
        for p in &rep.checkpoints {
            rows.push(vec![name.to_string(), p.n.to_string(), num(p.partial_sum), num(p.ln_partial_sum)]);
        }
    }
    let csv = ctx.sink.csv(&prov, &["series", "n", "partial_sum", "ln_partial_sum"], &rows)?;

    #[derive(Serialize)]
    struct Reports<'a> {
        theorem: &'a arccover::lengths::SeriesReport,
        shepp: &'a arccover::lengths::SeriesReport,
    }
    let json = ctx.sink.json(&prov, &Reports { theorem: &theorem, shepp: &shepp })?;
    for rep in [&theorem, &shepp] {
        println!(
            "{}: verdict {} (decay exponent {:.4}, last-decade share {:.3e})",
            rep.series, rep.verdict, rep.decay_exponent, rep.tail_share
        );
    }
    println!("wrote {} and {}", display(&csv), display(&json));
    Ok(())
}

#[derive(Serialize)]
struct ScheduleEcho {
    command: &'static str,
    lengths: String,
    alpha: f64,
    k: usize,
}

fn schedule(ctx: &Ctx, lengths: Option<String>, alpha: Option<f64>, k: Option<usize>) -> Result<(), CliError> {
    let f = &ctx.loaded.file;
    let (lengths_text, seq) = ctx.lengths(lengths)?;
    let echo = ScheduleEcho {
        command: "schedule",
        lengths: lengths_text,
        alpha: pick(alpha, f.alpha, DEFAULT_ALPHA),
        k: pick(k, f.k, DEFAULT_BLOCKS),
    };
    let sched = choose_schedule(&seq, echo.alpha, echo.k)?;
    let report = diagnose_schedule(&seq, &sched, echo.alpha)?;
    let prov = Provenance::new(echo);
    let mut partial = 0.0;
    let mut rows = Vec::new();
    for r in &report.rows {
        partial += r.r_term;
        rows.push(vec![
            r.k.to_string(),
            opt_int(r.end.as_u64()),
            num(r.end.ln()),
            num(r.ln_ell),
            num(r.r_term),
            num(partial),
            num(r.d_ratio),
        ]);
        println!(
            "k = {}: ln n_k = {:.6}, r_k = {:.3e}, partial sum {:.6}, D ratio {:.6}",
            r.k,
            r.end.ln(),
            r.r_term,
            partial,
            r.d_ratio
        );
    }
    let csv = ctx.sink.csv(
        &prov,
        &["k", "n", "ln_n", "ln_ell", "r_term", "r_partial_sum", "d_ratio"],
        &rows,
    )?;
    let json = ctx.sink.json(&prov, &report)?;
    println!(
        "sum of n_(k-1) l_(n_k)^alpha = {:.6}; max block-end D ratio {:.6}",
        report.r_sum, report.max_d_ratio
    );
    println!("wrote {} and {}", display(&csv), display(&json));
    Ok(())
}
