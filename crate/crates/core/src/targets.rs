//! Target sets `A ⊂ 𝕋` with an interval-union approximation, their dimensions
//! and a covering-number function `N(ε)` (length-ε intervals).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{Interval, IntervalUnion};

/// Largest Cantor depth we materialize (2^depth pieces).
pub const MAX_CANTOR_DEPTH: u32 = 24;

/// Constant in the construction-time check `N(ε) ≤ C·⌈ε^{-β}⌉` for custom sets.
pub const CUSTOM_COVERING_CONSTANT: u64 = 4;

/// An experiment is trusted on a Cantor pre-fractal only while its finest
/// length exceeds this multiple of the pre-fractal resolution.
pub const PREFRACTAL_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    Circle,
    Cantor { ratio: f64, depth: u32 },
    Finite { points: Vec<f64> },
    Custom { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    kind: TargetKind,
    approx: IntervalUnion,
    dim_h: Option<f64>,
    dim_b_upper: f64,
}

impl TargetSet {
    /// `A = 𝕋`.
    pub fn circle() -> Self {
        TargetSet {
            kind: TargetKind::Circle,
            approx: IntervalUnion::full(),
            dim_h: Some(1.0),
            dim_b_upper: 1.0,
        }
    }

    /// Depth-`depth` pre-fractal of the symmetric Cantor set keeping two
    /// sub-blocks of relative length `ratio` at each step.
    pub fn cantor(ratio: f64, depth: u32) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 0.5) {
            return Err(Error::invalid("ratio", format!("{ratio} not in (0, 1/2)")));
        }
        if depth < 1 {
            return Err(Error::invalid("depth", "must be at least 1"));
        }
        if depth > MAX_CANTOR_DEPTH {
            return Err(Error::invalid(
                "depth",
                format!("{depth} exceeds {MAX_CANTOR_DEPTH} (2^depth pieces are materialized)"),
            ));
        }
        let mut lefts = vec![0.0_f64];
        let mut len = 1.0_f64;
        for _ in 0..depth {
            let shift = (1.0 - ratio) * len;
            lefts = lefts.iter().flat_map(|&a| [a, a + shift]).collect();
            len *= ratio;
        }
        let pieces = lefts.into_iter().map(|a| Interval::raw(a, (a + len).min(1.0)));
        let dim = std::f64::consts::LN_2 / (1.0 / ratio).ln();
        Ok(TargetSet {
            kind: TargetKind::Cantor { ratio, depth },
            approx: IntervalUnion::from_intervals(pieces),
            dim_h: Some(dim),
            dim_b_upper: dim,
        })
    }

    /// A finite set of distinct points.
    pub fn finite(points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "empty point list"));
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("points", "points must be distinct"));
        }
        if let Some(p) = sorted.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::invalid("points", format!("{p} not in [0, 1)")));
        }
        Ok(TargetSet {
            kind: TargetKind::Finite { points: sorted },
            approx: IntervalUnion::from_points(points)?,
            dim_h: Some(0.0),
            dim_b_upper: 0.0,
        })
    }

    /// A user-supplied union with an asserted upper box dimension `beta`.
    pub fn custom(approx: IntervalUnion, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid("beta", format!("{beta} not in [0, 1]")));
        }
        if approx.is_empty() {
            return Err(Error::invalid("intervals", "custom target is empty"));
        }
        let target = TargetSet {
            kind: TargetKind::Custom { beta },
            approx,
            dim_h: None,
            dim_b_upper: beta,
        };
        target.check_covering_bound()?;
        Ok(target)
    }

    fn check_covering_bound(&self) -> Result<()> {
        let finest = self
            .approx
            .pieces()
            .iter()
            .map(Interval::len)
            .filter(|&l| l > 0.0)
            .fold(f64::INFINITY, f64::min)
            .max(2f64.powi(-30));
        let mut eps = 0.5;
        while eps >= finest {
            let n = self.covering_number(eps);
            let bound = CUSTOM_COVERING_CONSTANT * eps.powf(-self.dim_b_upper).ceil() as u64;
            if n > bound {
                return Err(Error::invalid(
                    "beta",
                    format!(
                        "N({eps:e}) = {n} exceeds {CUSTOM_COVERING_CONSTANT}·ε^-{} = {bound}",
                        self.dim_b_upper
                    ),
                ));
            }
            eps /= 2.0;
        }
        Ok(())
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn approx(&self) -> &IntervalUnion {
        &self.approx
    }

    pub fn dim_h(&self) -> Option<f64> {
        self.dim_h
    }

    pub fn dim_b_upper(&self) -> f64 {
        self.dim_b_upper
    }

    /// Resolution of the approximation, when it is a stand-in for a finer set.
    pub fn resolution(&self) -> Option<f64> {
        match self.kind {
            TargetKind::Cantor { ratio, depth } => Some(ratio.powi(depth as i32)),
            _ => None,
        }
    }

    /// Rejects experiments whose finest length `ell_min` is not well above
    /// the pre-fractal resolution.
    pub fn check_resolution(&self, ell_min: f64) -> Result<()> {
        if let Some(res) = self.resolution() {
            if ell_min <= res * PREFRACTAL_MARGIN {
                return Err(Error::invalid(
                    "target",
                    format!(
                        "pre-fractal too coarse for horizon: ell_n_max = {ell_min:e} <= {PREFRACTAL_MARGIN}·ratio^depth = {:e}",
                        res * PREFRACTAL_MARGIN
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Number of length-`eps` intervals needed to cover the set.
    ///
    /// Exact for the circle and the Cantor set; greedy left-to-right sweep
    /// over the approximation otherwise.
    ///
    /// # Panics
    /// If `eps` is not positive.
    pub fn covering_number(&self, eps: f64) -> u64 {
        assert!(eps > 0.0, "covering scale must be positive, got {eps}");
        match self.kind {
            TargetKind::Circle => (1.0 / eps - 1e-9).ceil().max(1.0) as u64,
            TargetKind::Cantor { ratio, depth } => {
                if eps >= 1.0 {
                    return 1;
                }
                // smallest j with ratio^j <= eps
                let j = (eps.ln() / ratio.ln() - 1e-9).ceil().max(0.0) as u32;
                if j <= depth {
                    1u64 << j
                } else {
                    let res = ratio.powi(depth as i32);
                    (1u64 << depth) * (res / eps - 1e-9).ceil() as u64
                }
            }
            _ => greedy_cover_count(&self.approx, eps),
        }
    }

    /// Specification-string form, e.g. `cantor:0.333333:14`.
    pub fn describe(&self) -> String {
        match &self.kind {
            TargetKind::Circle => "circle".into(),
            TargetKind::Cantor { ratio, depth } => format!("cantor:{ratio}:{depth}"),
            TargetKind::Finite { points } => {
                let list: Vec<String> = points.iter().map(|p| p.to_string()).collect();
                format!("points:{}", list.join(","))
            }
            TargetKind::Custom { beta } => {
                format!("custom[{} pieces, beta={beta}]", self.approx.len())
            }
        }
    }
}

fn greedy_cover_count(u: &IntervalUnion, eps: f64) -> u64 {
    let mut count = 0u64;
    let mut reach = f64::NEG_INFINITY;
    for p in u.pieces() {
        if p.hi <= reach {
            continue;
        }
        if p.lo > reach {
            count += 1;
            reach = p.lo + eps;
        }
        if p.hi > reach {
            let extra = ((p.hi - reach) / eps).ceil();
            count += extra as u64;
            reach += extra * eps;
        }
    }
    count
}

/// On-disk format of a `custom:<file.json>` target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomTargetFile {
    pub intervals: Vec<[f64; 2]>,
    pub beta: f64,
}

impl CustomTargetFile {
    pub fn into_target(self) -> Result<TargetSet> {
        let pairs: Vec<(f64, f64)> = self.intervals.iter().map(|p| (p[0], p[1])).collect();
        TargetSet::custom(IntervalUnion::from_pairs(&pairs)?, self.beta)
    }
}

/// Parsed target specification string.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Circle,
    Cantor { ratio: f64, depth: u32 },
    Points(Vec<f64>),
    Custom(PathBuf),
}

impl TargetSpec {
    /// Builds the target; `custom` specs read their JSON file relative to `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<TargetSet> {
        match self {
            TargetSpec::Circle => Ok(TargetSet::circle()),
            TargetSpec::Cantor { ratio, depth } => TargetSet::cantor(*ratio, *depth),
            TargetSpec::Points(p) => TargetSet::finite(p),
            TargetSpec::Custom(path) => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::invalid("target", format!("cannot read {}: {e}", path.display()))
                })?;
                let file: CustomTargetFile = serde_json::from_str(&text).map_err(|e| {
                    Error::invalid("target", format!("bad custom target {}: {e}", path.display()))
                })?;
                file.into_target()
            }
        }
    }
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::invalid("target", format!("{s:?}: {why}"));
        let mut parts = s.splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let rest = parts.next();
        match (head, rest) {
            ("circle", None) => Ok(TargetSpec::Circle),
            ("cantor", Some(rest)) => {
                let (r, d) = rest
                    .split_once(':')
                    .ok_or_else(|| bad("expected cantor:<ratio>:<depth>"))?;
                let ratio = r.parse().map_err(|_| bad("ratio is not a number"))?;
                let depth = d.parse().map_err(|_| bad("depth is not an integer"))?;
                Ok(TargetSpec::Cantor { ratio, depth })
            }
            ("points", Some(rest)) => {
                let pts = rest
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad("points must be comma-separated numbers"))?;
                Ok(TargetSpec::Points(pts))
            }
            ("custom", Some(path)) if !path.is_empty() => Ok(TargetSpec::Custom(path.into())),
            _ => Err(bad("expected circle, cantor:<r>:<k>, points:<p,...> or custom:<file.json>")),
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Circle => write!(f, "circle"),
            TargetSpec::Cantor { ratio, depth } => write!(f, "cantor:{ratio}:{depth}"),
            TargetSpec::Points(p) => {
                let list: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "points:{}", list.join(","))
            }
            TargetSpec::Custom(path) => write!(f, "custom:{}", path.display()),
        }
    }
}
