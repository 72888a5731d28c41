//! Uniform random covering of the circle.
//!
//! Centers `ω_1, ω_2, …` are i.i.d. uniform on 𝕋 = ℝ/ℤ and
//! `E_n = ∪_{k ≤ n} B(ω_k, ℓ_n / 2)` uses the *current* length `ℓ_n` around
//! all of the first `n` centers. A set `A` is uniformly covered when it lies in
//! `E_n` for all large `n`.
//!
//! - [`torus`]: exact arc and interval-union geometry on the circle.
//! - [`targets`]: target sets with known dimensions and covering numbers.
//! - [`lengths`]: length sequences and their threshold diagnostics.
//! - [`simulate`]: seeded center streams and exact per-checkpoint coverage.
//! - [`analyze`]: phase scans and box-dimension estimates.

pub mod analyze;
pub mod error;
pub mod lengths;
pub mod simulate;
pub mod targets;
pub mod torus;

pub use error::{Error, Result};
pub use lengths::{Index, LengthSequence, Schedule};
pub use simulate::{CoverageTrace, TrialConfig};
pub use targets::{TargetSet, TargetSpec};
pub use torus::{Arc, Interval, IntervalUnion};
