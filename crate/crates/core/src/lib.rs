//! Associated exponents for mean values of smooth cubic Weyl sums.
//!
//! The crate keeps a grid of upper bounds `δ_s` for `0 ≤ s ≤ 16`, improves it by
//! repeated application of five update rules until nothing changes, and reads off
//! the resulting constants. A separate oracle counts solutions of the underlying
//! Diophantine equations exactly at small sizes.
//!
//! ```
//! use smooth_cubes::{run_to_convergence, IterationConfig, Mode, Step};
//!
//! let config = IterationConfig::new(Step::new(10).unwrap(), Mode::Dominant);
//! let run = run_to_convergence(&config).unwrap();
//! assert!(run.converged());
//! let delta6 = run.grid.query_delta(6.0).unwrap();
//! assert!(delta6 < 0.25);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod derived;
pub mod engine;
pub mod format;
pub mod grid;
pub mod oracle;
pub mod reference;
pub mod rules;

pub use derived::{derive_all, emit_table, waring_threshold, DerivedError, DerivedReport};
pub use engine::{
    dominant_schedule, full_scan_candidates, iterate, run_to_convergence, scheduled_candidate,
    sweep_once, EngineError, IterationConfig, Mode, Run, ScheduleEntry, SweepReport,
};
pub use grid::{ExponentGrid, ExponentTriple, GridError, Step};
pub use oracle::{
    hybrid_count, mean_value_even, slope_fit, smooth_set, MeanValueSample, OracleError,
    SmoothParams,
};
pub use rules::{RuleError, RuleKind, RuleOutcome, RuleSpec};
