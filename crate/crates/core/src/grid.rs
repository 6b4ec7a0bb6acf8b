//! The grid of associated exponents `δ_s` sampled at `s = j·h`, `0 ≤ j ≤ 16/h`.
//!
//! Cells with `s ≤ 4` and `s ≥ 8` are pinned to the classical values (`0` and
//! `s/2 − 3` respectively); only the open band `4 < s < 8` is ever improved.
//! Off-grid arguments are answered by two-point linear interpolation, which is
//! legitimate for associated exponents because the exponent curve may always be
//! interpolated by Hölder's inequality.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::sig17;

/// Upper end of the stored range of moments.
pub const S_MAX: f64 = 16.0;

/// Coarsest step accepted for a seeded grid.
pub const MAX_STEP: f64 = 0.1;

/// Offsets within this distance (in units of cells) count as landing on a cell.
const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GridError {
    #[error("step {0} is not the reciprocal of a whole number")]
    StepNotReciprocal(f64),
    #[error("step {0} is coarser than the maximum step {MAX_STEP}")]
    StepTooCoarse(f64),
    #[error("moment {s} is outside [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("expected {expected} grid values, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("grid value at j={j} is not a finite non-negative number: {value}")]
    BadValue { j: usize, value: f64 },
    #[error("malformed grid file at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// The step `h` of a grid, stored through its reciprocal `1/h ∈ ℕ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct Step {
    per_unit: u32,
}

impl Step {
    pub fn new(per_unit: u32) -> Result<Self, GridError> {
        if per_unit == 0 {
            return Err(GridError::StepNotReciprocal(f64::INFINITY));
        }
        Ok(Self { per_unit })
    }

    /// Accepts `h` given as a real number whose reciprocal is (numerically) whole.
    pub fn from_h(h: f64) -> Result<Self, GridError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::StepNotReciprocal(h));
        }
        let recip = 1.0 / h;
        let whole = recip.round();
        if whole < 1.0 || whole > u32::MAX as f64 || (recip - whole).abs() > 1e-9 * whole {
            return Err(GridError::StepNotReciprocal(h));
        }
        Ok(Self {
            per_unit: whole as u32,
        })
    }

    /// Number of cells per unit of `s`, i.e. `1/h`.
    pub fn per_unit(self) -> u32 {
        self.per_unit
    }

    pub fn h(self) -> f64 {
        1.0 / f64::from(self.per_unit)
    }

    /// The largest index `J = ⌈16/h⌉`.
    pub fn last_index(self) -> usize {
        16 * self.per_unit as usize
    }

    /// Index of the cell sitting exactly at the whole number `k`.
    pub fn index_of_whole(self, k: usize) -> usize {
        k * self.per_unit as usize
    }

    pub fn s_at(self, j: usize) -> f64 {
        j as f64 / f64::from(self.per_unit)
    }

    /// Index of the grid multiple nearest to `s` (no range check).
    pub fn nearest_index(self, s: f64) -> usize {
        (s * f64::from(self.per_unit)).round().max(0.0) as usize
    }

    /// Index of `s` when `s` is a grid multiple up to rounding.
    pub fn exact_index(self, s: f64) -> Option<usize> {
        let x = s * f64::from(self.per_unit);
        let nearest = x.round();
        ((x - nearest).abs() <= SNAP_TOLERANCE && nearest >= 0.0).then_some(nearest as usize)
    }
}

impl From<Step> for f64 {
    fn from(step: Step) -> f64 {
        step.h()
    }
}

impl TryFrom<f64> for Step {
    type Error = GridError;

    fn try_from(h: f64) -> Result<Self, Self::Error> {
        Step::from_h(h)
    }
}

/// Starting values obtained from Hua's lemma, the sixth moment bound `δ_6 = 1/4`
/// and convexity.
pub fn seed_value(s: f64) -> f64 {
    0f64.max((s - 4.0) / 8.0)
        .max(0.375 * s - 2.0)
        .max(0.5 * s - 3.0)
}

/// `max(0, s/2 − 3)`: no associated exponent can lie below the diagonal contribution.
pub fn trivial_lower_bound(s: f64) -> f64 {
    (0.5 * s - 3.0).max(0.0)
}

/// The admissible exponent matching an associated one: `Δ_s = δ_s − s/2 + 3`.
pub fn admissible_from_associated(s: f64, delta: f64) -> f64 {
    delta + (3.0 - 0.5 * s)
}

pub fn associated_from_admissible(s: f64, admissible: f64) -> f64 {
    admissible - (3.0 - 0.5 * s)
}

/// A moment together with its associated and admissible exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple {
    pub s: f64,
    #[serde(rename = "delta")]
    pub associated: f64,
    #[serde(rename = "Delta")]
    pub admissible: f64,
}

impl ExponentTriple {
    pub fn from_associated(s: f64, associated: f64) -> Self {
        Self {
            s,
            associated,
            admissible: admissible_from_associated(s, associated),
        }
    }

    /// The permissible exponent `μ_s = s/2 + δ_s`.
    pub fn permissible(&self) -> f64 {
        0.5 * self.s + self.associated
    }
}

/// A violated grid invariant, as found by [`ExponentGrid::check_invariants`].
#[derive(Clone, Debug, PartialEq)]
pub enum InvariantViolation {
    BelowLowerBound { j: usize, value: f64, bound: f64 },
    PinnedCellMoved { j: usize, value: f64, expected: f64 },
    NotFinite { j: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentGrid {
    step: Step,
    values: Vec<f64>,
    sweeps: u64,
    converged: bool,
}

impl ExponentGrid {
    /// A fresh grid holding the convexity seed at every cell.
    pub fn seed(step: Step) -> Result<Self, GridError> {
        if step.h() > MAX_STEP + 1e-15 {
            return Err(GridError::StepTooCoarse(step.h()));
        }
        let values = (0..=step.last_index())
            .map(|j| seed_value(step.s_at(j)))
            .collect();
        Ok(Self {
            step,
            values,
            sweeps: 0,
            converged: false,
        })
    }

    /// Wraps arbitrary values. Only length and finiteness are checked, so this is
    /// also the way to build synthetic grids; see [`Self::check_invariants`].
    pub fn from_values(step: Step, values: Vec<f64>) -> Result<Self, GridError> {
        let expected = step.last_index() + 1;
        if values.len() != expected {
            return Err(GridError::WrongLength {
                expected,
                found: values.len(),
            });
        }
        if let Some((j, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(GridError::BadValue { j, value });
        }
        Ok(Self {
            step,
            values,
            sweeps: 0,
            converged: false,
        })
    }

    pub fn step(&self) -> Step {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn s_at(&self, j: usize) -> f64 {
        self.step.s_at(j)
    }

    pub fn delta_at(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Indices of the cells that the iteration may modify (`4 < s < 8`).
    pub fn free_cells(&self) -> std::ops::Range<usize> {
        self.step.index_of_whole(4) + 1..self.step.index_of_whole(8)
    }

    pub fn is_pinned(&self, j: usize) -> bool {
        !self.free_cells().contains(&j)
    }

    /// `δ_s` for any `0 ≤ s ≤ 16`; linear interpolation between neighbouring cells
    /// when `s` is not a grid multiple.
    pub fn query_delta(&self, s: f64) -> Result<f64, GridError> {
        if !(0.0..=S_MAX).contains(&s) {
            return Err(GridError::OutOfRange {
                s,
                lo: 0.0,
                hi: S_MAX,
            });
        }
        Ok(self.interpolate(s))
    }

    /// Unchecked version of [`Self::query_delta`]; `s` must lie in `[0, 16]`.
    pub(crate) fn interpolate(&self, s: f64) -> f64 {
        let x = s * f64::from(self.step.per_unit());
        let nearest = x.round();
        if (x - nearest).abs() <= SNAP_TOLERANCE {
            return self.values[nearest as usize];
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn to_triple(&self, s: f64) -> Result<ExponentTriple, GridError> {
        if !(4.0..=8.0).contains(&s) {
            return Err(GridError::OutOfRange {
                s,
                lo: 4.0,
                hi: 8.0,
            });
        }
        Ok(ExponentTriple::from_associated(s, self.interpolate(s)))
    }

    /// Every violated invariant; empty for a healthy grid.
    pub fn check_invariants(&self) -> Vec<InvariantViolation> {
        let free = self.free_cells();
        let mut out = Vec::new();
        for (j, &value) in self.values.iter().enumerate() {
            let s = self.s_at(j);
            if !value.is_finite() {
                out.push(InvariantViolation::NotFinite { j, value });
                continue;
            }
            let bound = trivial_lower_bound(s);
            if value < bound {
                out.push(InvariantViolation::BelowLowerBound { j, value, bound });
            }
            if !free.contains(&j) {
                let expected = if j < free.start { 0.0 } else { 0.5 * s - 3.0 };
                if value != expected {
                    out.push(InvariantViolation::PinnedCellMoved { j, value, expected });
                }
            }
        }
        out
    }

    pub(crate) fn set(&mut self, j: usize, value: f64) {
        self.values[j] = value;
    }

    pub(crate) fn finish_sweep(&mut self, converged: bool) {
        self.sweeps += 1;
        self.converged = converged;
    }

    /// Serialises the grid as CSV. `generated` is an optional provenance line
    /// (e.g. a timestamp) written as a leading comment.
    pub fn to_csv(&self, generated: Option<&str>) -> String {
        let mut out = String::with_capacity(self.values.len() * 48);
        if let Some(stamp) = generated {
            let _ = writeln!(out, "# generated={stamp}");
        }
        let _ = writeln!(out, "# h={}", self.step.h());
        let _ = writeln!(out, "# sweeps={}", self.sweeps);
        let _ = writeln!(out, "# converged={}", self.converged);
        out.push_str("j,s,delta\n");
        for (j, &value) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{j},{},{}", sig17(self.s_at(j)), sig17(value));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let mut step = None;
        let mut sweeps = 0;
        let mut converged = false;
        let mut values = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let parse_err = |reason: String| GridError::Parse {
                line: line_no,
                reason,
            };
            let line = raw.trim();
            if line.is_empty() || line == "j,s,delta" {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let Some((key, value)) = comment.trim().split_once('=') else {
                    continue;
                };
                let value = value.trim();
                match key.trim() {
                    "h" => {
                        let h: f64 = value
                            .parse()
                            .map_err(|_| parse_err(format!("bad step {value:?}")))?;
                        step = Some(Step::from_h(h)?);
                    }
                    "sweeps" => {
                        sweeps = value
                            .parse()
                            .map_err(|_| parse_err(format!("bad sweep count {value:?}")))?;
                    }
                    "converged" => {
                        converged = value
                            .parse()
                            .map_err(|_| parse_err(format!("bad flag {value:?}")))?;
                    }
                    _ => {}
                }
                continue;
            }
            let step = step.ok_or_else(|| parse_err("row before the `# h=` header".into()))?;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [j, s, delta] = fields[..] else {
                return Err(parse_err(format!(
                    "expected 3 fields, found {}",
                    fields.len()
                )));
            };
            let j: usize = j
                .parse()
                .map_err(|_| parse_err(format!("bad index {j:?}")))?;
            let s: f64 = s
                .parse()
                .map_err(|_| parse_err(format!("bad moment {s:?}")))?;
            let delta: f64 = delta
                .parse()
                .map_err(|_| parse_err(format!("bad exponent {delta:?}")))?;
            if j != values.len() {
                return Err(parse_err(format!(
                    "expected index {}, found {j}",
                    values.len()
                )));
            }
            if (s - step.s_at(j)).abs() > 1e-12 * (1.0 + s.abs()) {
                return Err(parse_err(format!("moment {s} does not match j/h")));
            }
            values.push(delta);
        }
        let step = step.ok_or(GridError::Parse {
            line: 0,
            reason: "missing `# h=` header".into(),
        })?;
        let mut grid = Self::from_values(step, values)?;
        grid.sweeps = sweeps;
        grid.converged = converged;
        Ok(grid)
    }
}
