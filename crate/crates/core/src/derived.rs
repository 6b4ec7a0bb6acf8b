//! Headline constants read off a converged grid, and table output.

use serde::Serialize;
use thiserror::Error;

use crate::format::{round_down, round_up};
use crate::grid::{admissible_from_associated, ExponentGrid, GridError};
use crate::rules::w_base_threshold;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DerivedError {
    #[error("grid has not converged (after {sweeps} sweeps); refusing to derive constants")]
    NotConverged { sweeps: u64 },
    #[error("no grid point t in [6, 8] satisfies (8 - t)/16 <= Delta_t <= 1/4")]
    NoFeasibleBase,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Constants derived from `δ_6` and from the minor-arc threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedReport {
    pub delta6: f64,
    /// Exponent in the lower bound for the count of sums of three cubes.
    pub beta: f64,
    /// `beta` truncated to 8 decimals.
    pub beta_display: String,
    /// Saving in the exceptional-set exponents; named apart from the inflation cushion.
    pub tau_unrep: f64,
    /// `1 / tau_unrep`; serialised as `null` when `tau_unrep` is zero.
    pub tau_unrep_reciprocal: f64,
    #[serde(rename = "E4_exponent")]
    pub e4_exponent: f64,
    #[serde(rename = "E5_exponent")]
    pub e5_exponent: f64,
    #[serde(rename = "E6_exponent")]
    pub e6_exponent: f64,
    /// Number of cubes beyond which the asymptotic formula holds.
    pub waring_threshold: f64,
    /// `waring_threshold` rounded up to 4 decimals.
    pub waring_threshold_display: String,
    pub waring_argmin: f64,
}

impl DerivedReport {
    /// Builds the report from `δ_6` and a precomputed threshold and argmin.
    pub fn from_parts(delta6: f64, waring_threshold: f64, waring_argmin: f64) -> Self {
        let beta = 1.0 - delta6 / 3.0;
        let tau_unrep = (2.0 / 7.0) * (0.25 - delta6);
        Self {
            delta6,
            beta,
            beta_display: round_down(beta, 8),
            tau_unrep,
            tau_unrep_reciprocal: 1.0 / tau_unrep,
            e4_exponent: 37.0 / 42.0 - tau_unrep,
            e5_exponent: 5.0 / 7.0 - tau_unrep,
            e6_exponent: 3.0 / 7.0 - 2.0 * tau_unrep,
            waring_threshold,
            waring_threshold_display: round_up(waring_threshold, 4),
            waring_argmin,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// All derived constants. Refuses grids that have not converged.
pub fn derive_all(grid: &ExponentGrid) -> Result<DerivedReport, DerivedError> {
    if !grid.is_converged() {
        return Err(DerivedError::NotConverged {
            sweeps: grid.sweeps(),
        });
    }
    let delta6 = grid.query_delta(6.0)?;
    let (threshold, argmin) = waring_threshold(grid)?;
    Ok(DerivedReport::from_parts(delta6, threshold, argmin))
}

/// Minimum of `t + 8Δ_t` over grid points `t ∈ [6, 8]` with
/// `(8 − t)/16 ≤ Δ_t ≤ 1/4`, and the smallest `t` attaining it.
pub fn waring_threshold(grid: &ExponentGrid) -> Result<(f64, f64), DerivedError> {
    let step = grid.step();
    let points =
        (step.index_of_whole(6)..=step.index_of_whole(8)).map(|j| (step.s_at(j), grid.delta_at(j)));
    waring_threshold_over(points)
}

/// As [`waring_threshold`], over arbitrary `(t, δ_t)` points in ascending `t`.
pub fn waring_threshold_over(
    points: impl IntoIterator<Item = (f64, f64)>,
) -> Result<(f64, f64), DerivedError> {
    let mut best: Option<(f64, f64)> = None;
    for (t, delta) in points {
        if !(6.0..=8.0).contains(&t) {
            continue;
        }
        if let Some(threshold) = w_base_threshold(t, delta) {
            if best.is_none_or(|(b, _)| threshold < b) {
                best = Some((threshold, t));
            }
        }
    }
    best.ok_or(DerivedError::NoFeasibleBase)
}

/// Label for a moment: shortest decimal, with `.0` for whole numbers.
pub fn format_moment(s: f64) -> String {
    let text = format!("{s}");
    if text.contains('.') {
        text
    } else {
        format!("{text}.0")
    }
}

/// One table row `s | δ_s | Δ_s` with both exponents rounded up to 8 decimals.
pub fn format_row(s: f64, delta: f64) -> String {
    let admissible = admissible_from_associated(s, delta);
    format!(
        "{} | {} | {}",
        format_moment(s),
        round_up(delta, 8),
        round_up(admissible, 8)
    )
}

/// Rows for each requested moment in `[4, 8]`.
pub fn emit_table(grid: &ExponentGrid, s_values: &[f64]) -> Result<Vec<String>, DerivedError> {
    s_values
        .iter()
        .map(|&s| {
            let triple = grid.to_triple(s)?;
            Ok(format_row(s, triple.associated))
        })
        .collect()
}

/// `4.0, 4.1, …, 7.9`.
pub fn table_moments() -> Vec<f64> {
    (40..80).map(|k| k as f64 / 10.0).collect()
}

/// The same rows as [`emit_table`] in `s,delta,Delta` CSV form.
pub fn table_csv(grid: &ExponentGrid, s_values: &[f64]) -> Result<String, DerivedError> {
    let mut out = String::from("s,delta,Delta\n");
    for row in emit_table(grid, s_values)? {
        out.push_str(&row.replace(" | ", ","));
        out.push('\n');
    }
    Ok(out)
}
