//! Relaxation sweeps over the exponent grid.
//!
//! A sweep visits the free cells `4 < s < 8` in ascending order and updates them
//! in place, so later cells already see the improvements made earlier in the same
//! sweep. A candidate `c` replaces the stored value `δ` only when `c + τ < δ`, and
//! the stored value is then `c + τ`: the inflation `τ` swamps round-off and makes
//! every accepted step a strict decrease. Candidates that reach the diagonal bound
//! `s/2 − 3` are exact and are stored without inflation.
//!
//! Two strategies pick the candidates for a cell:
//!
//! * [`Mode::Dominant`] follows a fixed schedule of nine ranges of `s`, each with
//!   the process that dominates there, plus convexity closure (rule L). Cost per
//!   sweep is `O(h⁻¹ log h⁻¹)`.
//! * [`Mode::Full`] tries every rule over every admissible grid parameter. Cost per
//!   sweep is `O(h⁻²)`, so steps finer than `10⁻⁴` are refused unless explicitly
//!   allowed.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{trivial_lower_bound, ExponentGrid, GridError, Step};
use crate::rules::{
    rule_a, rule_b6, rule_c, rule_l, rule_w_chord, w_base_threshold, RuleError, RuleKind,
    RuleOutcome, RuleSpec,
};

pub const DEFAULT_TAU: f64 = 1e-9;
pub const DEFAULT_MAX_SWEEPS: u64 = 10_000;
pub const DEFAULT_EPS: f64 = 1e-13;

/// Finest step (as cells per unit) for which full mode runs without an override.
pub const FULL_MODE_FINEST_PER_UNIT: u32 = 10_000;

/// Base point used by the sixth-moment process at `s = 6`.
pub const HYBRID_BASE: f64 = 5.392938;

/// Boundaries of the dominant-process ranges inside `(4, 8)`.
pub const BREAKPOINTS: [f64; 7] = [5.0, 5.6462, 6.0, 6.081, 6.3395, 6.5, 7.06];

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "full mode at h = {h} costs O(h^-2) per sweep; steps finer than 1e-4 need allow_fine_full"
    )]
    CostGate { h: f64 },
    #[error("cell {j} is outside the free band 4 < s < 8")]
    NotFreeCell { j: usize },
    #[error("grid invariant broken after sweep {sweep}: {detail}")]
    InvariantBroken { sweep: u64, detail: String },
    #[error("no convergence after {sweeps} sweeps (last max improvement {max_improvement:e})")]
    NotConverged { sweeps: u64, max_improvement: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Dominant,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Dominant => "dominant",
        })
    }
}

impl FromStr for Mode {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "full" => Ok(Mode::Full),
            "dominant" => Ok(Mode::Dominant),
            other => Err(EngineError::InvalidConfig(format!(
                "unknown mode {other:?} (expected full or dominant)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub step: Step,
    /// Cushion added to every accepted update.
    pub inflation_tau: f64,
    pub max_sweeps: u64,
    /// A sweep whose largest improvement is below this counts as converged.
    pub convergence_eps: f64,
    pub mode: Mode,
    /// Full mode only: try every `γ = l·h` instead of the smallest feasible one.
    pub gamma_scan: bool,
    /// Lifts the cost gate on full mode for steps finer than `10⁻⁴`.
    pub allow_fine_full: bool,
}

impl IterationConfig {
    pub fn new(step: Step, mode: Mode) -> Self {
        Self {
            step,
            inflation_tau: DEFAULT_TAU,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            convergence_eps: DEFAULT_EPS,
            mode,
            gamma_scan: false,
            allow_fine_full: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.inflation_tau.is_finite() && self.inflation_tau >= 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "inflation_tau must be finite and >= 0, got {}",
                self.inflation_tau
            )));
        }
        if !(self.convergence_eps.is_finite() && self.convergence_eps > 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "convergence_eps must be finite and > 0, got {}",
                self.convergence_eps
            )));
        }
        if self.max_sweeps == 0 {
            return Err(EngineError::InvalidConfig("max_sweeps must be >= 1".into()));
        }
        if self.mode == Mode::Full
            && self.step.per_unit() > FULL_MODE_FINEST_PER_UNIT
            && !self.allow_fine_full
        {
            return Err(EngineError::CostGate { h: self.step.h() });
        }
        Ok(())
    }

    /// Reads `key=value` lines named after the fields (`step_h` for the step).
    /// Blank lines and `#` comments are ignored; absent keys keep their defaults.
    /// The step is required.
    pub fn from_key_values(text: &str) -> Result<Self, EngineError> {
        let mut step = None;
        let mut config = IterationConfig::new(Step::new(1)?, Mode::Dominant);
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                EngineError::InvalidConfig(format!("expected key=value, got {line:?}"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad =
                |what: &str| EngineError::InvalidConfig(format!("bad {what} value {value:?}"));
            match key {
                "step_h" | "h" => {
                    let h: f64 = value.parse().map_err(|_| bad(key))?;
                    step = Some(Step::from_h(h)?);
                }
                "inflation_tau" | "tau" => {
                    config.inflation_tau = value.parse().map_err(|_| bad(key))?
                }
                "max_sweeps" => config.max_sweeps = parse_count(value).ok_or_else(|| bad(key))?,
                "convergence_eps" | "eps" => {
                    config.convergence_eps = value.parse().map_err(|_| bad(key))?
                }
                "mode" => config.mode = value.parse()?,
                "gamma_scan" => config.gamma_scan = value.parse().map_err(|_| bad(key))?,
                "allow_fine_full" => {
                    config.allow_fine_full = value.parse().map_err(|_| bad(key))?
                }
                other => {
                    return Err(EngineError::InvalidConfig(format!("unknown key {other:?}")));
                }
            }
        }
        config.step =
            step.ok_or_else(|| EngineError::InvalidConfig("step_h is required".into()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "step_h={}\ninflation_tau={:e}\nmax_sweeps={}\nconvergence_eps={:e}\nmode={}\ngamma_scan={}\nallow_fine_full={}\n",
            self.step.h(),
            self.inflation_tau,
            self.max_sweeps,
            self.convergence_eps,
            self.mode,
            self.gamma_scan,
            self.allow_fine_full
        )
    }
}

/// Whole numbers written either plainly or in scientific notation (`1e4`).
fn parse_count(text: &str) -> Option<u64> {
    if let Ok(n) = text.parse::<u64>() {
        return Some(n);
    }
    let x: f64 = text.parse().ok()?;
    (x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64).then_some(x as u64)
}

/// What a range of the dominant schedule does at each of its cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Process {
    /// Rule A with `t = 2s − 4`, `γ = 0`.
    TransferDoubled,
    /// Rule A with `t = 6`, `γ = 0`.
    TransferFromSix,
    /// Rule A with `t = 6`, `γ = (s − 6)/2`.
    TransferFromSixShifted,
    /// Rule L anchored at the two ends of the range.
    Interpolate,
    /// Rule B6 with the given base point.
    HybridSixth { t: f64 },
    /// Rule C (plus convexity closure).
    Contraction,
    /// Rule W with the best base point found so far (plus convexity closure).
    MinorArc,
}

/// One range of the dominant schedule. `cells` holds the grid indices it owns
/// after snapping the bounds to the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry {
    pub s_lo: f64,
    pub s_hi: f64,
    pub cells: Range<usize>,
    pub process: Process,
}

impl ScheduleEntry {
    pub fn contains_cell(&self, j: usize) -> bool {
        self.cells.contains(&j)
    }

    /// The rules this entry applies at moment `s`, excluding the convexity
    /// closure that every entry also receives. The grid is consulted only for
    /// the W base point.
    pub fn rules_at(&self, s: f64, grid: &ExponentGrid) -> Vec<RuleSpec> {
        match self.process {
            Process::TransferDoubled => vec![RuleSpec::A {
                t: 2.0 * s - 4.0,
                gamma: 0.0,
            }],
            Process::TransferFromSix => vec![RuleSpec::A { t: 6.0, gamma: 0.0 }],
            Process::TransferFromSixShifted => vec![RuleSpec::A {
                t: 6.0,
                gamma: 0.5 * (s - 6.0),
            }],
            Process::Interpolate => {
                let t = (s - self.s_lo).min(self.s_hi - s);
                if t > 0.0 {
                    vec![RuleSpec::L { t }]
                } else {
                    Vec::new()
                }
            }
            Process::HybridSixth { t } => vec![RuleSpec::B6 { t }],
            Process::Contraction => vec![RuleSpec::C],
            Process::MinorArc => {
                let step = grid.step();
                let mut tracker = BaseTracker::default();
                for j in step.index_of_whole(6)..step.nearest_index(s).min(grid.values().len()) {
                    if step.s_at(j) < s {
                        tracker.observe(step.s_at(j), grid.delta_at(j));
                    }
                }
                tracker
                    .best
                    .map(|(base, _, _)| vec![RuleSpec::WChord { base }])
                    .unwrap_or_default()
            }
        }
    }
}

/// The nine ranges of the dominant schedule with bounds snapped to the grid.
pub fn dominant_schedule(step: Step) -> Vec<ScheduleEntry> {
    let snap = |s: f64| step.nearest_index(s);
    let four = step.index_of_whole(4);
    let eight = step.index_of_whole(8);
    let [b5, b56, b6, b608, b634, b65, b706] = BREAKPOINTS.map(snap);
    // (lo, hi) are half-open cell ranges [lo, hi)
    let spans = [
        (four + 1, b5 + 1, Process::TransferDoubled),
        (b5 + 1, b56 + 1, Process::TransferFromSix),
        (b56 + 1, b6, Process::Interpolate),
        (b6, b6 + 1, Process::HybridSixth { t: HYBRID_BASE }),
        (b6 + 1, b608 + 1, Process::Interpolate),
        (b608 + 1, b634 + 1, Process::TransferFromSixShifted),
        (b634 + 1, b65 + 1, Process::Interpolate),
        (b65 + 1, b706 + 1, Process::Contraction),
        (b706 + 1, eight, Process::MinorArc),
    ];
    let bounds = [four, b5, b56, b6, b6, b608, b634, b65, b706, eight];
    spans
        .into_iter()
        .enumerate()
        .map(|(k, (lo, hi, process))| ScheduleEntry {
            s_lo: step.s_at(bounds[k]),
            s_hi: step.s_at(bounds[k + 1]),
            cells: lo..hi.max(lo),
            process,
        })
        .collect()
}

/// Running minimum of `t + 8Δ_t` over admissible base points seen so far.
#[derive(Clone, Copy, Debug, Default)]
struct BaseTracker {
    /// `(t, δ_t, t + 8Δ_t)`
    best: Option<(f64, f64, f64)>,
}

impl BaseTracker {
    fn observe(&mut self, t: f64, delta: f64) {
        if let Some(threshold) = w_base_threshold(t, delta) {
            if self.best.is_none_or(|(_, _, b)| threshold < b) {
                self.best = Some((t, delta, threshold));
            }
        }
    }

    fn candidate(&self, s: f64) -> Result<Option<RuleOutcome>, RuleError> {
        match self.best {
            Some((base, delta, _)) => rule_w_chord(s, base, delta).map(Some),
            None => Ok(None),
        }
    }
}

/// Keeps the smallest applicable outcome. Candidates are compared after raising
/// them to the diagonal bound, so round-off below it cannot displace an exact hit.
struct Best {
    floor: f64,
    outcome: Option<RuleOutcome>,
}

impl Best {
    fn new(s: f64) -> Self {
        Self {
            floor: trivial_lower_bound(s),
            outcome: None,
        }
    }

    fn offer(&mut self, outcome: RuleOutcome) {
        if let Some(c) = outcome.candidate_delta() {
            if self.value().is_none_or(|b| c.max(self.floor) < b) {
                self.outcome = Some(outcome);
            }
        }
    }

    fn value(&self) -> Option<f64> {
        self.outcome
            .as_ref()
            .and_then(RuleOutcome::candidate_delta)
            .map(|c| c.max(self.floor))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub sweep_index: u64,
    pub max_improvement: f64,
    pub cells_changed: usize,
    pub converged: bool,
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sweep={} changed={} max_impr={:e}",
            self.sweep_index, self.cells_changed, self.max_improvement
        )
    }
}

/// A finished iteration: the final grid and one report per sweep.
#[derive(Clone, Debug)]
pub struct Run {
    pub grid: ExponentGrid,
    pub reports: Vec<SweepReport>,
}

impl Run {
    pub fn converged(&self) -> bool {
        self.reports.last().is_some_and(|r| r.converged)
    }

    /// The grid, or [`EngineError::NotConverged`] if the sweep budget ran out.
    pub fn into_converged(self) -> Result<ExponentGrid, EngineError> {
        if self.converged() {
            Ok(self.grid)
        } else {
            let last = self.reports.last();
            Err(EngineError::NotConverged {
                sweeps: self.reports.len() as u64,
                max_improvement: last.map_or(f64::INFINITY, |r| r.max_improvement),
            })
        }
    }

    pub fn sweep_log(&self) -> String {
        self.reports.iter().map(|r| format!("{r}\n")).collect()
    }
}

/// Shifts `m` (in cells) used by the convexity closure at cell `j`: the powers of
/// two up to one unit of `s`, plus the shifts reaching the entry's endpoints.
fn closure_shifts(
    j: usize,
    per_unit: usize,
    anchors: (usize, usize),
) -> impl Iterator<Item = usize> {
    let dyadic = std::iter::successors(Some(1usize), |m| m.checked_mul(2))
        .take_while(move |&m| m <= per_unit);
    let to_lo = j
        .checked_sub(anchors.0)
        .filter(|&m| m > 0 && m <= per_unit && !m.is_power_of_two());
    let to_hi = anchors
        .1
        .checked_sub(j)
        .filter(|&m| m > 0 && m <= per_unit && !m.is_power_of_two());
    dyadic.chain(to_lo).chain(to_hi)
}

fn closure_candidate(
    grid: &ExponentGrid,
    j: usize,
    anchors: (usize, usize),
    best: &mut Best,
) -> Result<(), RuleError> {
    let step = grid.step();
    let s = step.s_at(j);
    let values = grid.values();
    for m in closure_shifts(j, step.per_unit() as usize, anchors) {
        if m >= j || j + m >= values.len() {
            continue;
        }
        best.offer(rule_l(s, step.s_at(m), values[j + m], values[j - m])?);
    }
    Ok(())
}

fn primary_candidate(
    entry: &ScheduleEntry,
    grid: &ExponentGrid,
    j: usize,
    tracker: &BaseTracker,
    best: &mut Best,
) -> Result<(), RuleError> {
    let step = grid.step();
    let n = step.per_unit() as usize;
    let s = step.s_at(j);
    let values = grid.values();
    let delta_6 = values[6 * n];
    match entry.process {
        Process::TransferDoubled => best.offer(rule_a(
            s,
            2.0 * s - 4.0,
            0.0,
            values[j - 2 * n],
            values[2 * j - 4 * n],
        )?),
        Process::TransferFromSix => best.offer(rule_a(s, 6.0, 0.0, values[j - 2 * n], delta_6)?),
        Process::TransferFromSixShifted => {
            best.offer(rule_a(s, 6.0, 0.5 * (s - 6.0), values[j - 2 * n], delta_6)?)
        }
        Process::Interpolate => {}
        Process::HybridSixth { t } => best.offer(rule_b6(t, grid.interpolate(t), delta_6)?),
        Process::Contraction => best.offer(rule_c(
            s,
            values[j - 2 * n],
            grid.interpolate(4.0 * (s - 2.0) / 3.0),
        )?),
        Process::MinorArc => {
            if let Some(outcome) = tracker.candidate(s)? {
                best.offer(outcome);
            }
        }
    }
    Ok(())
}

fn dominant_best(
    entry: &ScheduleEntry,
    grid: &ExponentGrid,
    j: usize,
    tracker: &BaseTracker,
) -> Result<Best, RuleError> {
    let step = grid.step();
    let anchors = (
        step.nearest_index(entry.s_lo),
        step.nearest_index(entry.s_hi),
    );
    let mut best = Best::new(step.s_at(j));
    primary_candidate(entry, grid, j, tracker, &mut best)?;
    closure_candidate(grid, j, anchors, &mut best)?;
    Ok(best)
}

fn full_best(
    grid: &ExponentGrid,
    j: usize,
    tracker: &BaseTracker,
    config: &IterationConfig,
) -> Result<Best, RuleError> {
    let step = grid.step();
    let n = step.per_unit() as i64;
    let ji = j as i64;
    let s = step.s_at(j);
    let values = grid.values();
    let delta_sm2 = values[j - 2 * n as usize];
    let mut best = Best::new(s);

    // offered first so that W wins ties at the diagonal bound
    if let Some(outcome) = tracker.candidate(s)? {
        best.offer(outcome);
    }

    // Rule A over t = m·h. Over 0 ≤ γ ≤ 1/4 the window spans
    // [min(2s − 6, (2s − 4)/1.5), 2s − 4].
    let m_hi = 2 * ji - 4 * n;
    let m_lo = (2 * ji - 6 * n).min(2 * m_hi / 3).max(1);
    let l_max = n / 4;
    for m in m_lo..=m_hi {
        let t = step.s_at(m as usize);
        let delta_t = values[m as usize];
        if config.gamma_scan {
            for l in 0..=l_max {
                best.offer(rule_a(s, t, step.s_at(l as usize), delta_sm2, delta_t)?);
            }
        } else {
            // smallest l with (2s − 6 + 8γ) ≤ t(1 + 2γ)
            let l = if 2 * m > 8 * n {
                let num = n * (2 * ji - 6 * n - m);
                let den = 2 * m - 8 * n;
                if num <= 0 {
                    0
                } else {
                    (num + den - 1) / den
                }
            } else {
                0
            };
            if l <= l_max {
                best.offer(rule_a(s, t, step.s_at(l as usize), delta_sm2, delta_t)?);
            }
        }
    }

    if ji == 6 * n {
        for m in (4 * n + 1)..=(8 * n) {
            best.offer(rule_b6(
                step.s_at(m as usize),
                values[m as usize],
                values[j],
            )?);
        }
    }

    best.offer(rule_c(
        s,
        delta_sm2,
        grid.interpolate(4.0 * (s - 2.0) / 3.0),
    )?);

    for m in 1..=(n as usize) {
        best.offer(rule_l(s, step.s_at(m), values[j + m], values[j - m])?);
    }
    Ok(best)
}

fn tracker_below(grid: &ExponentGrid, j: usize) -> BaseTracker {
    let step = grid.step();
    let mut tracker = BaseTracker::default();
    for k in step.index_of_whole(6)..j {
        tracker.observe(step.s_at(k), grid.delta_at(k));
    }
    tracker
}

fn require_free(grid: &ExponentGrid, j: usize) -> Result<(), EngineError> {
    if grid.free_cells().contains(&j) {
        Ok(())
    } else {
        Err(EngineError::NotFreeCell { j })
    }
}

fn into_outcome(best: Best, s: f64) -> RuleOutcome {
    best.outcome.unwrap_or(RuleOutcome::NotApplicable {
        kind: RuleKind::L,
        guard: crate::rules::Guard::OrderOutOfRange {
            s,
            lo: 4.0,
            hi: 8.0,
        },
    })
}

/// The best candidate every rule can offer at cell `j`, scanning all grid
/// parameters as full mode does. Does not modify the grid.
pub fn full_scan_candidates(
    grid: &ExponentGrid,
    j: usize,
    config: &IterationConfig,
) -> Result<RuleOutcome, EngineError> {
    require_free(grid, j)?;
    let tracker = tracker_below(grid, j);
    Ok(into_outcome(
        full_best(grid, j, &tracker, config)?,
        grid.s_at(j),
    ))
}

/// The best candidate the dominant schedule offers at cell `j`, including the
/// convexity closure. Does not modify the grid.
pub fn scheduled_candidate(grid: &ExponentGrid, j: usize) -> Result<RuleOutcome, EngineError> {
    require_free(grid, j)?;
    let schedule = dominant_schedule(grid.step());
    let entry = schedule
        .iter()
        .find(|e| e.contains_cell(j))
        .expect("schedule covers every free cell");
    let tracker = tracker_below(grid, j);
    Ok(into_outcome(
        dominant_best(entry, grid, j, &tracker)?,
        grid.s_at(j),
    ))
}

/// One in-place ascending sweep over the free cells.
pub fn sweep_once(
    grid: &mut ExponentGrid,
    config: &IterationConfig,
) -> Result<SweepReport, EngineError> {
    config.validate()?;
    if grid.step() != config.step {
        return Err(EngineError::InvalidConfig(format!(
            "grid step {} differs from configured step {}",
            grid.step().h(),
            config.step.h()
        )));
    }
    let step = grid.step();
    let six = step.index_of_whole(6);
    let schedule = match config.mode {
        Mode::Dominant => dominant_schedule(step),
        Mode::Full => Vec::new(),
    };
    let mut entry_idx = 0;
    let mut tracker = BaseTracker::default();
    let mut max_improvement = 0.0f64;
    let mut cells_changed = 0;

    for j in grid.free_cells() {
        let s = step.s_at(j);
        let best = match config.mode {
            Mode::Dominant => {
                while !schedule[entry_idx].contains_cell(j) {
                    entry_idx += 1;
                }
                dominant_best(&schedule[entry_idx], grid, j, &tracker)?
            }
            Mode::Full => full_best(grid, j, &tracker, config)?,
        };
        if let Some(candidate) = best.value() {
            let floor = trivial_lower_bound(s);
            let proposed = if candidate <= floor {
                floor
            } else {
                candidate + config.inflation_tau
            };
            let current = grid.delta_at(j);
            if proposed < current {
                max_improvement = max_improvement.max(current - proposed);
                cells_changed += 1;
                grid.set(j, proposed);
            }
        }
        if j >= six {
            tracker.observe(s, grid.delta_at(j));
        }
    }

    let converged = max_improvement < config.convergence_eps;
    grid.finish_sweep(converged);
    Ok(SweepReport {
        sweep_index: grid.sweeps(),
        max_improvement,
        cells_changed,
        converged,
    })
}

/// Sweeps an existing grid until convergence or until `max_sweeps` sweeps have
/// been made. Grid invariants are checked after every sweep.
pub fn iterate(
    grid: &mut ExponentGrid,
    config: &IterationConfig,
) -> Result<Vec<SweepReport>, EngineError> {
    config.validate()?;
    let mut reports = Vec::new();
    for _ in 0..config.max_sweeps {
        let report = sweep_once(grid, config)?;
        reports.push(report);
        if let Some(violation) = grid.check_invariants().first() {
            return Err(EngineError::InvariantBroken {
                sweep: report.sweep_index,
                detail: format!("{violation:?}"),
            });
        }
        if report.converged {
            break;
        }
    }
    Ok(reports)
}

/// Seeds a grid and iterates it. Running out of sweeps is not an error here;
/// check [`Run::converged`] or use [`Run::into_converged`].
pub fn run_to_convergence(config: &IterationConfig) -> Result<Run, EngineError> {
    config.validate()?;
    let mut grid = ExponentGrid::seed(config.step)?;
    let reports = iterate(&mut grid, config)?;
    Ok(Run { grid, reports })
}

/// A grid point where two grids disagree by more than a tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub s: f64,
    pub first: f64,
    pub second: f64,
}

impl Discrepancy {
    pub fn gap(&self) -> f64 {
        (self.first - self.second).abs()
    }
}

/// Compares two grids at the given moments and lists the points differing by more than `tol`.
pub fn discrepancies(
    first: &ExponentGrid,
    second: &ExponentGrid,
    moments: &[f64],
    tol: f64,
) -> Result<Vec<Discrepancy>, GridError> {
    let mut out = Vec::new();
    for &s in moments {
        let (a, b) = (first.query_delta(s)?, second.query_delta(s)?);
        if (a - b).abs() > tol {
            out.push(Discrepancy {
                s,
                first: a,
                second: b,
            });
        }
    }
    Ok(out)
}
