//! The exponent-update rules.
//!
//! Every rule is a pure function: a set of numeric hypotheses (guards) plus a
//! formula producing a candidate associated exponent. A failed guard is an
//! ordinary [`RuleOutcome::NotApplicable`] verdict; only malformed input (NaN,
//! negative exponents, impossible shifts) is an error.
//!
//! | kind | source of the estimate                                   |
//! |------|-----------------------------------------------------------|
//! | `A`  | the smooth-sum transfer bound with parameters `(t, γ)`    |
//! | `B6` | the hybrid sixth moment `∫|F²f⁴|` bound through `δ_t`     |
//! | `C`  | the bound through `δ_{s−2}` and `δ_{4(s−2)/3}`            |
//! | `L`  | midpoint convexity `δ_s ≤ (δ_{s−t} + δ_{s+t})/2`          |
//! | `W`  | the minor-arc amplification: `Δ_w = 0` beyond `s + 8Δ_s`  |

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{admissible_from_associated, ExponentGrid, GridError};

/// Upper limit of the transfer parameter `θ`.
pub const THETA_MAX: f64 = 1.0 / 3.0;

/// Slack when testing `t` against the admissible window of rule A.
pub const WINDOW_TOLERANCE: f64 = 1e-12;

const MIN_DENOMINATOR: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RuleKind {
    A,
    B6,
    C,
    L,
    W,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RuleKind::A => "A",
            RuleKind::B6 => "B6",
            RuleKind::C => "C",
            RuleKind::L => "L",
            RuleKind::W => "W",
        };
        f.write_str(name)
    }
}

/// A rule together with its parameters, ready to be evaluated against a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RuleSpec {
    A {
        t: f64,
        gamma: f64,
    },
    B6 {
        t: f64,
    },
    C,
    L {
        t: f64,
    },
    W {
        base: f64,
    },
    /// Rule W combined with convexity between the base point and the point where
    /// W starts to apply; see [`rule_w_chord`].
    WChord {
        base: f64,
    },
}

impl RuleSpec {
    pub fn kind(&self) -> RuleKind {
        match self {
            RuleSpec::A { .. } => RuleKind::A,
            RuleSpec::B6 { .. } => RuleKind::B6,
            RuleSpec::C => RuleKind::C,
            RuleSpec::L { .. } => RuleKind::L,
            RuleSpec::W { .. } | RuleSpec::WChord { .. } => RuleKind::W,
        }
    }

    /// Looks the required exponents up in `grid` (interpolating off-grid
    /// arguments) and applies the rule at moment `s`.
    pub fn evaluate(&self, s: f64, grid: &ExponentGrid) -> Result<RuleOutcome, RuleError> {
        match *self {
            RuleSpec::A { t, gamma } => rule_a(
                s,
                t,
                gamma,
                grid.query_delta(s - 2.0)?,
                grid.query_delta(t)?,
            ),
            RuleSpec::B6 { t } => {
                if s != 6.0 {
                    return Ok(RuleOutcome::not_applicable(
                        RuleKind::B6,
                        Guard::OrderOutOfRange {
                            s,
                            lo: 6.0,
                            hi: 6.0,
                        },
                    ));
                }
                rule_b6(t, grid.query_delta(t)?, grid.query_delta(6.0)?)
            }
            RuleSpec::C => rule_c(
                s,
                grid.query_delta(s - 2.0)?,
                grid.query_delta(4.0 * (s - 2.0) / 3.0)?,
            ),
            RuleSpec::L { t } => {
                if !(t < s) {
                    return Err(RuleError::ShiftTooLarge { s, t });
                }
                rule_l(s, t, grid.query_delta(s + t)?, grid.query_delta(s - t)?)
            }
            RuleSpec::W { base } => rule_w(s, base, grid.query_delta(base)?),
            RuleSpec::WChord { base } => rule_w_chord(s, base, grid.query_delta(base)?),
        }
    }
}

/// Malformed rule input; distinct from a failed hypothesis.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum RuleError {
    #[error("{name} is not finite")]
    NotFinite { name: &'static str },
    #[error("{name} = {value} is negative")]
    Negative { name: &'static str, value: f64 },
    #[error("shift t = {t} must satisfy 0 < t < s = {s}")]
    ShiftTooLarge { s: f64, t: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// The hypothesis that stopped a rule from applying.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Guard {
    /// The moment `s` lies outside the range the rule covers.
    OrderOutOfRange {
        s: f64,
        lo: f64,
        hi: f64,
    },
    GammaOutOfRange {
        gamma: f64,
    },
    /// `t` lies outside `[(2s−6+8γ)/(1+2γ), (2s−4)/(1+2γ)]`.
    WindowViolated {
        t: f64,
        lo: f64,
        hi: f64,
    },
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    ExponentTooLarge {
        name: &'static str,
        value: f64,
        limit: f64,
    },
    ExponentTooSmall {
        name: &'static str,
        value: f64,
        limit: f64,
    },
    DegenerateDenominator {
        value: f64,
    },
    /// W needs `s > t + 8Δ_t`.
    BelowThreshold {
        s: f64,
        threshold: f64,
    },
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::OrderOutOfRange { s, lo, hi } => write!(f, "s = {s} outside [{lo}, {hi}]"),
            Guard::GammaOutOfRange { gamma } => write!(f, "gamma = {gamma} outside [0, 1/4]"),
            Guard::WindowViolated { t, lo, hi } => write!(f, "t = {t} outside [{lo}, {hi}]"),
            Guard::ParameterOutOfRange {
                name,
                value,
                lo,
                hi,
            } => {
                write!(f, "{name} = {value} outside ({lo}, {hi}]")
            }
            Guard::ExponentTooLarge { name, value, limit } => {
                write!(f, "{name} = {value} exceeds {limit}")
            }
            Guard::ExponentTooSmall { name, value, limit } => {
                write!(f, "{name} = {value} is below {limit}")
            }
            Guard::DegenerateDenominator { value } => write!(f, "denominator {value} vanishes"),
            Guard::BelowThreshold { s, threshold } => {
                write!(f, "s = {s} does not exceed threshold {threshold}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum RuleOutcome {
    Candidate {
        kind: RuleKind,
        delta: f64,
        /// The clamped transfer parameter, for rules that have one (A and C).
        theta: Option<f64>,
    },
    NotApplicable {
        kind: RuleKind,
        guard: Guard,
    },
}

impl RuleOutcome {
    fn candidate(kind: RuleKind, delta: f64, theta: Option<f64>) -> Self {
        RuleOutcome::Candidate { kind, delta, theta }
    }

    fn not_applicable(kind: RuleKind, guard: Guard) -> Self {
        RuleOutcome::NotApplicable { kind, guard }
    }

    pub fn kind(&self) -> RuleKind {
        match self {
            RuleOutcome::Candidate { kind, .. } | RuleOutcome::NotApplicable { kind, .. } => *kind,
        }
    }

    pub fn is_applicable(&self) -> bool {
        matches!(self, RuleOutcome::Candidate { .. })
    }

    pub fn candidate_delta(&self) -> Option<f64> {
        match self {
            RuleOutcome::Candidate { delta, .. } => Some(*delta),
            RuleOutcome::NotApplicable { .. } => None,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            RuleOutcome::Candidate { theta, .. } => *theta,
            RuleOutcome::NotApplicable { .. } => None,
        }
    }

    pub fn violated_guard(&self) -> Option<&Guard> {
        match self {
            RuleOutcome::NotApplicable { guard, .. } => Some(guard),
            RuleOutcome::Candidate { .. } => None,
        }
    }
}

fn finite(name: &'static str, value: f64) -> Result<f64, RuleError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(RuleError::NotFinite { name })
    }
}

fn exponent(name: &'static str, value: f64) -> Result<f64, RuleError> {
    let value = finite(name, value)?;
    if value < 0.0 {
        return Err(RuleError::Negative { name, value });
    }
    Ok(value)
}

/// `δ_{s−2}(1−θ) + (s−2)θ/2`, the common shape of the A and C estimates.
fn transfer(s: f64, delta_sm2: f64, theta: f64) -> f64 {
    delta_sm2 * (1.0 - theta) + 0.5 * (s - 2.0) * theta
}

/// Rule A: the new associated exponent obtained from `δ_{s−2}` and `δ_t`,
/// for `0 ≤ γ ≤ 1/4` and `(2s−6+8γ)/(1+2γ) ≤ t ≤ (2s−4)/(1+2γ)`.
pub fn rule_a(
    s: f64,
    t: f64,
    gamma: f64,
    delta_sm2: f64,
    delta_t: f64,
) -> Result<RuleOutcome, RuleError> {
    let s = finite("s", s)?;
    let t = finite("t", t)?;
    let gamma = finite("gamma", gamma)?;
    let a = exponent("delta_{s-2}", delta_sm2)?;
    let b = exponent("delta_t", delta_t)?;
    let kind = RuleKind::A;

    if s < 4.0 {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::OrderOutOfRange {
                s,
                lo: 4.0,
                hi: f64::INFINITY,
            },
        ));
    }
    if !(0.0..=0.25).contains(&gamma) {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::GammaOutOfRange { gamma },
        ));
    }
    let lo = (2.0 * s - 6.0 + 8.0 * gamma) / (1.0 + 2.0 * gamma);
    let hi = (2.0 * s - 4.0) / (1.0 + 2.0 * gamma);
    if t < lo - WINDOW_TOLERANCE || t > hi + WINDOW_TOLERANCE {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::WindowViolated { t, lo, hi },
        ));
    }

    let shared = 2.0 * (s - 2.0) * b - 2.0 * t * a;
    let numerator = 2.0 * s - 4.0 - t + shared;
    let denominator = 6.0 * s - 12.0 + t - 4.0 * gamma * t + shared;
    if !(denominator > MIN_DENOMINATOR) {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::DegenerateDenominator { value: denominator },
        ));
    }
    let theta = (numerator / denominator).clamp(0.0, THETA_MAX);
    Ok(RuleOutcome::candidate(
        kind,
        transfer(s, a, theta),
        Some(theta),
    ))
}

/// The three closed-form specialisations of rule A.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Corollary {
    /// `t = 2s − 4`, `γ = 0` on `4 < s ≤ 5`.
    Doubled,
    /// `t = 6`, `γ = 0` on `5 ≤ s ≤ 6`.
    FromSix,
    /// `t = 6`, `γ = (s − 6)/2` on `6 ≤ s ≤ 13/2`.
    FromSixShifted,
}

impl Corollary {
    pub const ALL: [Corollary; 3] = [
        Corollary::Doubled,
        Corollary::FromSix,
        Corollary::FromSixShifted,
    ];

    /// The `(t, γ)` pair of rule A this corollary specialises.
    pub fn parameters(self, s: f64) -> (f64, f64) {
        match self {
            Corollary::Doubled => (2.0 * s - 4.0, 0.0),
            Corollary::FromSix => (6.0, 0.0),
            Corollary::FromSixShifted => (6.0, 0.5 * (s - 6.0)),
        }
    }

    /// Inclusive range of `s`, and whether the lower end is open.
    fn range(self) -> (f64, f64, bool) {
        match self {
            Corollary::Doubled => (4.0, 5.0, true),
            Corollary::FromSix => (5.0, 6.0, false),
            Corollary::FromSixShifted => (6.0, 6.5, false),
        }
    }
}

/// Evaluates a corollary's closed form with exponents read from `grid`.
pub fn rule_a_corollary(
    s: f64,
    variant: Corollary,
    grid: &ExponentGrid,
) -> Result<RuleOutcome, RuleError> {
    let s = finite("s", s)?;
    let kind = RuleKind::A;
    let (lo, hi, open_lo) = variant.range();
    if s > hi || s < lo || (open_lo && s == lo) {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::OrderOutOfRange { s, lo, hi },
        ));
    }
    match variant {
        Corollary::Doubled => {
            let d = exponent("delta_{2s-4}", grid.query_delta(2.0 * s - 4.0)?)?;
            if d > 2.0 {
                return Ok(RuleOutcome::not_applicable(
                    kind,
                    Guard::ExponentTooLarge {
                        name: "delta_{2s-4}",
                        value: d,
                        limit: 2.0,
                    },
                ));
            }
            let theta = d / (4.0 + d);
            Ok(RuleOutcome::candidate(
                kind,
                transfer(s, 0.0, theta),
                Some(theta),
            ))
        }
        Corollary::FromSix => {
            let d6 = exponent("delta_6", grid.query_delta(6.0)?)?;
            if d6 > 1.5 {
                return Ok(RuleOutcome::not_applicable(
                    kind,
                    Guard::ExponentTooLarge {
                        name: "delta_6",
                        value: d6,
                        limit: 1.5,
                    },
                ));
            }
            let theta = (s - 5.0 + (s - 2.0) * d6) / (3.0 * s - 3.0 + (s - 2.0) * d6);
            Ok(RuleOutcome::candidate(
                kind,
                transfer(s, 0.0, theta),
                Some(theta),
            ))
        }
        Corollary::FromSixShifted => {
            let a = exponent("delta_{s-2}", grid.query_delta(s - 2.0)?)?;
            let d6 = exponent("delta_6", grid.query_delta(6.0)?)?;
            if d6 > 0.5 {
                return Ok(RuleOutcome::not_applicable(
                    kind,
                    Guard::ExponentTooLarge {
                        name: "delta_6",
                        value: d6,
                        limit: 0.5,
                    },
                ));
            }
            if a > d6 {
                return Ok(RuleOutcome::not_applicable(
                    kind,
                    Guard::ExponentTooLarge {
                        name: "delta_{s-2}",
                        value: a,
                        limit: d6,
                    },
                ));
            }
            let theta =
                (s - 5.0 + (s - 2.0) * d6 - 6.0 * a) / (33.0 - 3.0 * s + (s - 2.0) * d6 - 6.0 * a);
            Ok(RuleOutcome::candidate(
                kind,
                transfer(s, a, theta),
                Some(theta),
            ))
        }
    }
}

/// Rule B6: a new sixth-moment exponent from `δ_t` (`4 < t ≤ 8`) and the current `δ_6`.
/// The same value bounds the hybrid mean value `∫|F(α)² f(α)⁴| dα ≪ P^{3+δ_6'+ε}`.
pub fn rule_b6(t: f64, delta_t: f64, delta_6: f64) -> Result<RuleOutcome, RuleError> {
    let t = finite("t", t)?;
    let dt = exponent("delta_t", delta_t)?;
    let d6 = exponent("delta_6", delta_6)?;
    let kind = RuleKind::B6;
    if !(t > 4.0 && t <= 8.0) {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::ParameterOutOfRange {
                name: "t",
                value: t,
                lo: 4.0,
                hi: 8.0,
            },
        ));
    }
    if d6 > 2.0 / 3.0 {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::ExponentTooLarge {
                name: "delta_6",
                value: d6,
                limit: 2.0 / 3.0,
            },
        ));
    }
    let limit = (t - 4.0) / 6.0;
    if dt > limit {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::ExponentTooLarge {
                name: "delta_t",
                value: dt,
                limit,
            },
        ));
    }
    let from_t = (8.0 - t + 8.0 * dt) / (24.0 + t + 8.0 * dt);
    let from_six = d6 / (4.0 + d6);
    Ok(RuleOutcome::candidate(
        kind,
        2.0 * from_t.max(from_six),
        None,
    ))
}

/// Rule C, with `delta_43` the exponent at the (usually off-grid) argument `4(s−2)/3`.
pub fn rule_c(s: f64, delta_sm2: f64, delta_43: f64) -> Result<RuleOutcome, RuleError> {
    let s = finite("s", s)?;
    let a = exponent("delta_{s-2}", delta_sm2)?;
    let b = exponent("delta_{4(s-2)/3}", delta_43)?;
    let kind = RuleKind::C;
    if !(s > 4.0) {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::OrderOutOfRange {
                s,
                lo: 4.0,
                hi: f64::INFINITY,
            },
        ));
    }
    if a > 0.25 {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::ExponentTooLarge {
                name: "delta_{s-2}",
                value: a,
                limit: 0.25,
            },
        ));
    }
    if b > 1.0 {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::ExponentTooLarge {
                name: "delta_{4(s-2)/3}",
                value: b,
                limit: 1.0,
            },
        ));
    }
    let theta = (1.0 + 3.0 * b - 4.0 * a) / (9.0 + 3.0 * b - 4.0 * a);
    debug_assert!(
        (0.0..=THETA_MAX + 1e-15).contains(&theta),
        "theta = {theta}"
    );
    Ok(RuleOutcome::candidate(
        kind,
        transfer(s, a, theta),
        Some(theta),
    ))
}

/// Rule L: midpoint convexity, `δ_s ≤ (δ_{s+t} + δ_{s−t})/2` for `0 < t < s`.
pub fn rule_l(s: f64, t: f64, delta_plus: f64, delta_minus: f64) -> Result<RuleOutcome, RuleError> {
    let s = finite("s", s)?;
    let t = finite("t", t)?;
    let plus = exponent("delta_{s+t}", delta_plus)?;
    let minus = exponent("delta_{s-t}", delta_minus)?;
    if !(t > 0.0 && t < s) {
        return Err(RuleError::ShiftTooLarge { s, t });
    }
    if !(s > 2.0) {
        return Ok(RuleOutcome::not_applicable(
            RuleKind::L,
            Guard::OrderOutOfRange {
                s,
                lo: 2.0,
                hi: f64::INFINITY,
            },
        ));
    }
    Ok(RuleOutcome::candidate(
        RuleKind::L,
        0.5 * (plus + minus),
        None,
    ))
}

/// The base-point hypotheses shared by the two W rules; on success returns
/// the threshold `t + 8Δ_t` beyond which `Δ = 0` holds.
fn w_threshold(base: f64, delta_base: f64) -> Result<f64, Guard> {
    if base < 6.0 {
        return Err(Guard::ParameterOutOfRange {
            name: "t_base",
            value: base,
            lo: 6.0,
            hi: f64::INFINITY,
        });
    }
    let admissible = admissible_from_associated(base, delta_base);
    let floor = (8.0 - base) / 16.0;
    if admissible < floor {
        return Err(Guard::ExponentTooSmall {
            name: "Delta_base",
            value: admissible,
            limit: floor,
        });
    }
    if admissible > 0.25 {
        return Err(Guard::ExponentTooLarge {
            name: "Delta_base",
            value: admissible,
            limit: 0.25,
        });
    }
    Ok(base + 8.0 * admissible)
}

/// `t + 8Δ_t` when `t` is an admissible base point for rule W, otherwise `None`.
pub fn w_base_threshold(base: f64, delta_base: f64) -> Option<f64> {
    if !(base.is_finite() && delta_base.is_finite()) {
        return None;
    }
    w_threshold(base, delta_base).ok()
}

/// Rule W: `δ_s = s/2 − 3` once `s > t_base + 8Δ_{t_base}`, provided
/// `(8 − t_base)/16 ≤ Δ_{t_base} ≤ 1/4` and `t_base ≥ 6`.
pub fn rule_w(s: f64, base: f64, delta_base: f64) -> Result<RuleOutcome, RuleError> {
    let s = finite("s", s)?;
    let base = finite("t_base", base)?;
    let delta_base = exponent("delta_base", delta_base)?;
    let kind = RuleKind::W;
    let threshold = match w_threshold(base, delta_base) {
        Ok(threshold) => threshold,
        Err(guard) => return Ok(RuleOutcome::not_applicable(kind, guard)),
    };
    if !(s > threshold) {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::BelowThreshold { s, threshold },
        ));
    }
    Ok(RuleOutcome::candidate(kind, 0.5 * s - 3.0, None))
}

/// Rule W closed under convexity. Between the base point `t` and the threshold
/// `u = t + 8Δ_t`, where `δ_u = u/2 − 3`, Hölder interpolation gives the chord
/// `δ_t + 3(s − t)/8`; beyond `u` this is rule W itself. Requires `s > t_base`.
pub fn rule_w_chord(s: f64, base: f64, delta_base: f64) -> Result<RuleOutcome, RuleError> {
    let s = finite("s", s)?;
    let base = finite("t_base", base)?;
    let delta_base = exponent("delta_base", delta_base)?;
    let kind = RuleKind::W;
    let threshold = match w_threshold(base, delta_base) {
        Ok(threshold) => threshold,
        Err(guard) => return Ok(RuleOutcome::not_applicable(kind, guard)),
    };
    if !(s > base) {
        return Ok(RuleOutcome::not_applicable(
            kind,
            Guard::OrderOutOfRange {
                s,
                lo: base,
                hi: f64::INFINITY,
            },
        ));
    }
    let diagonal = 0.5 * s - 3.0;
    let delta = if s > threshold {
        diagonal
    } else {
        (delta_base + 0.375 * (s - base)).max(diagonal)
    };
    Ok(RuleOutcome::candidate(kind, delta, None))
}
