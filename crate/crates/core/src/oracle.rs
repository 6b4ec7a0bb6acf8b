//! Exact solution counts for small cubic mean values.
//!
//! By orthogonality the even moments of a smooth cubic Weyl sum count solutions
//! of `x₁³ + … + x_k³ = y₁³ + … + y_k³` with every variable `R`-smooth and at most
//! `P`. The counts here are exact integers: the number of representations `r(n)`
//! of each cube sum `n` is tabulated, and the count is `Σ r(n)²`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Largest `P` accepted by [`smooth_set`].
pub const MAX_P: u64 = 10_000_000;

/// Largest number of tuples any single count may enumerate.
pub const WORK_LIMIT: u128 = 1_000_000_000;

pub const MAX_K: u32 = 4;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("need P >= 1 and R >= 2, got P = {p}, R = {r}")]
    InvalidParams { p: u64, r: u64 },
    #[error("P = {p} exceeds the sieve limit {MAX_P}")]
    SieveTooLarge { p: u64 },
    #[error("moment parameter k = {k} outside 1..={MAX_K}")]
    InvalidMoment { k: u32 },
    #[error("{what} would enumerate about {work} tuples, over the limit {WORK_LIMIT}")]
    CostGate { what: &'static str, work: u128 },
    #[error("solution count overflowed 64 bits")]
    Overflow,
    #[error("slope fit needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("slope fit needs distinct P values; P = {0} repeats")]
    RepeatedP(u64),
    #[error("slope fit needs samples of a single moment")]
    MixedMoments,
    #[error("slope fit needs positive counts and P >= 2")]
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SmoothParams {
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(rename = "R")]
    pub r: u64,
}

impl SmoothParams {
    pub fn new(p: u64, r: u64) -> Result<Self, OracleError> {
        if p < 1 || r < 2 {
            return Err(OracleError::InvalidParams { p, r });
        }
        Ok(Self { p, r })
    }
}

/// Which equation a sample counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Moment {
    /// `2k`-th moment: `k` smooth cubes on each side.
    Even { k: u32 },
    /// One unrestricted cube plus two smooth cubes on each side.
    Hybrid,
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Moment::Even { k } => write!(f, "{k}"),
            Moment::Hybrid => f.write_str("hybrid"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MeanValueSample {
    pub params: SmoothParams,
    pub moment: Moment,
    pub count: u64,
    pub smooth_set_size: u64,
}

impl MeanValueSample {
    pub const CSV_HEADER: &'static str = "P,R,k_or_hybrid,set_size,count";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.params.p, self.params.r, self.moment, self.smooth_set_size, self.count
        )
    }
}

/// How `R` is chosen from `P` in a slope series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RPolicy {
    /// `R = P`: every integer up to `P` is allowed.
    EqualP,
    Fixed(u64),
    /// `R = ⌈√P⌉`, at least 2.
    Sqrt,
}

impl RPolicy {
    pub fn r_for(self, p: u64) -> u64 {
        match self {
            RPolicy::EqualP => p.max(2),
            RPolicy::Fixed(r) => r,
            RPolicy::Sqrt => {
                let mut root = (p as f64).sqrt() as u64;
                while root * root > p {
                    root -= 1;
                }
                if root * root < p {
                    root += 1;
                }
                root.max(2)
            }
        }
    }
}

impl fmt::Display for RPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RPolicy::EqualP => f.write_str("r-eq-p"),
            RPolicy::Fixed(r) => write!(f, "fixed({r})"),
            RPolicy::Sqrt => f.write_str("sqrt"),
        }
    }
}

/// The integers in `[1, P]` with no prime factor above `R`, ascending.
pub fn smooth_set(params: SmoothParams) -> Result<Vec<u64>, OracleError> {
    let SmoothParams { p, r } = params;
    if p > MAX_P {
        return Err(OracleError::SieveTooLarge { p });
    }
    if r >= p {
        return Ok((1..=p).collect());
    }
    // largest prime factor of each n; primes are visited in increasing order so
    // the last write wins
    let n = p as usize;
    let mut largest = vec![0u32; n + 1];
    largest[1] = 1;
    for q in 2..=n {
        if largest[q] == 0 {
            for m in (q..=n).step_by(q) {
                largest[m] = q as u32;
            }
        }
    }
    Ok((1..=n)
        .filter(|&m| u64::from(largest[m]) <= r)
        .map(|m| m as u64)
        .collect())
}

fn check_k(k: u32) -> Result<(), OracleError> {
    if (1..=MAX_K).contains(&k) {
        Ok(())
    } else {
        Err(OracleError::InvalidMoment { k })
    }
}

fn gate(what: &'static str, work: u128) -> Result<(), OracleError> {
    if work > WORK_LIMIT {
        Err(OracleError::CostGate { what, work })
    } else {
        Ok(())
    }
}

fn pow_u128(base: u128, exp: u32) -> u128 {
    base.checked_pow(exp).unwrap_or(u128::MAX)
}

fn cube(x: u64) -> u128 {
    let x = u128::from(x);
    x * x * x
}

/// `Σ w²` over groups of equal keys, where `w` is the summed weight of a group.
fn sum_of_squared_weights(mut entries: Vec<(u128, u64)>) -> Result<u64, OracleError> {
    entries.par_sort_unstable_by_key(|e| e.0);
    let mut total: u64 = 0;
    let mut i = 0;
    while i < entries.len() {
        let key = entries[i].0;
        let mut weight: u64 = 0;
        while i < entries.len() && entries[i].0 == key {
            weight = weight
                .checked_add(entries[i].1)
                .ok_or(OracleError::Overflow)?;
            i += 1;
        }
        let square = weight.checked_mul(weight).ok_or(OracleError::Overflow)?;
        total = total.checked_add(square).ok_or(OracleError::Overflow)?;
    }
    Ok(total)
}

/// Cube sums of the non-decreasing `k`-tuples whose first element has index
/// `first`, each weighted by its number of distinct orderings `k!/∏ cᵢ!`.
fn multiset_sums(cubes: &[u128], k: u32, first: usize, out: &mut Vec<(u128, u64)>) {
    // `run` is the length of the trailing run of equal elements; the pushed
    // weight is the product of the factorials of all run lengths
    fn rec(
        cubes: &[u128],
        remaining: u32,
        last: usize,
        sum: u128,
        run: u64,
        repeats: u64,
        out: &mut Vec<(u128, u64)>,
    ) {
        if remaining == 0 {
            out.push((sum, repeats));
            return;
        }
        for i in last..cubes.len() {
            let run = if i == last { run + 1 } else { 1 };
            rec(
                cubes,
                remaining - 1,
                i,
                sum + cubes[i],
                run,
                repeats * run,
                out,
            );
        }
    }
    let start = out.len();
    rec(cubes, k - 1, first, cubes[first], 1, 1, out);
    let k_factorial: u64 = (1..=u64::from(k)).product();
    for entry in &mut out[start..] {
        entry.1 = k_factorial / entry.1;
    }
}

/// Exact count of `x₁³ + … + x_k³ = y₁³ + … + y_k³` over the smooth set.
pub fn mean_value_even(params: SmoothParams, k: u32) -> Result<MeanValueSample, OracleError> {
    check_k(k)?;
    let set = smooth_set(params)?;
    gate("mean value", pow_u128(set.len() as u128, k))?;
    let cubes: Vec<u128> = set.iter().map(|&x| cube(x)).collect();
    let entries: Vec<(u128, u64)> = (0..set.len())
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut out = Vec::new();
            multiset_sums(&cubes, k, first, &mut out);
            out
        })
        .collect();
    Ok(MeanValueSample {
        params,
        moment: Moment::Even { k },
        count: sum_of_squared_weights(entries)?,
        smooth_set_size: set.len() as u64,
    })
}

/// The same count as [`mean_value_even`] by direct enumeration of all `2k`-tuples.
pub fn mean_value_even_naive(params: SmoothParams, k: u32) -> Result<u64, OracleError> {
    check_k(k)?;
    let set = smooth_set(params)?;
    gate("naive mean value", pow_u128(set.len() as u128, 2 * k))?;
    let cubes: Vec<i128> = set.iter().map(|&x| cube(x) as i128).collect();
    // x-side cubes are added and y-side cubes subtracted; count zero totals
    fn rec(cubes: &[i128], remaining: u32, k: u32, total: i128) -> u64 {
        if remaining == 0 {
            return u64::from(total == 0);
        }
        let sign = if remaining > k { 1 } else { -1 };
        cubes
            .iter()
            .map(|&c| rec(cubes, remaining - 1, k, total + sign * c))
            .sum()
    }
    Ok((0..cubes.len())
        .into_par_iter()
        .map(|i| rec(&cubes, 2 * k - 1, k, cubes[i]))
        .sum())
}

/// Exact count of `z₁³ + x₁³ + x₂³ = z₂³ + y₁³ + y₂³` with `1 ≤ zᵢ ≤ P` and the
/// `x`, `y` smooth.
pub fn hybrid_count(params: SmoothParams) -> Result<MeanValueSample, OracleError> {
    let set = smooth_set(params)?;
    let size = set.len() as u128;
    gate("hybrid count", u128::from(params.p) * size * size)?;
    let cubes: Vec<u128> = set.iter().map(|&x| cube(x)).collect();
    let mut pairs = Vec::with_capacity(set.len() * (set.len() + 1) / 2);
    for i in 0..cubes.len() {
        pairs.push((cubes[i] + cubes[i], 1u64));
        for j in i + 1..cubes.len() {
            pairs.push((cubes[i] + cubes[j], 2u64));
        }
    }
    let entries: Vec<(u128, u64)> = (1..=params.p)
        .into_par_iter()
        .flat_map_iter(|z| {
            let zc = cube(z);
            pairs.iter().map(move |&(sum, w)| (sum + zc, w))
        })
        .collect();
    Ok(MeanValueSample {
        params,
        moment: Moment::Hybrid,
        count: sum_of_squared_weights(entries)?,
        smooth_set_size: set.len() as u64,
    })
}

/// The same count as [`hybrid_count`] by direct six-fold enumeration.
pub fn hybrid_count_naive(params: SmoothParams) -> Result<u64, OracleError> {
    let set = smooth_set(params)?;
    let size = set.len() as u128;
    let p = u128::from(params.p);
    gate("naive hybrid count", p * p * size.pow(4))?;
    let smooth: Vec<u128> = set.iter().map(|&x| cube(x)).collect();
    let full: Vec<u128> = (1..=params.p).map(cube).collect();
    Ok(full
        .par_iter()
        .map(|&z1| {
            let mut count = 0u64;
            for &x1 in &smooth {
                for &x2 in &smooth {
                    let left = z1 + x1 + x2;
                    for &z2 in &full {
                        for &y1 in &smooth {
                            for &y2 in &smooth {
                                count += u64::from(z2 + y1 + y2 == left);
                            }
                        }
                    }
                }
            }
            count
        })
        .sum())
}

/// Samples of one moment at each `P`, with `R` chosen by `policy`.
pub fn sample_series(
    moment: Moment,
    policy: RPolicy,
    ps: &[u64],
) -> Result<Vec<MeanValueSample>, OracleError> {
    ps.iter()
        .map(|&p| {
            let params = SmoothParams::new(p, policy.r_for(p))?;
            match moment {
                Moment::Even { k } => mean_value_even(params, k),
                Moment::Hybrid => hybrid_count(params),
            }
        })
        .collect()
}

/// Least-squares slope of `ln(count)` against `ln(P)`.
pub fn slope_fit(samples: &[MeanValueSample]) -> Result<f64, OracleError> {
    if samples.len() < 3 {
        return Err(OracleError::TooFewSamples(samples.len()));
    }
    let moment = samples[0].moment;
    if samples.iter().any(|s| s.moment != moment) {
        return Err(OracleError::MixedMoments);
    }
    let mut seen: Vec<u64> = Vec::with_capacity(samples.len());
    for s in samples {
        if seen.contains(&s.params.p) {
            return Err(OracleError::RepeatedP(s.params.p));
        }
        seen.push(s.params.p);
        if s.count == 0 {
            return Err(OracleError::Degenerate);
        }
    }
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| ((s.params.p as f64).ln(), (s.count as f64).ln()))
        .collect();
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(OracleError::Degenerate);
    }
    Ok(sxy / sxx)
}
