//! Decimal rendering with directed rounding.
//!
//! Upper bounds (associated and admissible exponents, thresholds) are shown rounded
//! up so that the printed value is still a valid bound; lower bounds (the exponent
//! counting sums of three cubes) are shown rounded down. A value within a few ulps
//! of a short decimal is printed as that decimal: such values are decimal inputs
//! (like `s = 7.7`) carried through exact arithmetic, not genuine excess.

/// Fixed-point text with at least 17 significant digits, enough to round-trip any double.
pub fn sig17(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value:.16}");
    }
    let exponent = value.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    format!("{value:.decimals$}")
}

/// `value` rounded up to `places` decimals.
pub fn round_up(value: f64, places: u32) -> String {
    directed(value, places, Direction::Up)
}

/// `value` rounded down to `places` decimals.
pub fn round_down(value: f64, places: u32) -> String {
    directed(value, places, Direction::Down)
}

#[derive(Clone, Copy)]
enum Direction {
    Up,
    Down,
}

fn directed(value: f64, places: u32, dir: Direction) -> String {
    assert!(value.is_finite(), "cannot render {value}");
    assert!(places <= 15);
    let scale = 10i64.pow(places);
    let as_double = |units: i64| units as f64 / scale as f64;

    let scaled = value * scale as f64;
    let nearest = scaled.round() as i64;
    let slack = 4.0 * f64::EPSILON * value.abs().max(1.0);
    let units = if (as_double(nearest) - value).abs() <= slack {
        nearest
    } else {
        match dir {
            Direction::Up => {
                let mut u = scaled.ceil() as i64;
                // the product may have been rounded across an integer
                while as_double(u) < value {
                    u += 1;
                }
                while as_double(u - 1) >= value {
                    u -= 1;
                }
                u
            }
            Direction::Down => {
                let mut u = scaled.floor() as i64;
                while as_double(u) > value {
                    u -= 1;
                }
                while as_double(u + 1) <= value {
                    u += 1;
                }
                u
            }
        }
    };
    render(units, places)
}

fn render(units: i64, places: u32) -> String {
    let sign = if units < 0 { "-" } else { "" };
    let magnitude = units.unsigned_abs();
    let scale = 10u64.pow(places);
    if places == 0 {
        return format!("{sign}{magnitude}");
    }
    format!(
        "{sign}{}.{:0width$}",
        magnitude / scale,
        magnitude % scale,
        width = places as usize
    )
}
