//! Number rendering for result files.

/// Significant digits used for scores in result files.
pub const SCORE_DIGITS: usize = 12;

/// Renders `x` rounded to `digits` significant digits in positional
/// notation.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
