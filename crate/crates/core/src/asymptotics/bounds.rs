//! Calibrated regression bounds for the asymptotic tables.
//!
//! The asymptotic statements carry unspecified constants, so each bound
//! below was measured once on the reference grid and then frozen with some
//! headroom. A violation means the computation changed, not the mathematics.

use super::{log_sum_explicit_lower_bound, ExponentFit, RatioRow, Table, GAP_SQUARE_EXPONENT};
use crate::sieve::PrimeEngine;

/// Bounds apply from these grid values on.
pub const SUM_FROM_X: u64 = 1_000;
pub const HARMONIC_FROM_X: u64 = 10_000;
pub const LEMMA6_FROM_X: u64 = 1_000;
pub const LOG_SUM_FROM_X: u64 = 1_000;
pub const GEOMETRIC_MEAN_FROM_N: u64 = 1_000;

/// `sum a_n / (x ln x) >= SUM_LOWER`.
pub const SUM_LOWER: f64 = 0.1;
/// `sum a_n / x^(23/18) <= SUM_UPPER`.
pub const SUM_UPPER: f64 = 10.0;
/// `|sum 1/a_n - x ln ln x / ln x| / (x / ln x) <= HARMONIC_RESIDUAL_MAX`.
/// Measured: 0.636 at `10^4` falling to 0.417 at `10^8`.
pub const HARMONIC_RESIDUAL_MAX: f64 = 1.0;
/// `|sum ln d_i - x ln ln x| / x <= LEMMA6_RESIDUAL_MAX`.
/// Measured: -0.106 at `10^3` drifting to -0.224 at `10^6`.
pub const LEMMA6_RESIDUAL_MAX: f64 = 0.5;
/// `sum ln a_n / x >= LOG_SUM_LOWER`.
/// Measured: 1.246 at `10^3` rising to 2.290 at `10^8`.
pub const LOG_SUM_LOWER: f64 = 1.0;
/// `sum ln a_n / x <= LOG_SUM_UPPER * ln x`.
/// Measured: `sum / (x ln x)` from 0.180 at `10^3` down to 0.124 at `10^8`.
pub const LOG_SUM_UPPER: f64 = 0.25;
/// Geometric-mean gap ratio stays within this band.
pub const GEOMETRIC_MEAN_BAND: (f64, f64) = (0.5, 2.0);
/// Minimum `r^2` of the log-log fit of summed squared gaps.
pub const GAP_SQUARE_MIN_R2: f64 = 0.99;

/// Checks one row against its frozen bound; `Err` carries a description.
// Negated comparisons so that NaN fails.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn check_row(table: Table, row: &RatioRow) -> Result<(), String> {
    let fail = |what: String| Err(format!("{} at x = {}: {what}", table.name(), row.x));
    match table {
        Table::Sum if row.x >= SUM_FROM_X => {
            let upper = row.residual.unwrap_or(f64::NAN);
            if !(row.ratio >= SUM_LOWER) {
                return fail(format!("ratio {} < {SUM_LOWER}", row.ratio));
            }
            if !(upper <= SUM_UPPER) {
                return fail(format!("sum / x^(23/18) = {upper} > {SUM_UPPER}"));
            }
        }
        Table::Harmonic if row.x >= HARMONIC_FROM_X => {
            let r = row.residual.unwrap_or(f64::NAN).abs();
            if !(r <= HARMONIC_RESIDUAL_MAX) {
                return fail(format!("|residual| {r} > {HARMONIC_RESIDUAL_MAX}"));
            }
        }
        Table::Lemma6 if row.x >= LEMMA6_FROM_X => {
            let r = row.residual.unwrap_or(f64::NAN).abs();
            if !(r <= LEMMA6_RESIDUAL_MAX) {
                return fail(format!("|residual| {r} > {LEMMA6_RESIDUAL_MAX}"));
            }
        }
        Table::LogSum if row.x >= LOG_SUM_FROM_X => {
            let upper = LOG_SUM_UPPER * (row.x as f64).ln();
            if !(row.ratio >= LOG_SUM_LOWER && row.ratio <= upper) {
                return fail(format!(
                    "ratio {} outside [{LOG_SUM_LOWER}, {upper}]",
                    row.ratio
                ));
            }
        }
        Table::Panaitopol if row.x >= GEOMETRIC_MEAN_FROM_N => {
            let (lo, hi) = GEOMETRIC_MEAN_BAND;
            if !(row.ratio >= lo && row.ratio <= hi) {
                return fail(format!("ratio {} outside [{lo}, {hi}]", row.ratio));
            }
        }
        _ => {}
    }
    Ok(())
}

/// `sum_{n<=x} ln a_n > 0.09 p_k - 3` with `p_k <= x < p_{k+1}` (no calibration).
pub fn check_log_sum_explicit(engine: &PrimeEngine, row: &RatioRow) -> Result<(), String> {
    let bound = log_sum_explicit_lower_bound(engine, row.x).map_err(|e| e.to_string())?;
    if row.raw > bound {
        Ok(())
    } else {
        Err(format!(
            "logsum at x = {}: {} <= 0.09 p_k - 3 = {bound}",
            row.x, row.raw
        ))
    }
}

/// Fitted exponent must lie strictly between 1 and 23/18 with a tight fit.
pub fn check_gap_square_fit(fit: &ExponentFit) -> Result<(), String> {
    if fit.slope > 1.0 && fit.slope < GAP_SQUARE_EXPONENT && fit.r_squared >= GAP_SQUARE_MIN_R2 {
        Ok(())
    } else {
        Err(format!(
            "gaps2 fit: slope {} (want (1, {GAP_SQUARE_EXPONENT})), r^2 {} (want >= {GAP_SQUARE_MIN_R2})",
            fit.slope, fit.r_squared
        ))
    }
}
