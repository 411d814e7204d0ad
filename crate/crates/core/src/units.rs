//! SI conversions into the crate's natural units.

use thiserror::Error;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitsError {
    #[error("speed {0} m/s is outside (0, c)")]
    Range(f64),
    #[error("switching rate {0} 1/s must be finite and non-negative")]
    Rate(f64),
}

/// Converts a speed in m/s to a fraction of `c`.
pub fn convert_units(v_si: f64) -> Result<f64, UnitsError> {
    if !(v_si > 0.0 && v_si < SPEED_OF_LIGHT) {
        return Err(UnitsError::Range(v_si));
    }
    Ok(v_si / SPEED_OF_LIGHT)
}

/// Converts a rate in 1/s to 1/light-metre, the time unit used internally.
pub fn rate_per_second_to_natural(rate: f64) -> Result<f64, UnitsError> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(UnitsError::Rate(rate));
    }
    Ok(rate / SPEED_OF_LIGHT)
}
