//! Conversions between ordinary frequency and the internal angular units.

use std::f64::consts::TAU;

/// MHz to rad/µs.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// kHz to rad/µs.
pub fn khz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// rad/µs to MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU
}

/// rad/µs to kHz.
pub fn to_khz(w: f64) -> f64 {
    w / TAU * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert!((to_mhz(mhz(2.5)) - 2.5).abs() < 1e-15);
        assert!((to_khz(khz(150.0)) - 150.0).abs() < 1e-12);
        assert!((khz(1000.0) - mhz(1.0)).abs() < 1e-15);
    }
}
