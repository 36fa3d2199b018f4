//! The bundled two-band example target.
//!
//! A flat -2 dB response with two Gaussian notches reaching -25 dB at 2.4 and
//! 5.2 GHz, sampled at 101 points over 1-6 GHz. It is generated here and the
//! checked-in copy under `data/` must match [`two_band_target`] byte for byte.

use crate::em_mom::FrequencyGrid;
use crate::loss::TargetCurve;

pub const BUNDLED_TARGET_CSV: &str = include_str!("../../data/two_band_target.csv");

const BASELINE_DB: f64 = -2.0;
const NOTCH_DB: f64 = -25.0;
const NOTCH_CENTERS_HZ: [f64; 2] = [2.4e9, 5.2e9];
const NOTCH_WIDTH_HZ: f64 = 0.12e9;

pub fn two_band_target() -> TargetCurve {
    let grid = FrequencyGrid::default_sweep();
    let depth = NOTCH_DB - BASELINE_DB;
    let db = grid
        .points()
        .iter()
        .map(|f| {
            let notch = NOTCH_CENTERS_HZ
                .iter()
                .map(|c| (-0.5 * ((f - c) / NOTCH_WIDTH_HZ).powi(2)).exp())
                .fold(0.0, f64::max);
            BASELINE_DB + depth * notch
        })
        .collect();
    TargetCurve::new(grid, db).expect("generated target is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checked_in_copy_is_current() {
        assert_eq!(two_band_target().to_csv_string(), BUNDLED_TARGET_CSV);
    }

    #[test]
    fn notch_depths() {
        let t = two_band_target();
        let min = t.s11_db.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((min - NOTCH_DB).abs() < 1e-9);
        assert_eq!(t.s11_db.len(), 101);
        // 2.4 and 5.2 GHz fall on the grid (indices 28 and 84).
        assert!((t.s11_db[28] - NOTCH_DB).abs() < 1e-9);
        assert!((t.s11_db[84] - NOTCH_DB).abs() < 1e-9);
        assert!((t.s11_db[0] - BASELINE_DB).abs() < 1e-9);
        assert!((t.s11_db[56] - BASELINE_DB).abs() < 1e-6);
    }
}
