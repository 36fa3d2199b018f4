//! Design-error objectives on dB-magnitude S11 curves.
//!
//! The optimizer minimizes the inverted Huber loss of the residual
//! `r = S11(x) - S11*`: each entry contributes `|r_i|` up to the threshold `c`
//! and `(r_i² + c²) / 2c` beyond it, where `c` is the 0.9-quantile of `|r|`.
//! Reports use the plain Euclidean norm of `r`.

use std::path::Path;

use crate::em_mom::{csv_to_error, FrequencyGrid, S11Curve};
use crate::error::{Error, Result};

/// Score assigned to designs the simulator cannot evaluate.
pub const PENALTY_SCORE: f64 = 1e6;

/// Quantile level of `|r|` used as the Huber threshold.
pub const THRESHOLD_QUANTILE: f64 = 0.9;

/// Desired S11 magnitude per frequency (dB).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCurve {
    pub freq: FrequencyGrid,
    pub s11_db: Vec<f64>,
}

impl TargetCurve {
    pub fn new(freq: FrequencyGrid, s11_db: Vec<f64>) -> Result<Self> {
        if freq.len() != s11_db.len() {
            return Err(Error::InvalidGrid(format!(
                "{} frequencies but {} target values",
                freq.len(),
                s11_db.len()
            )));
        }
        if let Some(v) = s11_db.iter().find(|v| !v.is_finite() || **v > 0.0) {
            return Err(Error::InvalidParams(format!(
                "target values must be finite and <= 0 dB, got {v}"
            )));
        }
        Ok(Self { freq, s11_db })
    }

    /// Reads a `freq_hz,s11_db` CSV file.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_to_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_to_error(path, e))?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("missing `{name}` column"),
                })
        };
        let (fcol, dcol) = (find("freq_hz")?, find("s11_db")?);
        let mut freq = Vec::new();
        let mut db = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_to_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |col: usize| -> Result<f64> {
                let s = record.get(col).unwrap_or("").trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("expected a finite number, got `{s}`"),
                    })
            };
            let (f, v) = (field(fcol)?, field(dcol)?);
            if f <= 0.0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("frequency must be positive, got {f}"),
                });
            }
            if freq.last().is_some_and(|prev| f <= *prev) {
                return Err(Error::NonMonotoneGrid {
                    path: path.to_path_buf(),
                    line,
                });
            }
            if v > 0.0 {
                return Err(Error::PositiveDbValue {
                    path: path.to_path_buf(),
                    line,
                    value: v,
                });
            }
            freq.push(f);
            db.push(v);
        }
        let grid = FrequencyGrid::new(freq).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::new(grid, db)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("freq_hz,s11_db\n");
        for (f, v) in self.freq.points().iter().zip(&self.s11_db) {
            out.push_str(&format!("{},{}\n", crate::em_mom::sig9(*f), crate::em_mom::sig9(*v)));
        }
        out
    }
}

/// Per-frequency dB differences and their Huber threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub values: Vec<f64>,
    pub threshold_c: f64,
}

impl ResidualVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        let threshold_c = quantile(&abs, THRESHOLD_QUANTILE);
        Self { values, threshold_c }
    }
}

/// Linear-interpolation quantile (`h = q (n - 1)`) of `values`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_grids(sim: &FrequencyGrid, target: &FrequencyGrid) -> Result<()> {
    let (a, b) = (sim.points(), target.points());
    if a.len() != b.len() {
        return Err(Error::GridMismatch {
            index: a.len().min(b.len()),
        });
    }
    match a.iter().zip(b).position(|(x, y)| x != y) {
        Some(index) => Err(Error::GridMismatch { index }),
        None => Ok(()),
    }
}

/// `r = S11(x) - S11*` in dB.
pub fn residual(sim: &S11Curve, target: &TargetCurve) -> Result<ResidualVector> {
    check_grids(&sim.freq, &target.freq)?;
    let values = sim
        .s11_db
        .iter()
        .zip(&target.s11_db)
        .map(|(s, t)| s - t)
        .collect();
    Ok(ResidualVector::from_values(values))
}

/// Inverted Huber loss; falls back to the L1 norm when `c = 0`.
pub fn inverted_huber(r: &ResidualVector) -> f64 {
    let c = r.threshold_c;
    if c == 0.0 {
        return r.values.iter().map(|v| v.abs()).sum();
    }
    r.values
        .iter()
        .map(|v| {
            let a = v.abs();
            if a <= c {
                a
            } else {
                (v * v + c * c) / (2.0 * c)
            }
        })
        .sum()
}

/// Euclidean norm of the dB residual.
pub fn l2_error(sim: &S11Curve, target: &TargetCurve) -> Result<f64> {
    let r = residual(sim, target)?;
    Ok(r.values.iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::linspace(1e9, 2e9, n).unwrap()
    }

    fn curve_with_db(db: &[f64]) -> S11Curve {
        let gamma = db
            .iter()
            .map(|d| Complex64::new(10f64.powf(d / 20.0), 0.0))
            .collect();
        S11Curve::new(grid(db.len()), gamma)
    }

    fn target(db: &[f64]) -> TargetCurve {
        TargetCurve::new(grid(db.len()), db.to_vec()).unwrap()
    }

    #[test]
    fn identical_curves_have_zero_residual() {
        let sim = curve_with_db(&[-3.0, -10.0, -1.0]);
        let t = TargetCurve::new(sim.freq.clone(), sim.s11_db.clone()).unwrap();
        let r = residual(&sim, &t).unwrap();
        assert!(r.values.iter().all(|v| *v == 0.0));
        assert_eq!(r.threshold_c, 0.0);
        assert_eq!(inverted_huber(&r), 0.0);
        assert_eq!(l2_error(&sim, &t).unwrap(), 0.0);
    }

    #[test]
    fn three_point_quantile() {
        let r = ResidualVector::from_values(vec![1.0, -2.0, 3.0]);
        assert_relative_eq!(r.threshold_c, 2.8, epsilon = 1e-12);
    }

    #[test]
    fn swapping_sim_and_target_negates_residual() {
        let a = [-3.0, -12.0, -0.5, -7.0];
        let b = [-1.0, -20.0, -4.0, -7.5];
        let ra = residual(&curve_with_db(&a), &target(&b)).unwrap();
        let rb = residual(&curve_with_db(&b), &target(&a)).unwrap();
        for (x, y) in ra.values.iter().zip(&rb.values) {
            assert_relative_eq!(*x, -*y, epsilon = 1e-9);
        }
        assert_relative_eq!(ra.threshold_c, rb.threshold_c, epsilon = 1e-9);
    }

    #[test]
    fn quadratic_branch_value() {
        let r = ResidualVector {
            values: vec![3.0],
            threshold_c: 1.0,
        };
        assert_eq!(inverted_huber(&r), 5.0);
    }

    #[test]
    fn branches_agree_at_threshold() {
        let r = ResidualVector {
            values: vec![2.0, -2.0, 2.0],
            threshold_c: 2.0,
        };
        assert_eq!(inverted_huber(&r), 6.0);
        let c: f64 = 2.0;
        assert_eq!((c * c + c * c) / (2.0 * c), c);
    }

    #[test]
    fn l2_of_three_four() {
        let sim = curve_with_db(&[-3.0, -4.0]);
        let t = target(&[-6.0, -8.0]);
        assert_relative_eq!(l2_error(&sim, &t).unwrap(), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let sim = curve_with_db(&[-3.0, -4.0, -5.0]);
        let other = TargetCurve::new(
            FrequencyGrid::new(vec![1e9, 1.5e9, 2.1e9]).unwrap(),
            vec![-1.0; 3],
        )
        .unwrap();
        assert!(matches!(
            residual(&sim, &other),
            Err(Error::GridMismatch { index: 2 })
        ));
        assert!(l2_error(&sim, &target(&[-1.0, -1.0])).is_err());
    }

    #[test]
    fn target_rejects_positive_db() {
        assert!(TargetCurve::new(grid(2), vec![-1.0, 0.5]).is_err());
    }

    proptest! {
        #[test]
        fn zero_iff_zero_residual(v in prop::collection::vec(-30.0..30.0f64, 1..50)) {
            let r = ResidualVector::from_values(v.clone());
            let score = inverted_huber(&r);
            prop_assert!(score >= 0.0);
            prop_assert_eq!(score == 0.0, v.iter().all(|x| *x == 0.0));
        }

        #[test]
        fn permutation_invariant(v in prop::collection::vec(-30.0..30.0f64, 1..50), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut w = v.clone();
            w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = inverted_huber(&ResidualVector::from_values(v));
            let b = inverted_huber(&ResidualVector::from_values(w));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn quadratic_branch_dominates(c in 1e-3..10.0f64, excess in 1e-6..50.0f64) {
            let r = c + excess;
            prop_assert!((r * r + c * c) / (2.0 * c) > r);
        }

        #[test]
        fn l2_bounds_max_abs_residual(
            pairs in prop::collection::vec((-40.0..0.0f64, -40.0..0.0f64), 2..40)
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let sim = curve_with_db(&a);
            let t = target(&b);
            let r = residual(&sim, &t).unwrap();
            let max = r.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(l2_error(&sim, &t).unwrap() >= max);
        }
    }
}
