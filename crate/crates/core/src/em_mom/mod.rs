//! Method-of-moments solver for the rasterized patch.
//!
//! Pipeline per geometry: [`build_mesh`] places rooftops on the cell mask,
//! [`assemble_impedance`] fills the EFIE matrix for one frequency,
//! [`solve_input_impedance`] drives a delta-gap at the foot of the feed probe and
//! [`s11_from_zin`] converts to a reflection coefficient. [`sweep`] runs the
//! whole chain over a frequency grid; each frequency is independent.

mod assemble;
pub mod kernel;
mod mesh;
pub mod microstrip;
mod symmetry;

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

pub use assemble::{assemble_impedance, solve_input_impedance, ImpedanceMatrix};
pub use mesh::{build_mesh, Direction, Mesh, Rooftop};
pub use symmetry::MirrorReduction;

use crate::error::{Error, Result};
use crate::geometry::{denormalize, rasterize, DesignSpace, NormalizedParams, PhysicalGeometry};
use kernel::StaticKernel;
use microstrip::effective_permittivity;

/// Smallest |Γ| represented in dB, keeps `s11_db` finite for a perfect match.
const GAMMA_DB_FLOOR: f64 = 1e-12;

/// Strictly increasing list of positive frequencies (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid(Vec<f64>);

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::InvalidGrid("frequencies must be positive and finite".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self(points))
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        let step = (stop - start) / (n - 1) as f64;
        Self::new((0..n).map(|i| start + step * i as f64).collect())
    }

    /// 101 points from 1 to 6 GHz.
    pub fn default_sweep() -> Self {
        Self::linspace(1e9, 6e9, 101).expect("static grid is valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reads the `freq_hz` column of a CSV file.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_to_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_to_error(path, e))?.clone();
        let col = headers.iter().position(|h| h.trim() == "freq_hz").ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "missing `freq_hz` column".into(),
        })?;
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_to_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let field = record.get(col).unwrap_or("").trim();
            let f: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("bad frequency `{field}`"),
            })?;
            points.push(f);
        }
        Self::new(points)
    }
}

pub(crate) fn csv_to_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Simulated reflection coefficient over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct S11Curve {
    pub freq: FrequencyGrid,
    pub gamma: Vec<Complex64>,
    pub s11_db: Vec<f64>,
}

impl S11Curve {
    pub fn new(freq: FrequencyGrid, gamma: Vec<Complex64>) -> Self {
        assert_eq!(freq.len(), gamma.len(), "one reflection coefficient per frequency");
        let s11_db = gamma.iter().map(|g| gamma_to_db(*g)).collect();
        Self { freq, gamma, s11_db }
    }

    /// Frequency of the deepest |S11| dip, refined by a parabola through the
    /// minimum and its two neighbours (in dB).
    pub fn dip_frequency_hz(&self) -> f64 {
        let f = self.freq.points();
        let (i, _) = self
            .s11_db
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("curve is non-empty");
        if i == 0 || i + 1 == f.len() {
            return f[i];
        }
        let (y0, y1, y2) = (self.s11_db[i - 1], self.s11_db[i], self.s11_db[i + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        if denom <= 0.0 {
            return f[i];
        }
        // Parabola vertex in index space, mapped back linearly between neighbours.
        let t = 0.5 * (y0 - y2) / denom;
        if t < 0.0 {
            f[i] + t * (f[i] - f[i - 1])
        } else {
            f[i] + t * (f[i + 1] - f[i])
        }
    }

    /// CSV `freq_hz,s11_real,s11_imag,s11_db` with 9 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("freq_hz,s11_real,s11_imag,s11_db\n");
        for ((f, g), db) in self.freq.points().iter().zip(&self.gamma).zip(&self.s11_db) {
            let _ = writeln!(out, "{},{},{},{}", sig9(*f), sig9(g.re), sig9(g.im), sig9(*db));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Formats with 9 significant digits in scientific notation.
pub fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

pub(crate) fn gamma_to_db(g: Complex64) -> f64 {
    20.0 * g.norm().max(GAMMA_DB_FLOOR).log10()
}

/// `(Z_in - Z0) / (Z_in + Z0)`.
pub fn s11_from_zin(zin: Complex64, z0: f64) -> Result<Complex64> {
    let den = zin + z0;
    if den.norm() == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok((zin - z0) / den)
}

/// Simulates the design vector `p` over `grid`.
pub fn sweep(p: &NormalizedParams, space: &DesignSpace, grid: &FrequencyGrid) -> Result<S11Curve> {
    sweep_geometry(&denormalize(p, space), space, grid)
}

/// Simulates an explicit geometry over `grid`.
pub fn sweep_geometry(
    g: &PhysicalGeometry,
    space: &DesignSpace,
    grid: &FrequencyGrid,
) -> Result<S11Curve> {
    let mask = rasterize(g, space)?;
    let mesh = build_mesh(&mask)?;
    let sub = space.substrate;
    let height = sub.height_mm * 1e-3;
    let stat = StaticKernel::new(mesh.nx, mesh.ny, mesh.dx, mesh.dy, height);
    let eps_eff = effective_permittivity(sub.epsilon_r, mesh.patch_width(), height);
    let mirror = MirrorReduction::new(&mesh);

    let results: Vec<Result<Complex64>> = grid
        .points()
        .par_iter()
        .map(|&f| {
            let z = assemble::assemble_with(&mesh, &stat, f, eps_eff);
            let zin = match &mirror {
                Some(m) => m.input_impedance(&z, &mesh)?,
                None => solve_input_impedance(&z, &mesh, 1.0)?,
            };
            s11_from_zin(zin, sub.z0_ohm)
        })
        .collect();
    // First failure in frequency order, independent of scheduling.
    let gamma = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(S11Curve::new(grid.clone(), gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CellMask, FeedCell, SubstrateSpec};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn strip_mesh(nx: usize, ny: usize, cell_mm: f64) -> Mesh {
        let mask = CellMask {
            nx,
            ny,
            metal: vec![true; nx * ny],
            cell_dx_mm: cell_mm,
            cell_dy_mm: cell_mm,
            feed: FeedCell { ix: 0, iy: ny / 2 },
        };
        build_mesh(&mask).unwrap()
    }

    #[test]
    fn s11_reference_values() {
        assert_relative_eq!(s11_from_zin(c(50.0, 0.0), 50.0).unwrap().norm(), 0.0);
        let short = s11_from_zin(c(0.0, 0.0), 50.0).unwrap();
        assert_relative_eq!(short.re, -1.0);
        assert_relative_eq!(short.im, 0.0);
        let g = s11_from_zin(c(100.0, 0.0), 50.0).unwrap();
        assert_relative_eq!(g.re, 1.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(s11_from_zin(c(-50.0, 0.0), 50.0), Err(Error::DivisionByZero)));
    }

    #[test]
    fn one_by_one_system() {
        let z11 = c(37.0, -12.5);
        let z = ImpedanceMatrix::from_rows(1e9, &[vec![z11]]);
        let zin = assemble::feed_impedance(&z, 0, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(zin.re, z11.re, epsilon = 1e-12);
        assert_relative_eq!(zin.im, z11.im, epsilon = 1e-12);
    }

    #[test]
    fn two_by_two_matches_cramer() {
        let (a, b, d) = (c(10.0, 3.0), c(-2.0, 1.5), c(7.0, -4.0));
        let z = ImpedanceMatrix::from_rows(1e9, &[vec![a, b], vec![b, d]]);
        // Feeding basis 0 with V: I0 = V d / (a d - b^2), so Z_in = (a d - b^2) / d.
        let oracle = (a * d - b * b) / d;
        let zin = assemble::feed_impedance(&z, 0, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(zin.re, oracle.re, max_relative = 1e-12);
        assert_relative_eq!(zin.im, oracle.im, max_relative = 1e-12);
        let scaled = assemble::feed_impedance(&z, 0, c(-3.7, 0.0)).unwrap();
        assert_relative_eq!(scaled.re, zin.re, max_relative = 1e-12);
        assert_relative_eq!(scaled.im, zin.im, max_relative = 1e-12);
    }

    #[test]
    fn singular_system_is_reported() {
        let z = ImpedanceMatrix::from_rows(2e9, &[vec![c(0.0, 0.0); 2], vec![c(0.0, 0.0); 2]]);
        let err = assemble::feed_impedance(&z, 0, c(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { freq_hz, .. } if freq_hz == 2e9));
    }

    #[test]
    fn assembled_matrix_is_symmetric_and_finite() {
        let mesh = strip_mesh(6, 5, 2.0);
        let z = assemble_impedance(&mesh, 3.3e9, &SubstrateSpec::default());
        assert!(z.is_finite());
        assert!(z.max_relative_asymmetry() < 1e-8);
        assert_eq!(z.dim(), mesh.len());
    }

    /// Real part of the single-rooftop self-impedance by brute-force double
    /// quadrature of the continuous Galerkin integral with the smooth
    /// `sin(kR)/R` kernel.
    fn rooftop_self_resistance(dx: f64, dy: f64, h: f64, f: f64, eps_eff: f64) -> f64 {
        use microstrip::{C0, EPS0, MU0};
        let omega = 2.0 * std::f64::consts::PI * f;
        let k = omega * eps_eff.sqrt() / C0;
        let eps = EPS0 * eps_eff;
        let m = 12;
        let mut pts = Vec::new();
        for i in 0..2 * m {
            for j in 0..m {
                let x = (i as f64 + 0.5) * dx / m as f64;
                let y = (j as f64 + 0.5) * dy / m as f64;
                let fx = 1.0 - (x - dx).abs() / dx;
                let div = if x < dx { 1.0 / dx } else { -1.0 / dx };
                pts.push((x, y, fx / dy, div / dy));
            }
        }
        let w = (dx / m as f64) * (dy / m as f64);
        let sinc = |r: f64| if r == 0.0 { k } else { (k * r).sin() / r };
        let mut acc = 0.0;
        for p in &pts {
            for q in &pts {
                let r = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
                let kern = (sinc(r) - sinc((r * r + 4.0 * h * h).sqrt())) / (4.0 * std::f64::consts::PI);
                acc += w * w * kern * (omega * MU0 * p.2 * q.2 - p.3 * q.3 / (omega * eps));
            }
        }
        acc
    }

    #[test]
    fn single_rooftop_has_positive_resistance() {
        let sub = SubstrateSpec::default();
        let mesh = strip_mesh(2, 1, 2.0);
        for &f in &[1e9, 3e9, 6e9] {
            let z = assemble_impedance(&mesh, f, &sub);
            assert_eq!(z.dim(), 2);
            let re = z.get(0, 0).re;
            assert!(re > 0.0, "Re Z = {re} at {f}");
            let eps_eff = effective_permittivity(sub.epsilon_r, 2e-3, 1.6e-3);
            let oracle = rooftop_self_resistance(2e-3, 2e-3, 1.6e-3, f, eps_eff);
            assert!(oracle > 0.0);
            assert_relative_eq!(re, oracle, max_relative = 0.05);
        }
    }

    #[test]
    fn real_part_is_positive_semidefinite() {
        use rand::{Rng, SeedableRng};
        let mesh = strip_mesh(5, 4, 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &f in &[1e9, 2.5e9, 6e9] {
            let z = assemble_impedance(&mesh, f, &SubstrateSpec::default());
            let n = z.dim();
            let scale = (0..n).map(|i| z.get(i, i).re).fold(0.0, f64::max);
            for _ in 0..200 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let q: f64 = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| x[i] * z.get(i, j).re * x[j])
                    .sum();
                assert!(q >= -1e-9 * scale * n as f64, "x^T Re(Z) x = {q} at {f}");
            }
        }
    }

    #[test]
    fn probe_static_term_matches_quadrature() {
        let (h, a) = (1.6e-3, 0.5e-3);
        // k -> 0 leaves only the static double integral over wire and image.
        let closed = kernel::probe_self(1e-9, h, a).im * 4.0 * std::f64::consts::PI;
        let m = 400;
        let step = h / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let z = (i as f64 + 0.5) * step;
            for j in 0..2 * m {
                let zp = -h + (j as f64 + 0.5) * step;
                acc += 1.0 / ((z - zp).powi(2) + a * a).sqrt();
            }
        }
        assert_relative_eq!(closed, acc * step * step, max_relative = 1e-4);
    }

    #[test]
    fn far_interaction_phase_follows_wavenumber() {
        use microstrip::{C0, EPS0};
        let n = 16;
        let (dx, h) = (2e-3, 1.6e-3);
        let stat = StaticKernel::new(n, n, dx, dx, h);
        let eps_eff = 3.0;
        let (di, dj) = (12usize, 9usize);
        let r = dx * ((di * di + dj * dj) as f64).sqrt();
        let ri = (r * r + 4.0 * h * h).sqrt();
        let mut phases = Vec::new();
        for &f in &[2e9, 4e9] {
            let kern = kernel::FrequencyKernel::new(&stat, n, n, f, eps_eff);
            let omega = 2.0 * std::f64::consts::PI * f;
            let k = omega * eps_eff.sqrt() / C0;
            // charge = -(rad + j w^2 C) / (omega eps area^2), and
            // (rad + j w^2 C) / area^2 ~ jK for well-separated cells.
            let jk = -kern.charge[di * n + dj] * (omega * EPS0 * eps_eff);
            let k_est = jk / Complex64::new(0.0, 1.0);
            let green = |d: f64| Complex64::from_polar(1.0 / (4.0 * std::f64::consts::PI * d), -k * d);
            let oracle = green(r) - green(ri);
            assert_relative_eq!(k_est.re, oracle.re, max_relative = 2e-2, epsilon = 1e-3 * oracle.norm());
            assert_relative_eq!(k_est.im, oracle.im, max_relative = 2e-2, epsilon = 1e-3 * oracle.norm());
            phases.push((k_est.arg(), oracle.arg()));
        }
        let rotated = phases[1].0 - phases[0].0;
        let expected = phases[1].1 - phases[0].1;
        let wrap = |a: f64| (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        assert!(wrap(rotated - expected).abs() < 0.02);
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(vec![1e9]).is_err());
        assert!(FrequencyGrid::new(vec![2e9, 1e9]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1e9]).is_err());
        let g = FrequencyGrid::default_sweep();
        assert_eq!(g.len(), 101);
        assert_relative_eq!(g.points()[28], 2.4e9, max_relative = 1e-12);
    }

    #[test]
    fn csv_has_header_and_one_row_per_point() {
        let grid = FrequencyGrid::linspace(1e9, 2e9, 3).unwrap();
        let curve = S11Curve::new(grid, vec![c(0.5, 0.0), c(0.0, -0.25), c(0.1, 0.1)]);
        let text = curve.to_csv_string();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "freq_hz,s11_real,s11_imag,s11_db");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "1.00000000e9,5.00000000e-1,0.00000000e0,-6.02059991e0");
        for (g, db) in curve.gamma.iter().zip(&curve.s11_db) {
            assert!((20.0 * g.norm().log10() - db).abs() < 1e-9);
        }
    }

    #[test]
    fn parabolic_dip_refinement() {
        let grid = FrequencyGrid::linspace(1.0, 5.0, 5).unwrap();
        // Samples of (f - 3.25)^2 - 10 in dB.
        let db: Vec<f64> = grid.points().iter().map(|f| (f - 3.25f64).powi(2) - 10.0).collect();
        let curve = S11Curve {
            freq: grid.clone(),
            gamma: vec![c(0.0, 0.0); 5],
            s11_db: db,
        };
        assert_relative_eq!(curve.dip_frequency_hz(), 3.25, epsilon = 1e-12);
    }
}
