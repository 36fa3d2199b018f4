use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use super::kernel::{FrequencyKernel, StaticKernel};
use super::mesh::{Direction, Mesh};
use super::microstrip::effective_permittivity;
use crate::error::{Error, Result};
use crate::geometry::SubstrateSpec;

/// Dense Galerkin moment matrix at one frequency (Ω).
#[derive(Debug, Clone)]
pub struct ImpedanceMatrix {
    pub frequency_hz: f64,
    pub(crate) entries: Mat<Complex64>,
    pub(crate) geometry_hash: u64,
}

impl ImpedanceMatrix {
    /// Wraps an explicit matrix, mostly useful for exercising the solver.
    pub fn from_rows(frequency_hz: f64, rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            frequency_hz,
            entries: Mat::from_fn(n, n, |i, j| rows[i][j]),
            geometry_hash: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    /// `max |Z_ij - Z_ji| / max(|Z_ij|, |Z_ji|)` over all pairs.
    pub fn max_relative_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let scale = a.norm().max(b.norm());
                if scale > 0.0 {
                    worst = worst.max((a - b).norm() / scale);
                }
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.get(i, j).is_finite()))
    }

    /// Solves `Z I = rhs` by partial-pivot LU.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "right-hand side length");
        let singular = || Error::SingularSystem {
            freq_hz: self.frequency_hz,
            geometry_hash: self.geometry_hash,
        };
        if !self.is_finite() {
            return Err(singular());
        }
        let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let x = self.entries.partial_piv_lu().solve(&b);
        let out: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(singular())
        }
    }
}

/// Assembles the moment matrix for `mesh` at `freq_hz`.
pub fn assemble_impedance(mesh: &Mesh, freq_hz: f64, sub: &SubstrateSpec) -> ImpedanceMatrix {
    let height = sub.height_mm * 1e-3;
    let stat = StaticKernel::new(mesh.nx, mesh.ny, mesh.dx, mesh.dy, height);
    let eps_eff = effective_permittivity(sub.epsilon_r, mesh.patch_width(), height);
    assemble_with(mesh, &stat, freq_hz, eps_eff)
}

pub(crate) fn assemble_with(
    mesh: &Mesh,
    stat: &StaticKernel,
    freq_hz: f64,
    eps_eff: f64,
) -> ImpedanceMatrix {
    let kernel = FrequencyKernel::new(stat, mesh.nx, mesh.ny, freq_hz, eps_eff);
    let n = mesh.len();
    let mut z = Mat::<Complex64>::zeros(n, n);
    for (m, bm) in mesh.basis.iter().enumerate() {
        for (offset, bn) in mesh.basis[m..].iter().enumerate() {
            let charge = kernel.charge[kernel.index(bm.tail, bn.tail)]
                - kernel.charge[kernel.index(bm.tail, bn.head)]
                - kernel.charge[kernel.index(bm.head, bn.tail)]
                + kernel.charge[kernel.index(bm.head, bn.head)];
            let vector = match (bm.dir, bn.dir) {
                (Direction::X, Direction::X) => kernel.vx[kernel.index(bm.tail, bn.tail)],
                (Direction::Y, Direction::Y) => kernel.vy[kernel.index(bm.tail, bn.tail)],
                _ => Complex64::new(0.0, 0.0),
            };
            let v = vector + charge;
            let col = m + offset;
            z[(m, col)] = v;
            z[(col, m)] = v;
        }
    }
    // The probe current ends on its cell, which therefore acts like a rooftop head.
    let p = mesh.feed_basis_index;
    let cell = mesh.probe_cell;
    for (m, bm) in mesh.basis.iter().enumerate() {
        let v = kernel.charge[kernel.index(cell, bm.head)] - kernel.charge[kernel.index(cell, bm.tail)];
        z[(m, p)] = v;
        z[(p, m)] = v;
    }
    z[(p, p)] = kernel.probe + kernel.charge[kernel.index(cell, cell)];
    ImpedanceMatrix {
        frequency_hz: freq_hz,
        entries: z,
        geometry_hash: mesh.geometry_hash,
    }
}

/// Delta-gap input impedance: drive `v_feed` across the gap between the
/// ground plane and the foot of the feed probe and return `v_feed / I_feed`.
pub fn solve_input_impedance(z: &ImpedanceMatrix, mesh: &Mesh, v_feed: f64) -> Result<Complex64> {
    let feed = mesh.feed_basis_index;
    feed_impedance(z, feed, Complex64::new(v_feed, 0.0))
}

pub(crate) fn feed_impedance(z: &ImpedanceMatrix, feed: usize, v: Complex64) -> Result<Complex64> {
    let mut rhs = vec![Complex64::new(0.0, 0.0); z.dim()];
    rhs[feed] = v;
    let currents = z.solve(&rhs)?;
    let i_feed = currents[feed];
    if i_feed.norm() == 0.0 {
        return Err(Error::SingularSystem {
            freq_hz: z.frequency_hz,
            geometry_hash: z.geometry_hash,
        });
    }
    Ok(v / i_feed)
}
