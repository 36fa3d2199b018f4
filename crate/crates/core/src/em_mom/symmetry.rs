//! Mirror-symmetry reduction of the feed solve.
//!
//! Patches with a centered slot rasterize to masks that are symmetric under
//! `iy -> ny - 1 - iy`. The rooftop block `A` of the moment matrix then
//! commutes with the mirror, so in the basis of even and odd rooftop pairs it
//! splits into two independent blocks of about half the size. With the probe
//! as the last unknown,
//!
//! ```text
//! Z_in = d - cᵀ A⁻¹ c = d - c_eᵀ A_e⁻¹ c_e - c_oᵀ A_o⁻¹ c_o
//! ```
//!
//! which costs two half-size factorizations instead of one full one.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use super::assemble::ImpedanceMatrix;
use super::mesh::{Direction, Mesh};
use crate::error::{Error, Result};

/// One symmetry-adapted basis vector: up to two rooftops with coefficients.
#[derive(Debug, Clone, Copy)]
struct Combo {
    terms: [(usize, f64); 2],
    len: usize,
}

impl Combo {
    fn terms(&self) -> &[(usize, f64)] {
        &self.terms[..self.len]
    }
}

#[derive(Debug, Clone)]
pub struct MirrorReduction {
    even: Vec<Combo>,
    odd: Vec<Combo>,
}

impl MirrorReduction {
    /// `None` when the mesh is not mirror symmetric.
    pub fn new(mesh: &Mesh) -> Option<Self> {
        let ny = mesh.ny;
        let mirror = |(ix, iy): (usize, usize)| (ix, ny - 1 - iy);
        let index: std::collections::HashMap<(Direction, (usize, usize)), usize> = mesh
            .basis
            .iter()
            .enumerate()
            .map(|(i, b)| ((b.dir, b.tail), i))
            .collect();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for (i, b) in mesh.basis.iter().enumerate() {
            // Image rooftop and the sign relating its orientation to ours.
            let (image_tail, sign) = match b.dir {
                Direction::X => (mirror(b.tail), 1.0),
                Direction::Y => (mirror(b.head), -1.0),
            };
            let j = *index.get(&(b.dir, image_tail))?;
            if j < i {
                continue;
            }
            if j == i {
                let combo = Combo { terms: [(i, 1.0), (i, 0.0)], len: 1 };
                if sign > 0.0 {
                    even.push(combo);
                } else {
                    odd.push(combo);
                }
            } else {
                even.push(Combo { terms: [(i, h), (j, sign * h)], len: 2 });
                odd.push(Combo { terms: [(i, h), (j, -sign * h)], len: 2 });
            }
        }
        Some(Self { even, odd })
    }

    pub fn block_sizes(&self) -> (usize, usize) {
        (self.even.len(), self.odd.len())
    }

    /// `cᵀ A⁻¹ c` restricted to one symmetry block.
    fn block_term(z: &ImpedanceMatrix, combos: &[Combo], probe: usize) -> Result<Complex64> {
        if combos.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let n = combos.len();
        let project = |a: &Combo, b: &Combo| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(k, ca) in a.terms() {
                for &(l, cb) in b.terms() {
                    acc += z.entries[(k, l)] * (ca * cb);
                }
            }
            acc
        };
        let a = Mat::from_fn(n, n, |i, j| project(&combos[i], &combos[j]));
        let c = Mat::from_fn(n, 1, |i, _| {
            combos[i].terms().iter().map(|&(k, ck)| z.entries[(k, probe)] * ck).sum::<Complex64>()
        });
        let x = a.partial_piv_lu().solve(&c);
        Ok((0..n).map(|i| c[(i, 0)] * x[(i, 0)]).sum())
    }

    /// Input impedance seen by a unit delta-gap on the probe unknown.
    pub fn input_impedance(&self, z: &ImpedanceMatrix, mesh: &Mesh) -> Result<Complex64> {
        let probe = mesh.feed_basis_index;
        let singular = || Error::SingularSystem {
            freq_hz: z.frequency_hz,
            geometry_hash: z.geometry_hash,
        };
        if !z.is_finite() {
            return Err(singular());
        }
        let zin = z.entries[(probe, probe)]
            - Self::block_term(z, &self.even, probe)?
            - Self::block_term(z, &self.odd, probe)?;
        if zin.is_finite() && zin.norm() > 0.0 {
            Ok(zin)
        } else {
            Err(singular())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em_mom::{assemble_impedance, build_mesh, solve_input_impedance};
    use crate::geometry::{rasterize, CellMask, DesignSpace, FeedCell, PhysicalGeometry};
    use approx::assert_relative_eq;

    #[test]
    fn matches_full_solve() {
        let space = DesignSpace::default().with_grid(10);
        let mut g = PhysicalGeometry::rectangle(31.0, 27.0, &space);
        g.slot_w_mm = 9.0;
        g.slot_offset_mm = 6.0;
        g.slot_h_mm = 14.0;
        let mesh = build_mesh(&rasterize(&g, &space).unwrap()).unwrap();
        let red = MirrorReduction::new(&mesh).expect("centered slot is symmetric");
        let (e, o) = red.block_sizes();
        assert_eq!(e + o, mesh.rooftop_count());
        for &f in &[1.3e9, 2.9e9, 5.5e9] {
            let z = assemble_impedance(&mesh, f, &space.substrate);
            let full = solve_input_impedance(&z, &mesh, 1.0).unwrap();
            let fast = red.input_impedance(&z, &mesh).unwrap();
            assert_relative_eq!(fast.re, full.re, max_relative = 1e-8, epsilon = 1e-9);
            assert_relative_eq!(fast.im, full.im, max_relative = 1e-8, epsilon = 1e-9);
        }
    }

    #[test]
    fn odd_sized_grid_is_handled() {
        let mask = CellMask {
            nx: 3,
            ny: 3,
            metal: vec![true; 9],
            cell_dx_mm: 2.0,
            cell_dy_mm: 2.0,
            feed: FeedCell { ix: 0, iy: 1 },
        };
        let mesh = build_mesh(&mask).unwrap();
        let red = MirrorReduction::new(&mesh).unwrap();
        let z = assemble_impedance(&mesh, 2e9, &Default::default());
        let full = solve_input_impedance(&z, &mesh, 1.0).unwrap();
        let fast = red.input_impedance(&z, &mesh).unwrap();
        assert_relative_eq!(fast.re, full.re, max_relative = 1e-8);
        assert_relative_eq!(fast.im, full.im, max_relative = 1e-8);
    }

    #[test]
    fn asymmetric_mask_is_rejected() {
        let mask = CellMask {
            nx: 2,
            ny: 2,
            metal: vec![true, true, true, false],
            cell_dx_mm: 1.0,
            cell_dy_mm: 1.0,
            feed: FeedCell { ix: 0, iy: 0 },
        };
        assert!(MirrorReduction::new(&build_mesh(&mask).unwrap()).is_none());
    }
}
