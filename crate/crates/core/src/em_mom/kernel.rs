//! Green's-function tables on the uniform cell lattice.
//!
//! Every interaction in the moment matrix is a function of the lattice offset
//! between two basis functions only, so kernels are tabulated once per
//! frequency on half-cell offsets and the matrix is filled by lookup.
//!
//! The substrate-backed patch is modelled as a sheet in a homogeneous medium
//! of permittivity `eps_eff` with the ground plane replaced by an opposite
//! image sheet at distance `2h`:
//!
//! ```text
//! K(R) = [e^{-jkR}/R - e^{-jkR'}/R'] / 4π,   R' = sqrt(R^2 + 4h^2)
//! ```
//!
//! The reactive part `cos(kR)/R` is split into the static `1/R` term,
//! integrated analytically over a quarter cell, and the smooth remainder
//! `(cos kR - 1)/R`, sampled at points. It is tested with 2x2 points per
//! cell. The resistive part `sin(kR)/R` is smooth; it is sampled with current
//! at edge midpoints and charge at cell centers. That pairing makes the
//! discrete charge the exact divergence of the discrete current, so the real
//! part of the assembled matrix is positive semidefinite and the computed
//! input resistance can never go negative.

use num_complex::Complex64;

use super::microstrip::{C0, EPS0, MU0};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Radius of the feed probe (m).
pub const PROBE_RADIUS: f64 = 0.5e-3;

/// Pair-correlation of the rooftop ramp sampled at the 4 quarter points
/// across its two cells, indexed by offset `-3..=3` (half cells).
const RAMP_CORR: [f64; 7] = [0.0625, 0.375, 0.9375, 1.25, 0.9375, 0.375, 0.0625];
/// Pair-correlation of a flat profile sampled at 2 points per cell, offsets `-1..=1`.
const FLAT_CORR: [f64; 3] = [1.0, 2.0, 1.0];

/// `∫∫ (x² + y² + z²)^(-1/2) dx dy` over the rectangle centered at
/// `(x0, y0)` with half-sides `a`, `b`.
pub fn rect_potential(x0: f64, y0: f64, a: f64, b: f64, z: f64) -> f64 {
    let f = |x: f64, y: f64| antiderivative(x, y, z);
    f(x0 + a, y0 + b) - f(x0 - a, y0 + b) - f(x0 + a, y0 - b) + f(x0 - a, y0 - b)
}

fn antiderivative(x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y + z * z).sqrt();
    let mut acc = 0.0;
    if x != 0.0 {
        acc += x * ln_sum(y, r, x * x + z * z);
    }
    if y != 0.0 {
        acc += y * ln_sum(x, r, y * y + z * z);
    }
    if z != 0.0 {
        acc -= z * (x * y / (z * r)).atan();
    }
    acc
}

/// `ln(t + r)` with `r = sqrt(t² + rest)`, cancellation-free for `t < 0`.
fn ln_sum(t: f64, r: f64, rest: f64) -> f64 {
    if t >= 0.0 {
        (t + r).ln()
    } else {
        (rest / (r - t)).ln()
    }
}

/// Frequency-independent part: the quarter-cell-averaged static kernel
/// `1/R - 1/R'` on half-cell offsets.
#[derive(Debug, Clone)]
pub struct StaticKernel {
    nu: usize,
    nv: usize,
    dx: f64,
    dy: f64,
    height: f64,
    table: Vec<f64>,
}

impl StaticKernel {
    /// `dx`, `dy`: cell size; `height`: substrate height (all metres).
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, height: f64) -> Self {
        // Offsets reach 2n + 1 half cells when a ramp stencil sits at the far edge.
        let nu = 2 * nx + 4;
        let nv = 2 * ny + 4;
        let (a, b) = (0.25 * dx, 0.25 * dy);
        let area = 4.0 * a * b;
        let mut table = Vec::with_capacity(nu * nv);
        for u in 0..nu {
            for v in 0..nv {
                let (x0, y0) = (0.5 * dx * u as f64, 0.5 * dy * v as f64);
                let direct = rect_potential(x0, y0, a, b, 0.0);
                let image = rect_potential(x0, y0, a, b, 2.0 * height);
                table.push((direct - image) / area);
            }
        }
        Self {
            nu,
            nv,
            dx,
            dy,
            height,
            table,
        }
    }

    fn at(&self, u: usize, v: usize) -> f64 {
        self.table[u * self.nv + v]
    }
}

/// Complex interaction tables at one frequency, indexed by cell offset
/// `(|di|, |dj|)`, already scaled for basis functions normalized to unit
/// total current across their shared edge.
#[derive(Debug, Clone)]
pub struct FrequencyKernel {
    nx: usize,
    ny: usize,
    /// `x`-`x` vector-potential interaction.
    pub(crate) vx: Vec<Complex64>,
    /// `y`-`y` vector-potential interaction.
    pub(crate) vy: Vec<Complex64>,
    /// Cell-to-cell scalar-potential interaction per unit charge density.
    pub(crate) charge: Vec<Complex64>,
    /// Vector-potential self term of the vertical feed probe.
    pub(crate) probe: Complex64,
}

impl FrequencyKernel {
    pub fn new(stat: &StaticKernel, nx: usize, ny: usize, freq_hz: f64, eps_eff: f64) -> Self {
        assert!(freq_hz > 0.0, "frequency must be positive");
        let omega = 2.0 * std::f64::consts::PI * freq_hz;
        let k = omega * eps_eff.sqrt() / C0;
        let eps = EPS0 * eps_eff;
        let (dx, dy) = (stat.dx, stat.dy);
        let sep2 = 4.0 * stat.height * stat.height;

        // Point-sampled smooth kernels on half-cell offsets.
        let (nu, nv) = (stat.nu, stat.nv);
        let mut reactive = Vec::with_capacity(nu * nv);
        let mut resistive = Vec::with_capacity(nu * nv);
        for u in 0..nu {
            for v in 0..nv {
                let (x, y) = (0.5 * dx * u as f64, 0.5 * dy * v as f64);
                let r = (x * x + y * y).sqrt();
                let ri = (r * r + sep2).sqrt();
                let (dyn_direct, sinc_direct) = if r == 0.0 {
                    (0.0, k)
                } else {
                    let s = (0.5 * k * r).sin();
                    (-2.0 * s * s / r, (k * r).sin() / r)
                };
                let si = (0.5 * k * ri).sin();
                let dyn_image = -2.0 * si * si / ri;
                let sinc_image = (k * ri).sin() / ri;
                reactive.push((stat.at(u, v) + dyn_direct - dyn_image) / FOUR_PI);
                resistive.push((sinc_direct - sinc_image) / FOUR_PI);
            }
        }
        let kr = |u: i64, v: i64| reactive[u.unsigned_abs() as usize * nv + v.unsigned_abs() as usize];
        let ks = |u: usize, v: usize| resistive[u * nv + v];

        let w = 0.25 * dx * dy;
        let w2 = w * w;
        let cell_area2 = (dx * dy) * (dx * dy);
        let mut vx = Vec::with_capacity(nx * ny);
        let mut vy = Vec::with_capacity(nx * ny);
        let mut charge = Vec::with_capacity(nx * ny);
        for di in 0..nx as i64 {
            for dj in 0..ny as i64 {
                let mut t_xx = 0.0;
                let mut t_yy = 0.0;
                for (a, ramp) in RAMP_CORR.iter().enumerate() {
                    let d = a as i64 - 3;
                    for (b, flat) in FLAT_CORR.iter().enumerate() {
                        let e = b as i64 - 1;
                        t_xx += ramp * flat * kr(2 * di + d, 2 * dj + e);
                        t_yy += flat * ramp * kr(2 * di + e, 2 * dj + d);
                    }
                }
                let mut c = 0.0;
                for (a, fa) in FLAT_CORR.iter().enumerate() {
                    for (b, fb) in FLAT_CORR.iter().enumerate() {
                        c += fa * fb * kr(2 * di + a as i64 - 1, 2 * dj + b as i64 - 1);
                    }
                }
                let rad = cell_area2 * ks(2 * di as usize, 2 * dj as usize);
                let vec_x = Complex64::new(rad, w2 * t_xx) * (omega * MU0 / (dy * dy));
                let vec_y = Complex64::new(rad, w2 * t_yy) * (omega * MU0 / (dx * dx));
                let q = Complex64::new(rad, w2 * c) * (-1.0 / (omega * eps * cell_area2));
                vx.push(vec_x);
                vy.push(vec_y);
                charge.push(q);
            }
        }
        let probe = probe_self(k, stat.height, PROBE_RADIUS) * (omega * MU0);
        Self {
            nx,
            ny,
            vx,
            vy,
            charge,
            probe,
        }
    }

    #[inline]
    pub(crate) fn index(&self, a: (usize, usize), b: (usize, usize)) -> usize {
        debug_assert!(a.0 < self.nx && b.0 < self.nx && a.1 < self.ny && b.1 < self.ny);
        a.0.abs_diff(b.0) * self.ny + a.1.abs_diff(b.1)
    }
}

/// `∫₀ʰ dz ∫₋ₕʰ dz' e^{-jkR} / 4πR` for a wire of radius `a` standing on the
/// ground plane (the `[-h, 0]` half is its image). The resistive part is
/// sampled at the two segment midpoints to stay consistent with the sheet.
pub(crate) fn probe_self(k: f64, h: f64, a: f64) -> Complex64 {
    let stat = 2.0 * h * (2.0 * h / a).asinh() - (4.0 * h * h + a * a).sqrt() + a;
    const NZ: usize = 32;
    let step = h / NZ as f64;
    let mut dynamic = 0.0;
    for i in 0..NZ {
        let z = (i as f64 + 0.5) * step;
        for j in 0..2 * NZ {
            let zp = -h + (j as f64 + 0.5) * step;
            let r = ((z - zp).powi(2) + a * a).sqrt();
            let s = (0.5 * k * r).sin();
            dynamic -= 2.0 * s * s / r;
        }
    }
    dynamic *= step * step;
    let resistive = h * h * (k + (k * h).sin() / h);
    Complex64::new(resistive, stat + dynamic) / FOUR_PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Midpoint-rule quadrature of 1/r over a rectangle, fine enough for
    /// offsets where the integrand is smooth.
    fn quadrature(x0: f64, y0: f64, a: f64, b: f64, z: f64, n: usize) -> f64 {
        let (hx, hy) = (2.0 * a / n as f64, 2.0 * b / n as f64);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = x0 - a + (i as f64 + 0.5) * hx;
                let y = y0 - b + (j as f64 + 0.5) * hy;
                acc += 1.0 / (x * x + y * y + z * z).sqrt();
            }
        }
        acc * hx * hy
    }

    #[test]
    fn rect_potential_matches_quadrature_off_axis() {
        for &(x0, y0, z) in &[(3.0, 1.0, 0.0), (0.0, 2.5, 0.0), (1.0, -2.0, 0.7), (0.0, 0.0, 1.3)] {
            let exact = rect_potential(x0, y0, 0.5, 0.8, z);
            let approx = quadrature(x0, y0, 0.5, 0.8, z, 400);
            assert_relative_eq!(exact, approx, max_relative = 1e-5);
        }
    }

    #[test]
    fn rect_potential_self_term_closed_form() {
        // Centered square of side 2a: 8 a asinh(1).
        let a = 0.3;
        let exact = rect_potential(0.0, 0.0, a, a, 0.0);
        assert_relative_eq!(exact, 8.0 * a * 1f64.asinh(), max_relative = 1e-14);
        // Polar-coordinate oracle for a rectangle: 4[a asinh(b/a) + b asinh(a/b)].
        let (a, b) = (0.2, 0.7);
        let exact = rect_potential(0.0, 0.0, a, b, 0.0);
        let oracle = 4.0 * (a * (b / a).asinh() + b * (a / b).asinh());
        assert_relative_eq!(exact, oracle, max_relative = 1e-14);
    }

    #[test]
    fn rect_potential_is_symmetric_in_offset_sign() {
        let p = rect_potential(2.0, 1.5, 0.4, 0.3, 0.2);
        assert_relative_eq!(p, rect_potential(-2.0, 1.5, 0.4, 0.3, 0.2), max_relative = 1e-13);
        assert_relative_eq!(p, rect_potential(2.0, -1.5, 0.4, 0.3, 0.2), max_relative = 1e-13);
    }

    #[test]
    fn far_field_static_table_tends_to_point_kernel() {
        let (dx, dy, h) = (1e-3, 1.5e-3, 0.8e-3);
        let stat = StaticKernel::new(16, 16, dx, dy, h);
        let (u, v) = (30usize, 20usize);
        let (x, y) = (0.5 * dx * u as f64, 0.5 * dy * v as f64);
        let r = (x * x + y * y).sqrt();
        let point = 1.0 / r - 1.0 / (r * r + 4.0 * h * h).sqrt();
        assert_relative_eq!(stat.at(u, v), point, max_relative = 1e-3);
    }
}
