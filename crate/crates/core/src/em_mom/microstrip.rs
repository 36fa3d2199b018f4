//! Closed-form microstrip relations.
//!
//! Effective permittivity (Hammerstad, valid for `W/h >= 1`):
//!
//! ```text
//! eps_eff = (eps_r + 1)/2 + (eps_r - 1)/2 * (1 + 12 h / W)^(-1/2)
//! ```
//!
//! Open-end length extension of a patch edge:
//!
//! ```text
//! dL = 0.412 h (eps_eff + 0.3)(W/h + 0.264) / ((eps_eff - 0.258)(W/h + 0.8))
//! ```
//!
//! The solver folds the substrate into a homogeneous medium of permittivity
//! `eps_eff`; the same function drives the cavity-model estimate
//! `f_r = c0 / (2 (L + 2 dL) sqrt(eps_eff))`.

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Vacuum permittivity (F/m), tied to `C0` and `MU0` so that `k^2 = w^2 mu eps` holds exactly.
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);

/// Effective permittivity of a strip of width `width` over a substrate of
/// height `height` (same length unit).
pub fn effective_permittivity(epsilon_r: f64, width: f64, height: f64) -> f64 {
    let u = width / height;
    0.5 * (epsilon_r + 1.0) + 0.5 * (epsilon_r - 1.0) / (1.0 + 12.0 / u).sqrt()
}

/// Fringing length extension at each radiating edge (same unit as `height`).
pub fn fringe_extension(epsilon_r: f64, width: f64, height: f64) -> f64 {
    let e = effective_permittivity(epsilon_r, width, height);
    let u = width / height;
    0.412 * height * (e + 0.3) * (u + 0.264) / ((e - 0.258) * (u + 0.8))
}

/// Dominant-mode resonance of a rectangular patch, lengths in metres.
pub fn cavity_resonance_hz(length: f64, width: f64, height: f64, epsilon_r: f64) -> f64 {
    let e = effective_permittivity(epsilon_r, width, height);
    let dl = fringe_extension(epsilon_r, width, height);
    C0 / (2.0 * (length + 2.0 * dl) * e.sqrt())
}
