//! Gaussian-process regression with a Matérn-5/2 kernel.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::geometry::N_PARAMS;

/// Jitter added to the kernel diagonal (standardized units).
const NUGGET: f64 = 1e-6;
/// Candidate length scales, log-spaced.
const N_LENGTH_SCALES: usize = 20;
const LENGTH_SCALE_RANGE: (f64, f64) = (0.02, 5.0);

pub fn matern52(r: f64, length_scale: f64) -> f64 {
    let s = 5f64.sqrt() * r / length_scale;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn distance(a: &[f64; N_PARAMS], b: &[f64; N_PARAMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn length_scale_grid() -> [f64; N_LENGTH_SCALES] {
    let (lo, hi) = LENGTH_SCALE_RANGE;
    let ratio = (hi / lo).ln() / (N_LENGTH_SCALES - 1) as f64;
    std::array::from_fn(|i| lo * (ratio * i as f64).exp())
}

/// Fitted model. Targets are standardized internally; the signal variance is
/// profiled out of the marginal likelihood for each candidate length scale.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    x: Vec<[f64; N_PARAMS]>,
    alpha: Vec<f64>,
    chol: faer::linalg::solvers::Llt<f64>,
    y_mean: f64,
    y_scale: f64,
    signal_var: f64,
    pub length_scale: f64,
    pub log_marginal_likelihood: f64,
}

impl GaussianProcess {
    pub fn fit(x: &[[f64; N_PARAMS]], y: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::SurrogateFit(format!("{} inputs, {} targets", x.len(), y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::SurrogateFit("non-finite training score".into()));
        }
        let n = y.len();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let ys = Mat::from_fn(n, 1, |i, _| (y[i] - y_mean) / y_scale);

        let mut best: Option<Self> = None;
        for length_scale in length_scale_grid() {
            let k = Mat::from_fn(n, n, |i, j| {
                matern52(distance(&x[i], &x[j]), length_scale) + if i == j { NUGGET } else { 0.0 }
            });
            let Ok(chol) = k.llt(Side::Lower) else { continue };
            let alpha = chol.solve(&ys);
            let quad: f64 = (0..n).map(|i| ys[(i, 0)] * alpha[(i, 0)]).sum();
            let signal_var = (quad / n as f64).max(1e-12);
            let log_det: f64 = (0..n).map(|i| chol.L()[(i, i)].ln()).sum::<f64>() * 2.0;
            let nf = n as f64;
            let lml = -0.5 * nf * signal_var.ln()
                - 0.5 * log_det
                - 0.5 * nf * (1.0 + (2.0 * std::f64::consts::PI).ln());
            if !lml.is_finite() || best.as_ref().is_some_and(|b| b.log_marginal_likelihood >= lml) {
                continue;
            }
            best = Some(Self {
                x: x.to_vec(),
                alpha: (0..n).map(|i| alpha[(i, 0)]).collect(),
                chol,
                y_mean,
                y_scale,
                signal_var,
                length_scale,
                log_marginal_likelihood: lml,
            });
        }
        best.ok_or_else(|| Error::SurrogateFit("kernel matrix not positive definite".into()))
    }

    /// Posterior mean and standard deviation at each query point.
    pub fn predict(&self, queries: &[[f64; N_PARAMS]]) -> Vec<(f64, f64)> {
        let n = self.x.len();
        let kstar = Mat::from_fn(n, queries.len(), |i, j| matern52(distance(&self.x[i], &queries[j]), self.length_scale));
        let v = self.chol.solve(&kstar);
        (0..queries.len())
            .map(|j| {
                let mean: f64 = (0..n).map(|i| kstar[(i, j)] * self.alpha[i]).sum();
                let reduction: f64 = (0..n).map(|i| kstar[(i, j)] * v[(i, j)]).sum();
                let var = (self.signal_var * (1.0 + NUGGET - reduction)).max(0.0);
                (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
            })
            .collect()
    }
}
