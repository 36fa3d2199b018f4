//! Uniform cross-entropy search over the unit cube.
//!
//! Each iteration turns the current per-dimension mean and standard
//! deviation into a box `[μ - σ√3, μ + σ√3]` (the uniform distribution with
//! those moments), clipped to `[0, 1]`, samples a population uniformly from
//! it, and refits `μ`, `σ` to the best `n_elite` samples.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NormalizedParams, N_PARAMS};

/// Lower bound applied to every σ component after an update.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Half-width of a uniform distribution per unit standard deviation.
const HALF_WIDTH: f64 = 1.732_050_807_568_877_2; // √12 / 2

/// Range for randomly drawn initial means.
const MU_INIT_RANGE: (f64, f64) = (0.25, 0.75);

/// Search settings. `mu_init = None` draws the initial means from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UceConfig {
    pub n_samples: usize,
    pub elite_frac: f64,
    pub n_iterations: usize,
    pub mu_init: Option<[f64; N_PARAMS]>,
    pub sigma_init: [f64; N_PARAMS],
    pub l_max: f64,
    pub seed: u64,
}

impl Default for UceConfig {
    fn default() -> Self {
        Self {
            n_samples: 30,
            elite_frac: 0.1,
            n_iterations: 20,
            mu_init: None,
            sigma_init: [0.3; N_PARAMS],
            l_max: 1.0,
            seed: 0,
        }
    }
}

impl UceConfig {
    /// `ceil(elite_frac * n_samples)`, with products like `0.1 * 30` that land
    /// a rounding error above an integer treated as that integer.
    pub fn n_elite(&self) -> usize {
        let raw = self.elite_frac * self.n_samples as f64;
        ((raw - 1e-9).ceil() as usize).clamp(1, self.n_samples.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_iterations == 0 {
            return Err(Error::Config("n_samples and n_iterations must be positive".into()));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return Err(Error::Config(format!(
                "elite_frac must lie in (0, 1], got {}",
                self.elite_frac
            )));
        }
        if !(self.l_max > 0.0 && self.l_max <= 1.0) {
            return Err(Error::Config(format!("l_max must lie in (0, 1], got {}", self.l_max)));
        }
        if self.sigma_init.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Config("sigma_init components must be positive".into()));
        }
        if let Some(mu) = self.mu_init {
            if mu.iter().any(|m| !m.is_finite()) {
                return Err(Error::Config("mu_init components must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Current sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionState {
    pub mu: [f64; N_PARAMS],
    pub sigma: [f64; N_PARAMS],
    pub iteration: usize,
}

/// Per-dimension sampling box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: [f64; N_PARAMS],
    pub upper: [f64; N_PARAMS],
}

/// One row of a convergence trace. `mu`/`sigma` are the distribution after
/// the iteration's update and are absent for the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub best_so_far: f64,
    pub iter_best: f64,
    pub elapsed_s: f64,
    pub mu: Option<[f64; N_PARAMS]>,
    pub sigma: Option<[f64; N_PARAMS]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn best_so_far(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_so_far).collect()
    }

    /// CSV `iteration,best_so_far,iter_best,elapsed_s`. With `timing` off the
    /// elapsed column is left empty so the file depends only on the seed.
    pub fn to_csv_string(&self, timing: bool) -> String {
        let mut out = String::from("iteration,best_so_far,iter_best,elapsed_s\n");
        for r in &self.records {
            let elapsed = if timing { format!("{:.6}", r.elapsed_s) } else { String::new() };
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration,
                crate::em_mom::sig9(r.best_so_far),
                crate::em_mom::sig9(r.iter_best),
                elapsed
            ));
        }
        out
    }
}

/// Outcome of any optimizer in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: NormalizedParams,
    pub best_score: f64,
    pub trace: ConvergenceTrace,
    pub evaluations: usize,
}

/// Final distribution and incumbent, written next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub mu: Option<[f64; N_PARAMS]>,
    pub sigma: Option<[f64; N_PARAMS]>,
    pub best: NormalizedParams,
    pub best_score: f64,
}

impl OptimizationResult {
    pub fn final_state(&self) -> FinalState {
        let last = self.trace.records.last();
        FinalState {
            mu: last.and_then(|r| r.mu),
            sigma: last.and_then(|r| r.sigma),
            best: self.best,
            best_score: self.best_score,
        }
    }

    pub fn write_trace(&self, csv_path: &Path, json_path: &Path, timing: bool) -> Result<()> {
        std::fs::write(csv_path, self.trace.to_csv_string(timing)).map_err(|e| Error::io(csv_path, e))?;
        let json = serde_json::to_string_pretty(&self.final_state())?;
        std::fs::write(json_path, json + "\n").map_err(|e| Error::io(json_path, e))
    }
}

/// Box of the uniform distribution with the state's moments, clipped to the
/// unit interval; the first two components are additionally capped at `l_max`.
pub fn uniform_bounds(state: &DistributionState, l_max: f64) -> Bounds {
    let mut lower = [0.0; N_PARAMS];
    let mut upper = [0.0; N_PARAMS];
    for i in 0..N_PARAMS {
        lower[i] = (state.mu[i] - state.sigma[i] * HALF_WIDTH).clamp(0.0, 1.0);
        upper[i] = (state.mu[i] + state.sigma[i] * HALF_WIDTH).clamp(0.0, 1.0);
        if i < 2 {
            lower[i] = lower[i].min(l_max);
            upper[i] = upper[i].min(l_max);
        }
    }
    Bounds { lower, upper }
}

/// Draws `n` points uniformly from `bounds`, dimension by dimension.
pub fn sample_population(bounds: &Bounds, n: usize, rng: &mut impl Rng) -> Vec<NormalizedParams> {
    let mut columns = [(); N_PARAMS].map(|_| Vec::with_capacity(n));
    for (i, col) in columns.iter_mut().enumerate() {
        let (a, b) = (bounds.lower[i], bounds.upper[i]);
        for _ in 0..n {
            let u: f64 = rng.gen();
            col.push(a + (b - a) * u);
        }
    }
    (0..n)
        .map(|j| NormalizedParams::from_unit(std::array::from_fn(|i| columns[i][j])))
        .collect()
}

/// Indices of the `n_elite` lowest scores, ties going to the lower index.
pub fn select_elite(scores: &[f64], n_elite: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order.truncate(n_elite.min(scores.len()));
    order
}

/// Mean and population standard deviation of the elite, σ floored.
pub fn update_distribution(elite: &[NormalizedParams], iteration: usize) -> DistributionState {
    assert!(!elite.is_empty(), "elite set must not be empty");
    let n = elite.len() as f64;
    let mut mu = [0.0; N_PARAMS];
    let mut sigma = [0.0; N_PARAMS];
    for i in 0..N_PARAMS {
        mu[i] = elite.iter().map(|p| p.get(i)).sum::<f64>() / n;
        let var = elite.iter().map(|p| (p.get(i) - mu[i]).powi(2)).sum::<f64>() / n;
        sigma[i] = var.sqrt().max(SIGMA_FLOOR);
    }
    DistributionState { mu, sigma, iteration }
}

/// Runs the search; the objective is called exactly
/// `n_samples * n_iterations` times and may be evaluated concurrently.
pub fn optimize<F>(objective: F, cfg: &UceConfig) -> Result<OptimizationResult>
where
    F: Fn(&NormalizedParams) -> f64 + Sync,
{
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mu = cfg
        .mu_init
        .unwrap_or_else(|| std::array::from_fn(|_| rng.gen_range(MU_INIT_RANGE.0..=MU_INIT_RANGE.1)));
    let mut state = DistributionState {
        mu,
        sigma: cfg.sigma_init,
        iteration: 0,
    };
    let n_elite = cfg.n_elite();

    let mut best: Option<NormalizedParams> = None;
    let mut best_score = f64::INFINITY;
    let mut trace = ConvergenceTrace::default();
    let mut evaluations = 0;
    for iteration in 0..cfg.n_iterations {
        let bounds = uniform_bounds(&state, cfg.l_max);
        let samples = sample_population(&bounds, cfg.n_samples, &mut rng);
        let scores: Vec<f64> = samples.par_iter().map(&objective).collect();
        evaluations += samples.len();

        let (idx, iter_best) = scores
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("population is non-empty");
        if iter_best < best_score || best.is_none() {
            best_score = iter_best;
            best = Some(samples[idx]);
        }

        let elite: Vec<NormalizedParams> =
            select_elite(&scores, n_elite).into_iter().map(|i| samples[i]).collect();
        state = update_distribution(&elite, iteration + 1);
        log::debug!("uce iteration {iteration}: best {best_score:.6}, iteration best {iter_best:.6}");
        trace.records.push(TraceRecord {
            iteration,
            best_so_far: best_score,
            iter_best,
            elapsed_s: start.elapsed().as_secs_f64(),
            mu: Some(state.mu),
            sigma: Some(state.sigma),
        });
    }
    Ok(OptimizationResult {
        best: best.expect("at least one iteration ran"),
        best_score,
        trace,
        evaluations,
    })
}

/// `||x - c·1||²`, handy for exercising optimizers.
pub fn sphere(p: &NormalizedParams, center: f64) -> f64 {
    p.values().iter().map(|v| (v - center).powi(2)).sum()
}
