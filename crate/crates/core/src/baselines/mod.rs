//! Comparison optimizers: uniform random search and two surrogate-model
//! searches (Gaussian process, extra-trees ensemble) driven by expected
//! improvement over a random candidate pool.

pub mod forest;
pub mod gp;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NormalizedParams, N_PARAMS};
use crate::uce::{ConvergenceTrace, OptimizationResult, TraceRecord};

pub use forest::ExtraTrees;
pub use gp::GaussianProcess;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dummy,
    Gp,
    Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub method: Method,
    pub budget: usize,
    pub n_initial: usize,
    pub n_candidates: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: Method::Dummy,
            budget: 200,
            n_initial: 10,
            n_candidates: 1000,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.method != Method::Dummy {
            if self.n_initial == 0 || self.n_initial > self.budget {
                return Err(Error::Config(format!(
                    "n_initial must lie in 1..={}, got {}",
                    self.budget, self.n_initial
                )));
            }
            if self.n_candidates < 100 {
                return Err(Error::Config(format!(
                    "n_candidates must be at least 100, got {}",
                    self.n_candidates
                )));
            }
        }
        Ok(())
    }
}

fn uniform_point(rng: &mut impl Rng) -> NormalizedParams {
    NormalizedParams::from_unit(std::array::from_fn(|_| rng.gen()))
}

/// Expected improvement below `best` for a Gaussian prediction `(mean, sd)`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let gain = best - mean;
    if !(sd > 0.0) {
        return gain.max(0.0);
    }
    let z = gain / sd;
    let cdf = 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (gain * cdf + sd * pdf).max(0.0)
}

/// Running-minimum bookkeeping shared by the baselines; one trace row per
/// evaluation.
struct Tracker {
    start: Instant,
    best: Option<(NormalizedParams, f64)>,
    trace: ConvergenceTrace,
    xs: Vec<[f64; N_PARAMS]>,
    ys: Vec<f64>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            best: None,
            trace: ConvergenceTrace::default(),
            xs: Vec::new(),
            ys: Vec::new(),
        }
    }

    fn record(&mut self, p: NormalizedParams, score: f64) {
        if self.best.is_none_or(|(_, b)| score < b) {
            self.best = Some((p, score));
        }
        self.trace.records.push(TraceRecord {
            iteration: self.ys.len(),
            best_so_far: self.best.map_or(score, |b| b.1),
            iter_best: score,
            elapsed_s: self.start.elapsed().as_secs_f64(),
            mu: None,
            sigma: None,
        });
        self.xs.push(*p.values());
        self.ys.push(score);
    }

    fn finish(self) -> OptimizationResult {
        let (best, best_score) = self.best.expect("budget is positive");
        OptimizationResult {
            best,
            best_score,
            evaluations: self.ys.len(),
            trace: self.trace,
        }
    }
}

/// `budget` i.i.d. uniform points, evaluated concurrently after sampling.
pub fn random_search<F>(objective: F, budget: usize, seed: u64) -> Result<OptimizationResult>
where
    F: Fn(&NormalizedParams) -> f64 + Sync,
{
    if budget == 0 {
        return Err(Error::Config("budget must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<NormalizedParams> = (0..budget).map(|_| uniform_point(&mut rng)).collect();
    let mut tracker = Tracker::new();
    let scores: Vec<f64> = points.par_iter().map(&objective).collect();
    for (p, s) in points.into_iter().zip(scores) {
        tracker.record(p, s);
    }
    Ok(tracker.finish())
}

/// Mean/sd predictor fitted on the observations so far.
fn fit_and_predict(
    method: Method,
    xs: &[[f64; N_PARAMS]],
    ys: &[f64],
    candidates: &[[f64; N_PARAMS]],
    rng: &mut impl Rng,
) -> Result<Vec<(f64, f64)>> {
    match method {
        Method::Gp => Ok(GaussianProcess::fit(xs, ys)?.predict(candidates)),
        Method::Forest => Ok(ExtraTrees::fit(xs, ys, rng)?.predict(candidates)),
        Method::Dummy => unreachable!("random search has no surrogate"),
    }
}

/// Random warm-up followed by one expected-improvement pick per round.
/// `Method::Dummy` is routed to [`random_search`].
pub fn surrogate_optimize<F>(objective: F, cfg: &BaselineConfig) -> Result<OptimizationResult>
where
    F: Fn(&NormalizedParams) -> f64 + Sync,
{
    cfg.validate()?;
    if cfg.method == Method::Dummy {
        return random_search(objective, cfg.budget, cfg.seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tracker = Tracker::new();
    let warmup: Vec<NormalizedParams> = (0..cfg.n_initial).map(|_| uniform_point(&mut rng)).collect();
    let scores: Vec<f64> = warmup.par_iter().map(&objective).collect();
    for (p, s) in warmup.into_iter().zip(scores) {
        tracker.record(p, s);
    }

    for round in cfg.n_initial..cfg.budget {
        let candidates: Vec<[f64; N_PARAMS]> =
            (0..cfg.n_candidates).map(|_| std::array::from_fn(|_| rng.gen())).collect();
        let incumbent = tracker.best.map_or(f64::INFINITY, |b| b.1);
        let next = match fit_and_predict(cfg.method, &tracker.xs, &tracker.ys, &candidates, &mut rng) {
            Ok(pred) => {
                let mut pick = 0;
                let mut best_ei = f64::NEG_INFINITY;
                for (i, (m, s)) in pred.iter().enumerate() {
                    let ei = expected_improvement(*m, *s, incumbent);
                    if ei > best_ei {
                        best_ei = ei;
                        pick = i;
                    }
                }
                NormalizedParams::from_unit(candidates[pick])
            }
            Err(e) => {
                log::warn!("round {round}: surrogate fit failed ({e}); sampling uniformly");
                uniform_point(&mut rng)
            }
        };
        let score = objective(&next);
        tracker.record(next, score);
    }
    Ok(tracker.finish())
}
