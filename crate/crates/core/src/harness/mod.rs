//! End-to-end runs: target loading, the MoM-backed objective, restarts,
//! artifacts and the comparison table.

pub mod plot;
pub mod target;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{surrogate_optimize, BaselineConfig, Method};
use crate::em_mom::{sig9, sweep, FrequencyGrid, S11Curve};
use crate::error::{Error, Result};
use crate::geometry::{denormalize, DesignSpace, NormalizedParams, PhysicalGeometry};
use crate::loss::{inverted_huber, l2_error, residual, TargetCurve, PENALTY_SCORE};
use crate::uce::{self, OptimizationResult, UceConfig};

pub use plot::export_plot_data;
pub use target::two_band_target;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerName {
    Uce,
    Dummy,
    Gp,
    Forest,
}

impl OptimizerName {
    pub const ALL: [OptimizerName; 4] = [Self::Uce, Self::Gp, Self::Forest, Self::Dummy];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Uce => "uce",
            Self::Dummy => "dummy",
            Self::Gp => "gp",
            Self::Forest => "forest",
        }
    }
}

impl std::str::FromStr for OptimizerName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uce" => Ok(Self::Uce),
            "dummy" => Ok(Self::Dummy),
            "gp" => Ok(Self::Gp),
            "forest" => Ok(Self::Forest),
            other => Err(Error::Config(format!(
                "unknown optimizer `{other}` (expected uce, dummy, gp or forest)"
            ))),
        }
    }
}

/// Budget and pool settings for the baselines; the method comes from
/// [`RunSpec::optimizer`] and the seed from the restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    pub budget: usize,
    pub n_initial: usize,
    pub n_candidates: usize,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        let d = BaselineConfig::default();
        Self {
            budget: d.budget,
            n_initial: d.n_initial,
            n_candidates: d.n_candidates,
        }
    }
}

/// One optimizer run with restarts. Mirrors the JSON config file.
///
/// `target = None` uses the bundled two-band target. With `timing` off, wall
/// times are left out of every CSV so identical seeds give identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub optimizer: OptimizerName,
    pub uce: UceConfig,
    pub baseline: BaselineSettings,
    pub design_space: DesignSpace,
    pub target: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub restarts: usize,
    pub seed: u64,
    pub timing: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            optimizer: OptimizerName::Uce,
            uce: UceConfig::default(),
            baseline: BaselineSettings::default(),
            design_space: DesignSpace::default(),
            target: None,
            out: None,
            restarts: 5,
            seed: 0,
            timing: true,
        }
    }
}

impl RunSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        self.design_space.validate()?;
        match self.optimizer {
            OptimizerName::Uce => self.uce.validate(),
            _ => self.baseline_config(0).validate(),
        }
    }

    pub fn restart_seed(&self, restart: usize) -> u64 {
        self.seed.wrapping_add(restart as u64)
    }

    fn baseline_config(&self, seed: u64) -> BaselineConfig {
        let method = match self.optimizer {
            OptimizerName::Gp => Method::Gp,
            OptimizerName::Forest => Method::Forest,
            _ => Method::Dummy,
        };
        BaselineConfig {
            method,
            budget: self.baseline.budget,
            n_initial: self.baseline.n_initial,
            n_candidates: self.baseline.n_candidates,
            seed,
        }
    }

    /// Objective evaluations each restart will make.
    pub fn evaluations_per_restart(&self) -> usize {
        match self.optimizer {
            OptimizerName::Uce => self.uce.n_samples * self.uce.n_iterations,
            _ => self.baseline.budget,
        }
    }
}

/// Several optimizers sharing one run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub optimizers: Vec<OptimizerName>,
    #[serde(default)]
    pub run: RunSpec,
}

impl BenchSpec {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn specs(&self) -> Vec<RunSpec> {
        self.optimizers
            .iter()
            .map(|&optimizer| {
                let mut spec = self.run.clone();
                spec.optimizer = optimizer;
                spec.out = self.run.out.as_ref().map(|d| d.join(optimizer.as_str()));
                spec
            })
            .collect()
    }
}

/// Reads and validates a `freq_hz,s11_db` target; its grid is the run's grid.
pub fn load_target(path: &Path) -> Result<TargetCurve> {
    TargetCurve::read_csv(path)
}

fn resolve_target(spec: &RunSpec) -> Result<TargetCurve> {
    match &spec.target {
        Some(path) => load_target(path),
        None => Ok(two_band_target()),
    }
}

/// `inverted_huber(residual(sweep(p)))`, with simulator failures scored as
/// [`PENALTY_SCORE`]. Counts every sweep it runs.
pub struct MomObjective<'a> {
    pub space: &'a DesignSpace,
    pub target: &'a TargetCurve,
    sweeps: AtomicUsize,
}

impl<'a> MomObjective<'a> {
    pub fn new(space: &'a DesignSpace, target: &'a TargetCurve) -> Self {
        Self {
            space,
            target,
            sweeps: AtomicUsize::new(0),
        }
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps.load(Ordering::Relaxed)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.target.freq
    }

    pub fn score(&self, p: &NormalizedParams) -> f64 {
        self.sweeps.fetch_add(1, Ordering::Relaxed);
        match sweep(p, self.space, self.grid()).and_then(|c| residual(&c, self.target)) {
            Ok(r) => inverted_huber(&r),
            Err(e) if e.is_simulation_failure() => {
                log::debug!("penalizing {:?}: {e}", p.values());
                PENALTY_SCORE
            }
            Err(e) => {
                log::warn!("penalizing {:?}: {e}", p.values());
                PENALTY_SCORE
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestartResult {
    pub restart: usize,
    pub seed: u64,
    pub params: NormalizedParams,
    pub geometry: PhysicalGeometry,
    pub huber: f64,
    pub l2_error: f64,
    pub wall_s: f64,
    pub sweeps: usize,
    /// Absent only if the best design cannot be re-simulated.
    pub curve: Option<S11Curve>,
    pub optimization: OptimizationResult,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub optimizer: OptimizerName,
    pub restarts: Vec<RestartResult>,
    pub best_index: usize,
}

impl RunReport {
    pub fn best(&self) -> &RestartResult {
        &self.restarts[self.best_index]
    }

    pub fn total_wall_s(&self) -> f64 {
        self.restarts.iter().map(|r| r.wall_s).sum()
    }

    pub fn restarts_csv(&self, timing: bool) -> String {
        let mut out = String::from("restart,seed,sweeps,huber,l2_error,wall_s\n");
        for r in &self.restarts {
            let wall = if timing { format!("{:.3}", r.wall_s) } else { String::new() };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.restart,
                r.seed,
                r.sweeps,
                sig9(r.huber),
                sig9(r.l2_error),
                wall
            );
        }
        out
    }
}

fn run_optimizer<F>(spec: &RunSpec, seed: u64, objective: F) -> Result<OptimizationResult>
where
    F: Fn(&NormalizedParams) -> f64 + Sync,
{
    match spec.optimizer {
        OptimizerName::Uce => {
            let cfg = UceConfig { seed, ..spec.uce.clone() };
            uce::optimize(objective, &cfg)
        }
        _ => surrogate_optimize(objective, &spec.baseline_config(seed)),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_restart(dir: &Path, r: &RestartResult, target: &TargetCurve, timing: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    r.optimization
        .write_trace(&dir.join("trace.csv"), &dir.join("final.json"), timing)?;
    r.geometry.write(&dir.join("geometry.json"))?;
    if let Some(curve) = &r.curve {
        curve.write_csv(&dir.join("curve.csv"))?;
        export_plot_data(target, curve, dir)?;
    }
    Ok(())
}

/// Runs every restart of `spec` and writes its artifacts when `spec.out` is set.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    spec.validate()?;
    let target = resolve_target(spec)?;
    let space = spec.design_space;
    let mut restarts = Vec::with_capacity(spec.restarts);
    for restart in 0..spec.restarts {
        let seed = spec.restart_seed(restart);
        let objective = MomObjective::new(&space, &target);
        let start = Instant::now();
        let optimization = run_optimizer(spec, seed, |p| objective.score(p))?;
        let wall_s = start.elapsed().as_secs_f64();
        let sweeps = objective.sweeps();
        let params = optimization.best;
        let curve = sweep(&params, &space, &target.freq).ok();
        let l2 = match &curve {
            Some(c) => l2_error(c, &target)?,
            None => f64::INFINITY,
        };
        log::info!(
            "{} restart {restart} (seed {seed}): huber {:.4}, l2 {l2:.4}, {sweeps} sweeps, {wall_s:.1} s",
            spec.optimizer.as_str(),
            optimization.best_score
        );
        restarts.push(RestartResult {
            restart,
            seed,
            params,
            geometry: denormalize(&params, &space),
            huber: optimization.best_score,
            l2_error: l2,
            wall_s,
            sweeps,
            curve,
            optimization,
        });
    }
    let best_index = restarts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.l2_error.total_cmp(&b.1.l2_error))
        .map(|(i, _)| i)
        .expect("restarts >= 1");
    let report = RunReport {
        optimizer: spec.optimizer,
        restarts,
        best_index,
    };
    if let Some(dir) = &spec.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for r in &report.restarts {
            write_restart(&dir.join(format!("restart_{}", r.restart)), r, &target, spec.timing)?;
        }
        write(&dir.join("restarts.csv"), &report.restarts_csv(spec.timing))?;
        let best = report.best();
        best.geometry.write(&dir.join("best_geometry.json"))?;
        if let Some(curve) = &best.curve {
            export_plot_data(&target, curve, dir)?;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub optimizer: OptimizerName,
    pub best_l2_error: f64,
    pub best_huber: f64,
    pub sweeps_per_restart: usize,
    pub total_wall_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<TableRow>,
    pub timing: bool,
}

impl ComparisonTable {
    pub fn from_reports(reports: &[RunReport], timing: bool) -> Self {
        let rows = reports
            .iter()
            .map(|r| {
                let best = r.best();
                TableRow {
                    optimizer: r.optimizer,
                    best_l2_error: best.l2_error,
                    best_huber: best.huber,
                    sweeps_per_restart: best.sweeps,
                    total_wall_s: r.total_wall_s(),
                }
            })
            .collect();
        Self { rows, timing }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("optimizer,best_l2_error,best_huber,sweeps_per_restart,total_wall_s\n");
        for r in &self.rows {
            let wall = if self.timing { format!("{:.3}", r.total_wall_s) } else { String::new() };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.optimizer.as_str(),
                sig9(r.best_l2_error),
                sig9(r.best_huber),
                r.sweeps_per_restart,
                wall
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<10}{:>16}{:>16}{:>10}{:>14}\n",
            "optimizer", "best l2 error", "best huber", "sweeps", "run time [s]"
        );
        for r in &self.rows {
            let wall = if self.timing { format!("{:.1}", r.total_wall_s) } else { "-".into() };
            let _ = writeln!(
                out,
                "{:<10}{:>16.3}{:>16.3}{:>10}{:>14}",
                r.optimizer.as_str(),
                r.best_l2_error,
                r.best_huber,
                r.sweeps_per_restart,
                wall
            );
        }
        out
    }
}

/// Runs each spec and assembles the comparison table; with an output
/// directory, also writes `table.csv` and `table.txt` there.
pub fn benchmark(specs: &[RunSpec], out: Option<&Path>) -> Result<(ComparisonTable, Vec<RunReport>)> {
    if let Some(first) = specs.first() {
        if specs
            .iter()
            .any(|s| s.target != first.target || s.design_space != first.design_space)
        {
            return Err(Error::Config("benchmark specs must share target and design space".into()));
        }
    }
    let reports = specs.iter().map(run).collect::<Result<Vec<_>>>()?;
    let timing = specs.iter().all(|s| s.timing);
    let table = ComparisonTable::from_reports(&reports, timing);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write(&dir.join("table.csv"), &table.to_csv_string())?;
        write(&dir.join("table.txt"), &table.to_text())?;
    }
    Ok((table, reports))
}
