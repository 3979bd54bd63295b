//! Executes a parsed [`ExperimentConfig`] and writes its artifacts.
//!
//! Every file is a pure function of the config: trials are seeded from the
//! master seed and collected in index order, so repeated runs are
//! byte-identical whatever the thread count.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::config::{Experiment, ExperimentConfig, RunConfig, SweepConfig, Task};
use crate::interference::{write_records_csv, MeasurementMode};
use crate::learner::{learn_trial, StateLearningTask, Trajectory};
use crate::multiphase::{estimate_trial, PhaseEstimationTask};
use crate::process::{characterize, parse_waveplates, process_fidelity, BlackBoxProcess};
use crate::quantum::JonesUnitary;
use crate::spsa::{write_iteration_csv, IterationLog};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{} trial(s) failed", .0.len())]
    Trials(Vec<(usize, crate::Error)>),
    #[error(transparent)]
    Model(#[from] crate::Error),
}

impl RunError {
    /// One line per failure, for stderr.
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            RunError::Trials(fails) => fails.iter().map(|(i, e)| format!("trial {i}: {e}")).collect(),
            other => vec![other.to_string()],
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub final_mean: f64,
    pub final_std: f64,
    pub files: Vec<PathBuf>,
}

/// Rayon pool sized by `SGQGAN_THREADS` (unset or 0 means one thread per core).
pub fn thread_pool_from_env() -> rayon::ThreadPool {
    let n = std::env::var("SGQGAN_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
}

struct Files {
    prefix: String,
    written: Vec<PathBuf>,
}

impl Files {
    fn new(prefix: &str) -> RunResult<Self> {
        if let Some(parent) = Path::new(prefix).parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|source| RunError::Io { path: parent.to_path_buf(), source })?;
        }
        Ok(Files { prefix: prefix.to_string(), written: Vec::new() })
    }

    fn write_with(
        &mut self,
        suffix: &str,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
    ) -> RunResult<()> {
        let path = PathBuf::from(format!("{}{suffix}", self.prefix));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|source| RunError::Io { path: parent.to_path_buf(), source })?;
        }
        let io_err = |source| RunError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(fs::File::create(&path).map_err(io_err)?);
        f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        self.written.push(path);
        Ok(())
    }

    fn write_str(&mut self, suffix: &str, text: &str) -> RunResult<()> {
        self.write_with(suffix, |w| w.write_all(text.as_bytes()))
    }

    fn write_json(&mut self, suffix: &str, v: &serde_json::Value) -> RunResult<()> {
        let mut text = serde_json::to_string_pretty(v).expect("json values serialize");
        text.push('\n');
        self.write_str(suffix, &text)
    }
}

fn trials_csv(metric: &str, series: &[(usize, &[f64])]) -> String {
    let mut out = format!("k,trial_id,{metric}\n");
    for (id, s) in series {
        for (k, v) in s.iter().enumerate() {
            let _ = writeln!(out, "{k},{id},{v}");
        }
    }
    out
}

fn aggregate_csv(t: &Trajectory) -> String {
    let mut out = String::from("k,mean,std\n");
    for (k, (m, s)) in t.mean.iter().zip(&t.std).enumerate() {
        let _ = writeln!(out, "{k},{m},{s}");
    }
    out
}

fn collect_trials<T: Send>(n: usize, f: impl Fn(usize) -> crate::Result<T> + Sync) -> RunResult<Vec<T>> {
    let results: Vec<crate::Result<T>> = (0..n).into_par_iter().map(&f).collect();
    let mut ok = Vec::with_capacity(n);
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push((i, e)),
        }
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(RunError::Trials(failed))
    }
}

fn metrics(logs: &[IterationLog]) -> Vec<f64> {
    logs.iter().map(|l| l.metric).collect()
}

fn learning_task(
    cfg: &RunConfig,
    target: crate::quantum::PureState,
    initial: crate::quantum::PureState,
) -> StateLearningTask {
    StateLearningTask {
        target,
        initial,
        sched: cfg.gains,
        model: cfg.model.build(),
        iterations: cfg.iterations,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
    }
}

/// Runs a single (non-sweep) experiment, writing artifacts under `prefix`
/// unless `prefix` is `None`.
fn run_one(cfg: &RunConfig, files: Option<&mut Files>) -> RunResult<Trajectory> {
    cfg.gains.validate()?;
    match &cfg.task {
        Task::LearnState { target, initial } => {
            let task = learning_task(cfg, target.state.clone(), initial.state.clone());
            let trials = collect_trials(cfg.trials, |i| learn_trial(&task, i))?;
            let traj = Trajectory::from_series(trials.iter().map(|t| metrics(&t.logs)).collect())?;
            if let Some(files) = files {
                let series: Vec<(usize, &[f64])> = traj.series.iter().map(Vec::as_slice).enumerate().collect();
                files.write_str(".trials.csv", &trials_csv("fidelity", &series))?;
                files.write_str(".aggregate.csv", &aggregate_csv(&traj))?;
                for (i, t) in trials.iter().enumerate() {
                    files.write_with(&format!("_trials/trial_{i:04}.iterations.csv"), |w| {
                        write_iteration_csv(w, &t.logs)
                    })?;
                    if cfg.model.mode == MeasurementMode::Sampled {
                        files.write_with(&format!("_trials/trial_{i:04}.records.csv"), |w| {
                            write_records_csv(w, &t.records)
                        })?;
                    }
                }
            }
            Ok(traj)
        }
        Task::Multiphase { scene } => {
            let task = PhaseEstimationTask {
                source: scene.source()?,
                sched: cfg.gains,
                model: cfg.model.build(),
                iterations: cfg.iterations,
                trials: cfg.trials,
                master_seed: cfg.master_seed,
            };
            let trials = collect_trials(cfg.trials, |i| estimate_trial(&task, i))?;
            let traj = Trajectory::from_series(trials.iter().map(|t| metrics(&t.logs)).collect())?;
            if let Some(files) = files {
                let series: Vec<(usize, &[f64])> = traj.series.iter().map(Vec::as_slice).enumerate().collect();
                files.write_str(".trials.csv", &trials_csv("accuracy", &series))?;
                files.write_str(".aggregate.csv", &aggregate_csv(&traj))?;
                for (i, t) in trials.iter().enumerate() {
                    files.write_with(&format!("_trials/trial_{i:04}.iterations.csv"), |w| {
                        write_iteration_csv(w, &t.logs)
                    })?;
                }
                let scenes: Vec<_> = trials
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        json!({
                            "trial_id": i,
                            "A": t.scene.weights(),
                            "sigma": t.scene.sigma(),
                            "psi": t.scene.psi(),
                            "phi_final": t.final_phi,
                        })
                    })
                    .collect();
                files.write_json(".result.json", &json!({ "trials": scenes }))?;
            }
            Ok(traj)
        }
        Task::Characterize { process, probes, initial } => {
            let hidden = parse_waveplates(process)?;
            let template = learning_task(cfg, initial.state.clone(), initial.state.clone());
            let probe_states: Vec<_> = probes.iter().map(|p| p.state.clone()).collect();
            let ch = characterize(&BlackBoxProcess::new(hidden), &probe_states, &template)?;
            // Trial ids run probe-major: probe p, trial t → p·T + t.
            let series: Vec<Vec<f64>> = ch.trajectories.iter().flat_map(|t| t.series.iter().cloned()).collect();
            let traj = Trajectory::from_series(series)?;
            if let Some(files) = files {
                let series: Vec<(usize, &[f64])> = traj.series.iter().map(Vec::as_slice).enumerate().collect();
                files.write_str(".trials.csv", &trials_csv("fidelity", &series))?;
                files.write_str(".aggregate.csv", &aggregate_csv(&traj))?;
                files.write_json(".chi.json", &ch.process.to_json())?;
                files.write_json(".result.json", &characterization_json(&ch.unitary, &hidden, &ch))?;
            }
            Ok(traj)
        }
    }
}

fn matrix_json(u: &JonesUnitary) -> serde_json::Value {
    let m = u.matrix();
    json!((0..2).map(|r| (0..2).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn characterization_json(
    fit: &JonesUnitary,
    hidden: &JonesUnitary,
    ch: &crate::process::Characterization,
) -> serde_json::Value {
    let p = &ch.process;
    json!({
        "unitary": matrix_json(fit),
        "process_fidelity": process_fidelity(fit, hidden),
        "probes": ch.probes.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "learned_outputs": ch.learned_outputs.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "chi_eigenvalues": p.eigenvalues(),
        "hermiticity_deviation": p.hermiticity_deviation(),
        "trace_preservation_deviation": p.trace_preservation_deviation(),
    })
}

fn sweep(s: &SweepConfig, files: &mut Files) -> RunResult<RunSummary> {
    let names: Vec<&String> = s.grid.keys().collect();
    let mut table = names.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(",");
    table.push_str(",mean_final,std_final\n");
    let mut last = (f64::NAN, f64::NAN);
    for point in s.points() {
        let traj = run_one(&s.apply(&point), None)?;
        last = (traj.final_mean(), traj.final_std());
        let values: Vec<String> = point.iter().map(|(_, v)| v.to_string()).collect();
        let _ = writeln!(table, "{},{},{}", values.join(","), last.0, last.1);
    }
    files.write_str(".sweep.csv", &table)?;
    Ok(RunSummary { final_mean: last.0, final_std: last.1, files: Vec::new() })
}

/// Runs the experiment on the current rayon pool and writes
/// `{output}.manifest.json` plus the command's artifacts.
pub fn execute(cfg: &ExperimentConfig) -> RunResult<RunSummary> {
    let mut files = Files::new(&cfg.output)?;
    files.write_json(".manifest.json", &cfg.to_json())?;
    let mut summary = match &cfg.experiment {
        Experiment::Run(r) => {
            let traj = run_one(r, Some(&mut files))?;
            RunSummary { final_mean: traj.final_mean(), final_std: traj.final_std(), files: Vec::new() }
        }
        Experiment::Sweep(s) => sweep(s, &mut files)?,
    };
    summary.files = files.written;
    Ok(summary)
}
