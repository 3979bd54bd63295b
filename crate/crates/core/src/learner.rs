//! Single-state learning: the generator chases a fixed true state through
//! repeated HOM overlap measurements.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interference::{measure_overlap, CoincidenceRecord, HomMeasurementModel};
use crate::quantum::{root_fidelity, PureState, C64};
use crate::spsa::{run, AmplitudeSpace, GainSchedule, IterationLog};

/// RNG stream for perturbation directions.
pub const DIRECTION_STREAM: u64 = 0;
/// RNG stream for measurement shot noise.
pub const MEASUREMENT_STREAM: u64 = 1;
/// RNG stream for drawing random scenes.
pub const SCENE_STREAM: u64 = 2;

/// Seed of trial `trial` under `master`: `splitmix64(master + trial)`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut z = master.wrapping_add(trial as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The six true states used in the single-qubit experiments, as quoted
/// (before renormalization).
pub const BUILTIN_AMPLITUDES: [(&str, [(f64, f64); 2]); 6] = [
    ("psi_t1", [(1.0, 0.0), (0.0, 0.0)]),
    ("psi_t2", [(0.90, 0.0), (0.44, 0.0)]),
    ("psi_t3", [(0.69, 0.0), (0.72, 0.0)]),
    ("psi_t4", [(0.94, 0.0), (0.34, 0.0)]),
    ("psi_t5", [(0.75, 0.0), (0.07, 0.65)]),
    ("psi_t6", [(0.82, 0.0), (0.57, 0.11)]),
];

pub fn builtin_targets() -> Vec<(&'static str, PureState)> {
    BUILTIN_AMPLITUDES
        .iter()
        .map(|(name, amps)| {
            let v = amps.iter().map(|&(re, im)| C64::new(re, im)).collect();
            (*name, PureState::new(v).expect("builtin amplitudes are nonzero"))
        })
        .collect()
}

pub fn builtin_target(name: &str) -> Option<PureState> {
    builtin_targets().into_iter().find(|(n, _)| *n == name).map(|(_, s)| s)
}

#[derive(Debug, Clone)]
pub struct StateLearningTask {
    pub target: PureState,
    pub initial: PureState,
    pub sched: GainSchedule,
    pub model: HomMeasurementModel,
    pub iterations: usize,
    pub trials: usize,
    pub master_seed: u64,
}

impl StateLearningTask {
    /// K = 20, T = 100, analytic measurement, starting from `|V⟩`.
    pub fn new(target: PureState) -> Self {
        StateLearningTask {
            target,
            initial: PureState::vertical(),
            sched: GainSchedule::default(),
            model: HomMeasurementModel::analytic(),
            iterations: 20,
            trials: 100,
            master_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.trials == 0 {
            return Err(Error::InvalidSchedule(format!(
                "iterations ({}) and trials ({}) must be at least 1",
                self.iterations, self.trials
            )));
        }
        if self.target.dim() != self.initial.dim() {
            return Err(Error::DimensionMismatch { expected: self.target.dim(), got: self.initial.dim() });
        }
        self.sched.validate()
    }
}

/// Per-trial metric series with pointwise mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub series: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Trajectory {
    pub fn from_series(series: Vec<Vec<f64>>) -> Result<Self> {
        let (mean, std) = aggregate(&series)?;
        Ok(Trajectory { series, mean, std })
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_std(&self) -> f64 {
        self.std.last().copied().unwrap_or(f64::NAN)
    }
}

/// Pointwise mean and sample (n − 1) standard deviation. A single series has
/// zero spread.
pub fn aggregate(series: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(first) = series.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    let len = first.len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::LengthMismatch(len, bad.len()));
    }
    let n = series.len() as f64;
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for k in 0..len {
        let m = series.iter().map(|s| s[k]).sum::<f64>() / n;
        mean[k] = m;
        if series.len() > 1 {
            let ss: f64 = series.iter().map(|s| (s[k] - m).powi(2)).sum();
            std[k] = (ss / (n - 1.0)).sqrt();
        }
    }
    Ok((mean, std))
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub final_state: PureState,
    pub logs: Vec<IterationLog>,
    pub records: Vec<CoincidenceRecord>,
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub trajectory: Trajectory,
    pub trials: Vec<TrialOutcome>,
}

impl LearnOutcome {
    pub fn final_states(&self) -> Vec<PureState> {
        self.trials.iter().map(|t| t.final_state.clone()).collect()
    }
}

/// Runs one seeded trial. Fidelity is recorded after each update.
pub fn learn_trial(task: &StateLearningTask, trial: usize) -> Result<TrialOutcome> {
    let seed = trial_seed(task.master_seed, trial);
    let mut directions = stream_rng(seed, DIRECTION_STREAM);
    let mut model = task.model.reseeded(seed, MEASUREMENT_STREAM);
    let mut records = Vec::with_capacity(2 * task.iterations);
    let target = &task.target;
    let out = run::<AmplitudeSpace, _, _, _>(
        |probe| {
            let (f, rec) = measure_overlap(&mut model, target, probe)?;
            records.push(rec);
            Ok(f)
        },
        |probe| root_fidelity(probe, target).unwrap_or(0.0),
        task.initial.clone(),
        &task.sched,
        task.iterations,
        &mut directions,
    )?;
    Ok(TrialOutcome { final_state: out.point, logs: out.logs, records })
}

/// Runs `task.trials` independent trials (in parallel on the current rayon
/// pool) and aggregates their fidelity series.
pub fn learn(task: &StateLearningTask) -> Result<LearnOutcome> {
    task.validate()?;
    let trials = (0..task.trials)
        .into_par_iter()
        .map(|i| learn_trial(task, i).map_err(|e| Error::AtTrial { trial: i, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    let series = trials.iter().map(|t| t.logs.iter().map(|l| l.metric).collect()).collect();
    Ok(LearnOutcome { trajectory: Trajectory::from_series(series)?, trials })
}
