//! Simultaneous estimation of many phases encoded on frequency-bin
//! entangled photon pairs.
//!
//! The true phases `ψ_k` sit on the signal photon, the generator's guesses
//! `φ_k` on the idler. At zero delay the coincidence probability is
//! `Σ_k (A_k/2)(1 − cos(ψ_k − φ_k))`, so the optimizer maximizes
//! `1 − P(0)`, which for uniform weights equals [`accuracy`].

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{measure_multiphase, HomMeasurementModel};
use crate::learner::{stream_rng, trial_seed, Trajectory, DIRECTION_STREAM, MEASUREMENT_STREAM, SCENE_STREAM};
use crate::spsa::{run, wrap_phase, GainSchedule, IterationLog, PhaseSpace};

const WEIGHT_TOL: f64 = 1e-9;

/// Signal/idler center frequencies of one bin and the pump they sum to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinFrequencies {
    pub signal: f64,
    pub idler: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScene {
    weights: Vec<f64>,
    sigma: f64,
    psi: Vec<f64>,
    phi: Vec<f64>,
    frequencies: Option<(Vec<BinFrequencies>, f64)>,
}

impl PhaseScene {
    /// Builds a scene; phases are wrapped to `(−π, π]`.
    pub fn new(weights: Vec<f64>, sigma: f64, psi: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let scene = PhaseScene {
            weights,
            sigma,
            psi: psi.into_iter().map(wrap_phase).collect(),
            phi: phi.into_iter().map(wrap_phase).collect(),
            frequencies: None,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Attaches bin frequencies, checking `ω_s + ω_i = ω_p` for every bin.
    pub fn with_frequencies(mut self, bins: Vec<BinFrequencies>, pump: f64) -> Result<Self> {
        if bins.len() != self.n() {
            return Err(Error::LengthMismatch(self.n(), bins.len()));
        }
        for (k, b) in bins.iter().enumerate() {
            if ((b.signal + b.idler) - pump).abs() > 1e-9 * pump.abs().max(1.0) {
                return Err(Error::InvalidAmplitudes(format!(
                    "bin {k}: signal + idler = {} differs from pump {pump}",
                    b.signal + b.idler
                )));
            }
        }
        self.frequencies = Some((bins, pump));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if n == 0 {
            return Err(Error::InvalidAmplitudes("scene needs at least one bin".into()));
        }
        if self.psi.len() != n {
            return Err(Error::LengthMismatch(n, self.psi.len()));
        }
        if self.phi.len() != n {
            return Err(Error::LengthMismatch(n, self.phi.len()));
        }
        if let Some(a) = self.weights.iter().find(|a| a.is_nan() || **a < 0.0) {
            return Err(Error::InvalidAmplitudes(format!("negative weight {a}")));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidAmplitudes(format!("weights sum to {total}, not 1")));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::InvalidAmplitudes(format!("bandwidth {} must be non-negative", self.sigma)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn frequencies(&self) -> Option<&(Vec<BinFrequencies>, f64)> {
        self.frequencies.as_ref()
    }

    pub fn set_probe(&mut self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.n() {
            return Err(Error::LengthMismatch(self.n(), phi.len()));
        }
        for (dst, src) in self.phi.iter_mut().zip(phi) {
            *dst = wrap_phase(*src);
        }
        Ok(())
    }
}

/// Uniform weights `1/n`, true phases i.i.d. uniform on `(−π, π]`, probe at 0.
pub fn uniform_scene<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Result<PhaseScene> {
    if n == 0 {
        return Err(Error::InvalidAmplitudes("scene needs at least one bin".into()));
    }
    let psi = (0..n).map(|_| wrap_phase(rng.random_range(-PI..PI))).collect();
    PhaseScene::new(vec![1.0 / n as f64; n], sigma, psi, vec![0.0; n])
}

/// Mean of `(1 + cos(ψ_k − φ_k)) / 2` over the bins.
pub fn accuracy(psi: &[f64], phi: &[f64]) -> Result<f64> {
    if psi.len() != phi.len() {
        return Err(Error::LengthMismatch(psi.len(), phi.len()));
    }
    if psi.is_empty() {
        return Err(Error::LengthMismatch(1, 0));
    }
    let total: f64 = psi.iter().zip(phi).map(|(a, b)| (1.0 + (a - b).cos()) / 2.0).sum();
    Ok((total / psi.len() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    /// Every trial estimates the same hidden phases.
    Fixed(PhaseScene),
    /// Every trial draws its own [`uniform_scene`] from its trial seed.
    Uniform { n: usize, sigma: f64 },
}

#[derive(Debug, Clone)]
pub struct PhaseEstimationTask {
    pub source: SceneSource,
    pub sched: GainSchedule,
    pub model: HomMeasurementModel,
    pub iterations: usize,
    pub trials: usize,
    pub master_seed: u64,
}

impl PhaseEstimationTask {
    /// Phase-space default gains, K = 2000, T = 50, analytic measurement.
    pub fn new(source: SceneSource) -> Self {
        PhaseEstimationTask {
            source,
            sched: GainSchedule::phase_default(),
            model: HomMeasurementModel::analytic(),
            iterations: 2000,
            trials: 50,
            master_seed: 0,
        }
    }
}

pub type AccuracyTrajectory = Trajectory;

#[derive(Debug, Clone)]
pub struct PhaseTrialOutcome {
    pub scene: PhaseScene,
    pub final_phi: Vec<f64>,
    pub logs: Vec<IterationLog>,
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub trajectory: AccuracyTrajectory,
    pub trials: Vec<PhaseTrialOutcome>,
}

pub fn estimate_trial(task: &PhaseEstimationTask, trial: usize) -> Result<PhaseTrialOutcome> {
    let seed = trial_seed(task.master_seed, trial);
    let scene = match &task.source {
        SceneSource::Fixed(s) => s.clone(),
        SceneSource::Uniform { n, sigma } => uniform_scene(*n, *sigma, &mut stream_rng(seed, SCENE_STREAM))?,
    };
    let mut directions = stream_rng(seed, DIRECTION_STREAM);
    let mut model = task.model.reseeded(seed, MEASUREMENT_STREAM);
    let mut probe_scene = scene.clone();
    let psi = scene.psi().to_vec();
    let out = run::<PhaseSpace, _, _, _>(
        |phi| {
            probe_scene.set_probe(phi)?;
            Ok(1.0 - measure_multiphase(&mut model, &probe_scene)?.0)
        },
        |phi| accuracy(&psi, phi).unwrap_or(0.0),
        scene.phi().to_vec(),
        &task.sched,
        task.iterations,
        &mut directions,
    )?;
    Ok(PhaseTrialOutcome { scene, final_phi: out.point, logs: out.logs })
}

/// Runs SPSA over the probe phases for every trial and tracks accuracy after
/// each update.
pub fn estimate(task: &PhaseEstimationTask) -> Result<PhaseOutcome> {
    if task.iterations == 0 || task.trials == 0 {
        return Err(Error::InvalidSchedule("iterations and trials must be at least 1".into()));
    }
    task.sched.validate()?;
    if let SceneSource::Fixed(s) = &task.source {
        s.validate()?;
    }
    let trials = (0..task.trials)
        .into_par_iter()
        .map(|i| estimate_trial(task, i).map_err(|e| Error::AtTrial { trial: i, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    let series = trials.iter().map(|t| t.logs.iter().map(|l| l.metric).collect()).collect();
    Ok(PhaseOutcome { trajectory: Trajectory::from_series(series)?, trials })
}
