//! The discriminator: Hong-Ou-Mandel coincidence models.
//!
//! Two measurement backends are provided. `Analytic` returns exact
//! probabilities. `Sampled` draws binomial coincidence counts for a finite
//! photon-pair budget and adds Poisson background counts (the accidental
//! coincidences from a broadband noise source).

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiphase::PhaseScene;
use crate::quantum::{overlap, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    Analytic,
    Sampled,
}

/// Audit trail of a single measurement setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    pub setting_id: String,
    pub counts_dip: u64,
    pub counts_baseline: u64,
    pub estimated_overlap: f64,
}

/// A HOM measurement with its own RNG state. Not meant to be shared across
/// threads; clone and reseed per trial instead.
#[derive(Debug, Clone)]
pub struct HomMeasurementModel {
    mode: MeasurementMode,
    pairs_per_setting: u64,
    background_rate: f64,
    rng_seed: u64,
    rng: ChaCha8Rng,
    settings: u64,
}

impl HomMeasurementModel {
    pub fn new(mode: MeasurementMode, pairs_per_setting: u64, background_rate: f64, rng_seed: u64) -> Result<Self> {
        if mode == MeasurementMode::Sampled && pairs_per_setting == 0 {
            return Err(Error::InvalidModel("pairs_per_setting must be at least 1 in sampled mode".into()));
        }
        if !background_rate.is_finite() || background_rate < 0.0 {
            return Err(Error::InvalidModel(format!(
                "background_rate must be finite and non-negative, got {background_rate}"
            )));
        }
        Ok(HomMeasurementModel {
            mode,
            pairs_per_setting,
            background_rate,
            rng_seed,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            settings: 0,
        })
    }

    pub fn analytic() -> Self {
        Self::new(MeasurementMode::Analytic, 1000, 0.0, 0).unwrap()
    }

    pub fn sampled(pairs_per_setting: u64, background_rate: f64, rng_seed: u64) -> Result<Self> {
        Self::new(MeasurementMode::Sampled, pairs_per_setting, background_rate, rng_seed)
    }

    /// Fresh copy with the RNG positioned at `(seed, stream)` and the setting
    /// counter reset.
    pub fn reseeded(&self, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        HomMeasurementModel { rng_seed: seed, rng, settings: 0, ..self.clone() }
    }

    pub fn mode(&self) -> MeasurementMode {
        self.mode
    }

    pub fn pairs_per_setting(&self) -> u64 {
        self.pairs_per_setting
    }

    pub fn background_rate(&self) -> f64 {
        self.background_rate
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    fn next_setting_id(&mut self) -> String {
        let id = format!("s{}", self.settings);
        self.settings += 1;
        id
    }

    fn binomial(&mut self, p: f64) -> u64 {
        Binomial::new(self.pairs_per_setting, p.clamp(0.0, 1.0))
            .expect("probability clamped to [0, 1]")
            .sample(&mut self.rng)
    }

    fn background(&mut self) -> u64 {
        if self.background_rate > 0.0 {
            let draw: f64 = Poisson::new(self.background_rate).expect("positive finite rate").sample(&mut self.rng);
            draw as u64
        } else {
            0
        }
    }
}

/// Coincidence probability behind a balanced beam splitter for two
/// independent single photons with overlap `f`.
pub fn coincidence_prob_dip(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Domain(f));
    }
    Ok((1.0 - f) / 2.0)
}

/// Estimates `|⟨probe|true⟩|²` from a HOM dip measurement.
///
/// In sampled mode the dip counts are normalized by an independently sampled
/// distinguishable-photon baseline, so the estimate is
/// `1 - counts_dip / counts_baseline`, clamped to `[0, 1]`.
pub fn measure_overlap(
    model: &mut HomMeasurementModel,
    true_state: &PureState,
    probe: &PureState,
) -> Result<(f64, CoincidenceRecord)> {
    let f = overlap(true_state, probe)?;
    let setting_id = model.next_setting_id();
    match model.mode {
        MeasurementMode::Analytic => {
            Ok((f, CoincidenceRecord { setting_id, counts_dip: 0, counts_baseline: 0, estimated_overlap: f }))
        }
        MeasurementMode::Sampled => {
            let p_dip = coincidence_prob_dip(f)?;
            let counts_dip = model.binomial(p_dip) + model.background();
            let mut counts_baseline = model.binomial(0.5) + model.background();
            if counts_baseline == 0 {
                counts_baseline = model.binomial(0.5) + model.background();
                if counts_baseline == 0 {
                    return Err(Error::DegenerateBaseline);
                }
            }
            let estimated_overlap = (1.0 - counts_dip as f64 / counts_baseline as f64).clamp(0.0, 1.0);
            Ok((estimated_overlap, CoincidenceRecord { setting_id, counts_dip, counts_baseline, estimated_overlap }))
        }
    }
}

/// Coincidence probability for the phase-encoded frequency-bin pair at
/// delay `tau`:
/// `P(τ) = Σ_k (A_k/2) [1 − cos(ψ_k − φ_k) exp(−σ²τ²)]`.
pub fn coincidence_prob_multiphase(scene: &PhaseScene, tau: f64) -> Result<f64> {
    scene.validate()?;
    let envelope = (-(scene.sigma() * tau).powi(2)).exp();
    let p: f64 = scene
        .weights()
        .iter()
        .zip(scene.psi().iter().zip(scene.phi()))
        .map(|(a, (psi, phi))| a / 2.0 * (1.0 - (psi - phi).cos() * envelope))
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Zero-delay coincidence probability estimate for the multiphase scene.
/// Sampled mode returns `(counts + background) / (N + background_rate)`.
pub fn measure_multiphase(model: &mut HomMeasurementModel, scene: &PhaseScene) -> Result<(f64, CoincidenceRecord)> {
    let p = coincidence_prob_multiphase(scene, 0.0)?;
    let setting_id = model.next_setting_id();
    match model.mode {
        MeasurementMode::Analytic => {
            Ok((p, CoincidenceRecord { setting_id, counts_dip: 0, counts_baseline: 0, estimated_overlap: p }))
        }
        MeasurementMode::Sampled => {
            let counts = model.binomial(p) + model.background();
            let denom = model.pairs_per_setting as f64 + model.background_rate;
            let estimate = (counts as f64 / denom).clamp(0.0, 1.0);
            Ok((
                estimate,
                CoincidenceRecord {
                    setting_id,
                    counts_dip: counts,
                    counts_baseline: model.pairs_per_setting,
                    estimated_overlap: estimate,
                },
            ))
        }
    }
}

pub fn write_records_csv<W: Write>(mut w: W, records: &[CoincidenceRecord]) -> io::Result<()> {
    writeln!(w, "setting_id,counts_dip,counts_baseline,estimated_overlap")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.setting_id, r.counts_dip, r.counts_baseline, r.estimated_overlap)?;
    }
    Ok(())
}
