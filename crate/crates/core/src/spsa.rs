//! Simultaneous-perturbation stochastic approximation (SPSA), the generator's
//! learning rule.
//!
//! Each iteration draws a random direction `Δ_k`, measures the objective at
//! `φ_k ± β_k Δ_k`, forms `g_k = (f₊ − f₋) / (2β_k) · Δ_k` and moves to
//! `φ_k + α_k g_k`. The objective is maximized.
//!
//! Two parameter spaces are supported: complex amplitude vectors
//! ([`AmplitudeSpace`], directions over `{1, −1, i, −i}`, points renormalized
//! after every move) and real phase vectors ([`PhaseSpace`], directions over
//! `{1, −1}`, phases wrapped to `(−π, π]`).

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{normalize, PureState, UnnormalizedVector, C64};

/// Gain schedules `α_k = a / (k + 1 + A)^s` and `β_k = b / (k + 1)^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSchedule {
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub s: f64,
    pub b: f64,
    pub t: f64,
}

impl Default for GainSchedule {
    /// Defaults for single-qubit state learning.
    fn default() -> Self {
        GainSchedule { a: 3.0, big_a: 0.0, s: 0.602, b: 0.2, t: 0.101 }
    }
}

impl GainSchedule {
    /// Defaults for phase-vector estimation. The per-bin gradient scales as
    /// `1/(2n)`, so the update gain is larger and held nearly flat for the
    /// first few hundred iterations.
    pub fn phase_default() -> Self {
        GainSchedule { a: 40.0, big_a: 200.0, s: 0.602, b: 0.2, t: 0.101 }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("a", self.a, self.a > 0.0),
            ("A", self.big_a, self.big_a >= 0.0),
            ("s", self.s, self.s > 0.0),
            ("b", self.b, self.b > 0.0),
            ("t", self.t, self.t > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidSchedule(format!("{name} = {value}")));
            }
        }
        Ok(())
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.a / (k as f64 + 1.0 + self.big_a).powf(self.s)
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.b / (k as f64 + 1.0).powf(self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    /// `{1, −1, i, −i}`
    Complex4,
    /// `{1, −1}`
    Real2,
}

impl Alphabet {
    pub fn symbols(self) -> &'static [C64] {
        const C4: [C64; 4] = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
        match self {
            Alphabet::Complex4 => &C4,
            Alphabet::Real2 => &C4[..2],
        }
    }
}

/// A perturbation direction with one alphabet symbol per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    alphabet: Alphabet,
    entries: Vec<C64>,
}

impl Direction {
    pub fn new(alphabet: Alphabet, entries: Vec<C64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|e| !alphabet.symbols().contains(e)) {
            return Err(Error::Parse(format!("{bad} is not in the {alphabet:?} alphabet")));
        }
        Ok(Direction { alphabet, entries })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Draws each entry i.i.d. uniformly from `alphabet`.
pub fn sample_direction<R: Rng + ?Sized>(dim: usize, alphabet: Alphabet, rng: &mut R) -> Direction {
    let symbols = alphabet.symbols();
    let entries = (0..dim).map(|_| symbols[rng.random_range(0..symbols.len())]).collect();
    Direction { alphabet, entries }
}

/// A space the optimizer can move through.
pub trait ParameterSpace {
    type Point: Clone;
    const ALPHABET: Alphabet;

    fn dim(point: &Self::Point) -> usize;
    fn perturbed_pair(point: &Self::Point, delta: &Direction, beta: f64) -> Result<(Self::Point, Self::Point)>;
    fn step(point: &Self::Point, gradient: &[C64], alpha: f64) -> Result<Self::Point>;
}

/// Normalized complex amplitude vectors.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeSpace;

/// Real phase vectors wrapped to `(−π, π]`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSpace;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn shifted(point: &PureState, dir: &[C64], scale: f64) -> Result<PureState> {
    let amps = point.amps().iter().zip(dir).map(|(a, d)| a + d * scale).collect();
    normalize(UnnormalizedVector(amps))
}

impl ParameterSpace for AmplitudeSpace {
    type Point = PureState;
    const ALPHABET: Alphabet = Alphabet::Complex4;

    fn dim(point: &PureState) -> usize {
        point.dim()
    }

    fn perturbed_pair(point: &PureState, delta: &Direction, beta: f64) -> Result<(PureState, PureState)> {
        check_len(point.dim(), delta.len())?;
        Ok((shifted(point, delta.entries(), beta)?, shifted(point, delta.entries(), -beta)?))
    }

    fn step(point: &PureState, gradient: &[C64], alpha: f64) -> Result<PureState> {
        check_len(point.dim(), gradient.len())?;
        shifted(point, gradient, alpha)
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

impl ParameterSpace for PhaseSpace {
    type Point = Vec<f64>;
    const ALPHABET: Alphabet = Alphabet::Real2;

    fn dim(point: &Vec<f64>) -> usize {
        point.len()
    }

    fn perturbed_pair(point: &Vec<f64>, delta: &Direction, beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len(point.len(), delta.len())?;
        let plus = point.iter().zip(delta.entries()).map(|(p, d)| p + beta * d.re).collect();
        let minus = point.iter().zip(delta.entries()).map(|(p, d)| p - beta * d.re).collect();
        Ok((plus, minus))
    }

    fn step(point: &Vec<f64>, gradient: &[C64], alpha: f64) -> Result<Vec<f64>> {
        check_len(point.len(), gradient.len())?;
        Ok(point.iter().zip(gradient).map(|(p, g)| wrap_phase(p + alpha * g.re)).collect())
    }
}

pub fn perturbed_pair<S: ParameterSpace>(
    point: &S::Point,
    delta: &Direction,
    beta: f64,
) -> Result<(S::Point, S::Point)> {
    S::perturbed_pair(point, delta, beta)
}

/// `(f₊ − f₋) / (2β) · Δ`
pub fn gradient(f_plus: f64, f_minus: f64, beta: f64, delta: &Direction) -> Vec<C64> {
    let scale = (f_plus - f_minus) / (2.0 * beta);
    delta.entries().iter().map(|d| d * scale).collect()
}

pub fn step<S: ParameterSpace>(point: &S::Point, gradient: &[C64], alpha: f64) -> Result<S::Point> {
    S::step(point, gradient, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub k: usize,
    pub f_plus: f64,
    pub f_minus: f64,
    pub direction: Direction,
    pub alpha_k: f64,
    pub beta_k: f64,
    /// Root fidelity or accuracy of the point after this iteration's update.
    pub metric: f64,
}

pub fn write_iteration_csv<W: Write>(mut w: W, logs: &[IterationLog]) -> io::Result<()> {
    writeln!(w, "k,f_plus,f_minus,alpha_k,beta_k,metric")?;
    for l in logs {
        writeln!(w, "{},{},{},{},{},{}", l.k, l.f_plus, l.f_minus, l.alpha_k, l.beta_k, l.metric)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutcome<P> {
    pub point: P,
    pub logs: Vec<IterationLog>,
}

/// Runs `iterations` SPSA steps from `initial`, maximizing `objective`.
///
/// `objective` is called exactly twice per iteration. `metric` is evaluated
/// on the updated point and stored in the log. A perturbed amplitude vector
/// that vanishes triggers one fresh direction draw before the error surfaces.
pub fn run<S, F, M, R>(
    mut objective: F,
    mut metric: M,
    initial: S::Point,
    sched: &GainSchedule,
    iterations: usize,
    rng: &mut R,
) -> Result<RunOutcome<S::Point>>
where
    S: ParameterSpace,
    F: FnMut(&S::Point) -> Result<f64>,
    M: FnMut(&S::Point) -> f64,
    R: Rng + ?Sized,
{
    sched.validate()?;
    let dim = S::dim(&initial);
    let mut point = initial;
    let mut logs = Vec::with_capacity(iterations);
    for k in 0..iterations {
        let at = |source: Error| Error::AtIteration { k, source: Box::new(source) };
        let (alpha_k, beta_k) = (sched.alpha(k), sched.beta(k));
        let mut delta = sample_direction(dim, S::ALPHABET, rng);
        let (plus, minus) = match S::perturbed_pair(&point, &delta, beta_k) {
            Err(Error::ZeroVector(_)) => {
                delta = sample_direction(dim, S::ALPHABET, rng);
                S::perturbed_pair(&point, &delta, beta_k).map_err(at)?
            }
            other => other.map_err(at)?,
        };
        let f_plus = objective(&plus).map_err(at)?;
        let f_minus = objective(&minus).map_err(at)?;
        let g = gradient(f_plus, f_minus, beta_k, &delta);
        point = S::step(&point, &g, alpha_k).map_err(at)?;
        let m = metric(&point);
        logs.push(IterationLog { k, f_plus, f_minus, direction: delta, alpha_k, beta_k, metric: m });
    }
    Ok(RunOutcome { point, logs })
}
