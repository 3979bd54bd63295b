//! Pure states, wave-plate unitaries and the overlap metrics used throughout.
//!
//! States carry a canonical gauge: the first amplitude with modulus above
//! [`GAUGE_EPS`] is real and non-negative. Qubit states use the polarization
//! basis `|H⟩ = (1, 0)`, `|V⟩ = (0, 1)`, and `|H⟩` sits on the +z pole of the
//! Bloch sphere.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Vectors at or below this norm cannot be normalized.
pub const ZERO_NORM: f64 = 1e-12;
/// Amplitudes at or below this modulus are skipped when fixing the gauge.
pub const GAUGE_EPS: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// A complex amplitude vector that has not been normalized yet, e.g. the
/// result of adding a scaled gradient to a state.
#[derive(Debug, Clone, PartialEq)]
pub struct UnnormalizedVector(pub Vec<C64>);

impl UnnormalizedVector {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(self) -> Result<PureState> {
        normalize(self)
    }
}

/// Unit-norm state vector in canonical gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

/// Scales `v` to unit norm and fixes the global phase.
pub fn normalize(v: UnnormalizedVector) -> Result<PureState> {
    let n = v.norm();
    if n.is_nan() || n <= ZERO_NORM {
        return Err(Error::ZeroVector(n));
    }
    let mut amps = v.0;
    let gauge = amps.iter().find(|a| a.norm() > GAUGE_EPS).map(|a| a.conj() / a.norm()).unwrap_or(C64::new(1.0, 0.0));
    let scale = gauge / n;
    for a in amps.iter_mut() {
        *a *= scale;
    }
    if let Some(first) = amps.iter_mut().find(|a| a.norm() > GAUGE_EPS) {
        first.im = 0.0;
    }
    Ok(PureState { amps })
}

impl PureState {
    /// Normalizes `amps` into a state. Requires at least two amplitudes.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: amps.len() });
        }
        normalize(UnnormalizedVector(amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(dim >= 2 && index < dim);
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        PureState { amps }
    }

    pub fn horizontal() -> Self {
        Self::basis(2, 0)
    }

    pub fn vertical() -> Self {
        Self::basis(2, 1)
    }

    /// `(|H⟩ + |V⟩)/√2`
    pub fn diagonal() -> Self {
        Self::from_real(&[1.0, 1.0]).unwrap()
    }

    /// `(|H⟩ + i|V⟩)/√2`
    pub fn right_circular() -> Self {
        Self::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap()
    }

    /// Haar-random state of dimension `dim`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let amps: Vec<C64> =
                (0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
            if let Ok(s) = Self::new(amps) {
                return s;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn to_unnormalized(&self) -> UnnormalizedVector {
        UnnormalizedVector(self.amps.clone())
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(inner_raw(&self.amps, &other.amps))
    }
}

pub(crate) fn inner_raw(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn overlap(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Root fidelity `tr√(√ρ σ √ρ)`, which is `|⟨a|b⟩|` for pure states.
pub fn root_fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(overlap(a, b)?.sqrt())
}

/// Bloch vector of a qubit state with `|H⟩` at +z and `(|H⟩+i|V⟩)/√2` at +y.
pub fn bloch_coords(s: &PureState) -> Result<[f64; 3]> {
    check_dims(2, s.dim())?;
    let (a, b) = (s.amps[0], s.amps[1]);
    let c = a.conj() * b;
    Ok([2.0 * c.re, 2.0 * c.im, a.norm_sqr() - b.norm_sqr()])
}

/// A 2×2 unitary acting on polarization qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesUnitary {
    matrix: Matrix2<C64>,
}

impl JonesUnitary {
    /// Checks `U†U = I` within 1e-10.
    pub fn new(matrix: Matrix2<C64>) -> Result<Self> {
        let dev = unitarity_deviation(&matrix);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(JonesUnitary { matrix })
    }

    pub(crate) fn new_unchecked(matrix: Matrix2<C64>) -> Self {
        JonesUnitary { matrix }
    }

    pub fn identity() -> Self {
        JonesUnitary { matrix: Matrix2::identity() }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        JonesUnitary { matrix: self.matrix.adjoint() }
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &JonesUnitary) -> Self {
        JonesUnitary { matrix: self.matrix * first.matrix }
    }

    pub fn scaled_phase(&self, theta: f64) -> Self {
        JonesUnitary { matrix: self.matrix * C64::from_polar(1.0, theta) }
    }

    /// Haar-random element of U(2).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let col = PureState::random(2, rng);
        let (a, b) = (col.amps[0], col.amps[1]);
        let phase = C64::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let m = Matrix2::new(a, -b.conj(), b, a.conj()) * phase;
        JonesUnitary { matrix: m }
    }
}

pub(crate) fn unitarity_deviation(m: &Matrix2<C64>) -> f64 {
    let d = m.adjoint() * m - Matrix2::identity();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Half-wave plate with its fast axis at `theta` radians from horizontal.
pub fn hwp(theta: f64) -> JonesUnitary {
    let (s, c) = (2.0 * theta).sin_cos();
    JonesUnitary::new_unchecked(Matrix2::new(C64::new(c, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-c, 0.0)))
}

/// Quarter-wave plate with its fast axis at `theta` radians from horizontal.
pub fn qwp(theta: f64) -> JonesUnitary {
    let (s, c) = theta.sin_cos();
    let i = C64::i();
    let off = (C64::new(1.0, 0.0) - i) * (c * s);
    JonesUnitary::new_unchecked(Matrix2::new(
        C64::new(c * c, 0.0) + i * (s * s),
        off,
        off,
        C64::new(s * s, 0.0) + i * (c * c),
    ))
}

pub fn apply_unitary(u: &JonesUnitary, s: &PureState) -> Result<PureState> {
    check_dims(2, s.dim())?;
    let m = &u.matrix;
    let (a, b) = (s.amps[0], s.amps[1]);
    normalize(UnnormalizedVector(vec![m[(0, 0)] * a + m[(0, 1)] * b, m[(1, 0)] * a + m[(1, 1)] * b]))
}

/// Parses a single amplitude such as `0.75`, `-0.3i`, `0.07+0.65i` or `i`.
pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("invalid complex amplitude {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C64::new(num(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split =
        (1..bytes.len()).rev().find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        t => num(t),
    };
    match split {
        Some(p) => Ok(C64::new(num(&body[..p])?, imag(&body[p..])?)),
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

impl FromStr for PureState {
    type Err = Error;

    /// Comma-separated amplitudes, renormalized on load.
    fn from_str(s: &str) -> Result<Self> {
        let amps = s.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
        PureState::new(amps)
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.amps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let sign = if a.im.is_sign_negative() { '-' } else { '+' };
            write!(f, "{}{}{}i", a.re, sign, a.im.abs())?;
        }
        Ok(())
    }
}
