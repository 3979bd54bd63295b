//! Characterization of single-qubit unitary dynamics.
//!
//! A process is written as `ε(ρ) = Σ_mn χ_mn E_m ρ E_n†` over the Pauli basis
//! `{I, X, Y, Z}`. For a black-box unitary the output state of each probe is
//! learned with [`crate::learner`], and the unitary is recovered from the
//! probe/output pairs.
//!
//! Each learned output is only known up to its own global phase. The fit
//! therefore solves jointly for the unitary and one phase per probe, which is
//! why at least two non-orthogonal probes are needed to pin the relative
//! phase between columns.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::learner::{learn, trial_seed, StateLearningTask, Trajectory};
use crate::quantum::{apply_unitary, hwp, inner_raw, qwp, unitarity_deviation, JonesUnitary, PureState, C64};

pub const BASIS_LABELS: [&str; 4] = ["I", "X", "Y", "Z"];
const DENSITY_TOL: f64 = 1e-10;

pub fn pauli(m: usize) -> Matrix2<C64> {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::i());
    match m {
        0 => Matrix2::new(l, o, o, l),
        1 => Matrix2::new(o, l, l, o),
        2 => Matrix2::new(o, -i, i, o),
        3 => Matrix2::new(l, o, o, -l),
        _ => panic!("Pauli index {m} out of range"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMap {
    chi: Matrix4<C64>,
}

impl ProcessMap {
    pub fn new(chi: Matrix4<C64>) -> Self {
        ProcessMap { chi }
    }

    pub fn chi(&self) -> &Matrix4<C64> {
        &self.chi
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (self.chi - self.chi.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry deviation of `Σ_mn χ_mn E_n† E_m` from the identity.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let mut sum = Matrix2::zeros();
        for m in 0..4 {
            for n in 0..4 {
                sum += pauli(n).adjoint() * pauli(m) * self.chi[(m, n)];
            }
        }
        (sum - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part of χ, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (self.chi + self.chi.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// Numerical rank with eigenvalues above `tol` counted.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|e| e.abs() > tol).count()
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .map(|(r, c)| json!([self.chi[(r, c)].re, self.chi[(r, c)].im]))
            .collect();
        json!({ "basis": BASIS_LABELS, "chi": entries })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("chi json: {m}"));
        let basis = v.get("basis").and_then(Value::as_array).ok_or_else(|| bad("missing basis"))?;
        if basis.iter().map(Value::as_str).ne(BASIS_LABELS.iter().map(|s| Some(*s))) {
            return Err(bad("basis must be [I, X, Y, Z]"));
        }
        let entries = v.get("chi").and_then(Value::as_array).ok_or_else(|| bad("missing chi"))?;
        if entries.len() != 16 {
            return Err(bad("chi needs 16 entries"));
        }
        let mut chi = Matrix4::zeros();
        for (idx, e) in entries.iter().enumerate() {
            let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("entry is not [re, im]"))?;
            let re = pair[0].as_f64().ok_or_else(|| bad("non-numeric entry"))?;
            let im = pair[1].as_f64().ok_or_else(|| bad("non-numeric entry"))?;
            chi[(idx / 4, idx % 4)] = C64::new(re, im);
        }
        Ok(ProcessMap { chi })
    }
}

fn validate_density(rho: &Matrix2<C64>) -> Result<()> {
    let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > DENSITY_TOL {
        return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
        return Err(Error::InvalidDensityMatrix(format!("trace {tr} is not 1")));
    }
    // 2×2 Hermitian with unit trace: PSD iff det ≥ 0.
    let det = rho.determinant().re;
    if det < -DENSITY_TOL {
        return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue (det {det:e})")));
    }
    Ok(())
}

pub fn density(s: &PureState) -> Matrix2<C64> {
    let a = s.amps();
    Matrix2::new(a[0] * a[0].conj(), a[0] * a[1].conj(), a[1] * a[0].conj(), a[1] * a[1].conj())
}

/// `Σ_mn χ_mn E_m ρ E_n†`
pub fn apply_process(p: &ProcessMap, rho: &Matrix2<C64>) -> Result<Matrix2<C64>> {
    validate_density(rho)?;
    let mut out = Matrix2::zeros();
    for m in 0..4 {
        let left = pauli(m) * rho;
        for n in 0..4 {
            let c = p.chi[(m, n)];
            if c.norm() > 0.0 {
                out += left * pauli(n).adjoint() * c;
            }
        }
    }
    Ok(out)
}

/// Expands `U = Σ_m c_m E_m` with `c_m = tr(E_m U)/2` and returns
/// `χ_mn = c_m c̄_n`.
pub fn chi_from_unitary(u: &JonesUnitary) -> ProcessMap {
    let c: Vec<C64> = (0..4).map(|m| (pauli(m) * u.matrix()).trace() / 2.0).collect();
    ProcessMap { chi: Matrix4::from_fn(|m, n| c[m] * c[n].conj()) }
}

pub fn chi_from_matrix(m: &Matrix2<C64>) -> Result<ProcessMap> {
    Ok(chi_from_unitary(&JonesUnitary::new(*m)?))
}

/// `|tr(A†B)| / 2`
pub fn process_fidelity(a: &JonesUnitary, b: &JonesUnitary) -> f64 {
    (a.matrix().adjoint() * b.matrix()).trace().norm() / 2.0
}

/// Parses a wave-plate chain such as `hwp:22.5,qwp:45` (angles in degrees).
/// Plates act in the listed order. An empty string is the identity.
pub fn parse_waveplates(spec: &str) -> Result<JonesUnitary> {
    let mut u = JonesUnitary::identity();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (kind, angle) =
            item.split_once(':').ok_or_else(|| Error::Parse(format!("expected <plate>:<degrees>, got {item:?}")))?;
        let deg: f64 = angle.trim().parse().map_err(|_| Error::Parse(format!("bad angle in {item:?}")))?;
        let rad = deg * PI / 180.0;
        let plate = match kind.trim() {
            "hwp" => hwp(rad),
            "qwp" => qwp(rad),
            other => return Err(Error::Parse(format!("unknown plate {other:?}"))),
        };
        u = plate.after(&u);
    }
    Ok(u)
}

/// A process we can only query.
pub struct BlackBoxProcess {
    hidden: JonesUnitary,
}

impl BlackBoxProcess {
    pub fn new(hidden: JonesUnitary) -> Self {
        BlackBoxProcess { hidden }
    }

    pub fn from_waveplates(spec: &str) -> Result<Self> {
        Ok(Self::new(parse_waveplates(spec)?))
    }

    pub fn query(&self, input: &PureState) -> Result<PureState> {
        apply_unitary(&self.hidden, input)
    }
}

impl std::fmt::Debug for BlackBoxProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BlackBoxProcess { .. }")
    }
}

pub fn default_probes() -> Vec<PureState> {
    vec![PureState::horizontal(), PureState::diagonal(), PureState::right_circular()]
}

fn polar_unitary(m: &Matrix2<C64>) -> Matrix2<C64> {
    let svd = m.svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

fn column(s: &PureState) -> nalgebra::Vector2<C64> {
    nalgebra::Vector2::new(s.amps()[0], s.amps()[1])
}

fn has_two_independent(states: &[PureState]) -> bool {
    states.iter().enumerate().any(|(i, a)| {
        states[i + 1..].iter().any(|b| {
            let (x, y) = (a.amps(), b.amps());
            (x[0] * y[1] - x[1] * y[0]).norm() > 1e-6
        })
    })
}

/// Unitary best mapping each probe onto its image, up to one free phase per
/// image: minimizes `Σ_i ‖U p_i − e^{iθ_i} o_i‖²` by alternating a polar
/// (Procrustes) solve for `U` with closed-form phase updates.
pub fn fit_unitary(probes: &[PureState], images: &[PureState]) -> Result<JonesUnitary> {
    if probes.len() != images.len() {
        return Err(Error::LengthMismatch(probes.len(), images.len()));
    }
    if let Some(bad) = probes.iter().chain(images).find(|s| s.dim() != 2) {
        return Err(Error::DimensionMismatch { expected: 2, got: bad.dim() });
    }
    if !has_two_independent(probes) {
        return Err(Error::InsufficientProbes);
    }
    // Inner products are preserved by U, so ⟨p0|p_i⟩ = e^{i(θ_i − θ_0)}⟨o0|o_i⟩.
    let mut phases: Vec<f64> = probes
        .iter()
        .zip(images)
        .map(|(p, o)| {
            let pp = inner_raw(probes[0].amps(), p.amps());
            let oo = inner_raw(images[0].amps(), o.amps());
            if pp.norm() > 1e-9 && oo.norm() > 1e-9 {
                pp.arg() - oo.arg()
            } else {
                0.0
            }
        })
        .collect();
    let mut u = Matrix2::identity();
    for _ in 0..200 {
        let mut m = Matrix2::zeros();
        for ((p, o), th) in probes.iter().zip(images).zip(&phases) {
            m += column(o) * column(p).adjoint() * C64::from_polar(1.0, *th);
        }
        u = polar_unitary(&m);
        let mut change: f64 = 0.0;
        for ((p, o), th) in probes.iter().zip(images).zip(phases.iter_mut()) {
            let next = (column(o).adjoint() * u * column(p))[(0, 0)].arg();
            change = change.max((C64::from_polar(1.0, next) - C64::from_polar(1.0, *th)).norm());
            *th = next;
        }
        if change < 1e-14 {
            break;
        }
    }
    let dev = unitarity_deviation(&u);
    if dev > 1e-8 {
        return Err(Error::NotUnitary(dev));
    }
    Ok(JonesUnitary::new_unchecked(u))
}

/// Dominant eigenvector of the mean density matrix of `states`.
fn consensus_state(states: &[PureState]) -> Result<PureState> {
    if states.len() == 1 {
        return Ok(states[0].clone());
    }
    let mut rho = Matrix2::zeros();
    for s in states {
        rho += density(s);
    }
    rho /= C64::new(states.len() as f64, 0.0);
    let eig = rho.symmetric_eigen();
    let top = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let v = eig.eigenvectors.column(top);
    PureState::new(vec![v[0], v[1]])
}

#[derive(Debug, Clone)]
pub struct Characterization {
    pub unitary: JonesUnitary,
    pub process: ProcessMap,
    pub probes: Vec<PureState>,
    pub learned_outputs: Vec<PureState>,
    pub trajectories: Vec<Trajectory>,
}

/// Learns the output of every probe through `process` with the settings of
/// `template` (its target and initial state are replaced per probe) and fits
/// the unitary. Probe `i` runs under master seed `trial_seed(template seed, i)`.
pub fn characterize(
    process: &BlackBoxProcess,
    probes: &[PureState],
    template: &StateLearningTask,
) -> Result<Characterization> {
    if !has_two_independent(probes) {
        return Err(Error::InsufficientProbes);
    }
    let mut learned_outputs = Vec::with_capacity(probes.len());
    let mut trajectories = Vec::with_capacity(probes.len());
    for (i, probe) in probes.iter().enumerate() {
        let task = StateLearningTask {
            target: process.query(probe)?,
            master_seed: trial_seed(template.master_seed, i),
            ..template.clone()
        };
        let out = learn(&task)?;
        learned_outputs.push(consensus_state(&out.final_states())?);
        trajectories.push(out.trajectory);
    }
    let unitary = fit_unitary(probes, &learned_outputs)?;
    Ok(Characterization {
        process: chi_from_unitary(&unitary),
        unitary,
        probes: probes.to_vec(),
        learned_outputs,
        trajectories,
    })
}
