//! Experiment configuration: strict JSON parsing with JSON-path diagnostics
//! and a manifest form that parses back to an equal config.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::interference::{HomMeasurementModel, MeasurementMode};
use crate::learner::builtin_target;
use crate::multiphase::{PhaseScene, SceneSource};
use crate::process::parse_waveplates;
use crate::quantum::PureState;
use crate::spsa::GainSchedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("range error at {path}: {value} {msg}")]
    Range { path: String, value: String, msg: String },
}

impl ConfigError {
    pub fn path(&self) -> &str {
        match self {
            ConfigError::Schema { path, .. } | ConfigError::Range { path, .. } => path,
        }
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

fn schema(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Schema { path: path.to_string(), msg: msg.into() }
}

fn range(path: &str, value: impl fmt::Display, msg: impl Into<String>) -> ConfigError {
    ConfigError::Range { path: path.to_string(), value: value.to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    LearnState,
    Characterize,
    Multiphase,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LearnState => "learn-state",
            Command::Characterize => "characterize",
            Command::Multiphase => "multiphase",
            Command::Sweep => "sweep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Command::LearnState, Command::Characterize, Command::Multiphase, Command::Sweep]
            .into_iter()
            .find(|c| c.name() == name)
    }
}

/// A state together with the text it was given as (`psi_t1` or a literal).
#[derive(Debug, Clone, PartialEq)]
pub struct NamedState {
    pub text: String,
    pub state: PureState,
}

impl NamedState {
    pub fn parse(text: &str) -> Option<Self> {
        let state = builtin_target(text).or_else(|| text.parse().ok())?;
        Some(NamedState { text: text.to_string(), state })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub n: usize,
    pub weights: Option<Vec<f64>>,
    pub sigma: f64,
    pub psi: Option<Vec<f64>>,
}

impl SceneSpec {
    pub fn source(&self) -> crate::Result<SceneSource> {
        match &self.psi {
            None if self.weights.is_none() => Ok(SceneSource::Uniform { n: self.n, sigma: self.sigma }),
            None => Err(crate::Error::InvalidAmplitudes("weights given without psi".into())),
            Some(psi) => {
                let weights = self.weights.clone().unwrap_or_else(|| vec![1.0 / self.n as f64; self.n]);
                Ok(SceneSource::Fixed(PhaseScene::new(weights, self.sigma, psi.clone(), vec![0.0; self.n])?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    LearnState { target: NamedState, initial: NamedState },
    Characterize { process: String, probes: Vec<NamedState>, initial: NamedState },
    Multiphase { scene: SceneSpec },
}

impl Task {
    pub fn command(&self) -> Command {
        match self {
            Task::LearnState { .. } => Command::LearnState,
            Task::Characterize { .. } => Command::Characterize,
            Task::Multiphase { .. } => Command::Multiphase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub mode: MeasurementMode,
    pub pairs_per_setting: u64,
    pub background_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { mode: MeasurementMode::Analytic, pairs_per_setting: 1000, background_rate: 0.0 }
    }
}

impl ModelConfig {
    /// The model's RNG is reseeded per trial, so the seed here is a placeholder.
    pub fn build(&self) -> HomMeasurementModel {
        HomMeasurementModel::new(self.mode, self.pairs_per_setting, self.background_rate, 0)
            .expect("validated during parsing")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub gains: GainSchedule,
    pub model: ModelConfig,
    pub iterations: usize,
    pub trials: usize,
    pub master_seed: u64,
}

pub const GRID_PARAMS: [&str; 7] = ["A", "a", "b", "background_rate", "pairs_per_setting", "s", "t"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Parameter name → ascending values; iteration order is lexicographic.
    pub grid: BTreeMap<String, Vec<f64>>,
}

impl SweepConfig {
    /// Cartesian product in lexicographic order (first name varies slowest).
    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (name, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((name.clone(), *v));
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn apply(&self, point: &[(String, f64)]) -> RunConfig {
        let mut cfg = self.base.clone();
        for (name, v) in point {
            match name.as_str() {
                "a" => cfg.gains.a = *v,
                "A" => cfg.gains.big_a = *v,
                "s" => cfg.gains.s = *v,
                "b" => cfg.gains.b = *v,
                "t" => cfg.gains.t = *v,
                "pairs_per_setting" => cfg.model.pairs_per_setting = *v as u64,
                "background_rate" => cfg.model.background_rate = *v,
                other => unreachable!("grid parameter {other} passed validation"),
            }
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Run(RunConfig),
    Sweep(SweepConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output: String,
}

impl ExperimentConfig {
    pub fn command(&self) -> Command {
        match &self.experiment {
            Experiment::Run(r) => r.task.command(),
            Experiment::Sweep(_) => Command::Sweep,
        }
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        match &mut self.experiment {
            Experiment::Run(r) => r.master_seed = seed,
            Experiment::Sweep(s) => s.base.master_seed = seed,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = match &self.experiment {
            Experiment::Run(r) => run_to_json(r),
            Experiment::Sweep(s) => {
                let grid: Map<String, Value> = s.grid.iter().map(|(k, vs)| (k.clone(), json!(vs))).collect();
                json!({ "command": "sweep", "base": run_to_json(&s.base), "grid": grid })
            }
        };
        v["output"] = json!(self.output);
        v
    }
}

fn run_to_json(r: &RunConfig) -> Value {
    let mut v = json!({
        "command": r.task.command().name(),
        "gains": { "a": r.gains.a, "A": r.gains.big_a, "s": r.gains.s, "b": r.gains.b, "t": r.gains.t },
        "model": {
            "mode": match r.model.mode { MeasurementMode::Analytic => "analytic", MeasurementMode::Sampled => "sampled" },
            "pairs_per_setting": r.model.pairs_per_setting,
            "background_rate": r.model.background_rate,
        },
        "iterations": r.iterations,
        "trials": r.trials,
        "master_seed": r.master_seed,
    });
    match &r.task {
        Task::LearnState { target, initial } => {
            v["target"] = json!(target.text);
            v["initial"] = json!(initial.text);
        }
        Task::Characterize { process, probes, initial } => {
            v["process"] = json!(process);
            v["probes"] = json!(probes.iter().map(|p| p.text.clone()).collect::<Vec<_>>());
            v["initial"] = json!(initial.text);
        }
        Task::Multiphase { scene } => {
            let mut s = json!({ "n": scene.n, "sigma": scene.sigma });
            if let Some(w) = &scene.weights {
                s["A"] = json!(w);
            }
            if let Some(p) = &scene.psi {
                s["psi"] = json!(p);
            }
            v["scene"] = s;
        }
    }
    v
}

/// Object reader that rejects keys outside an allowed set.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: &str, allowed: &[&str]) -> CResult<Self> {
        let map = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        if let Some(k) = map.keys().find(|k| !allowed.contains(k.as_str())) {
            return Err(schema(&format!("{path}.{k}"), "unknown key"));
        }
        Ok(Obj { map, path: path.to_string() })
    }

    fn at(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn str(&self, key: &str) -> CResult<Option<&'a str>> {
        self.get(key).map(|v| v.as_str().ok_or_else(|| schema(&self.at(key), "expected a string"))).transpose()
    }

    fn f64(&self, key: &str) -> CResult<Option<f64>> {
        self.get(key).map(|v| v.as_f64().ok_or_else(|| schema(&self.at(key), "expected a number"))).transpose()
    }

    fn u64(&self, key: &str) -> CResult<Option<u64>> {
        self.get(key)
            .map(|v| match v.as_u64() {
                Some(n) => Ok(n),
                None if v.as_i64().is_some() => Err(range(&self.at(key), v, "must be non-negative")),
                None => Err(schema(&self.at(key), "expected an integer")),
            })
            .transpose()
    }

    fn f64_list(&self, key: &str) -> CResult<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let arr = v.as_array().ok_or_else(|| schema(&self.at(key), "expected an array of numbers"))?;
        arr.iter()
            .enumerate()
            .map(|(i, x)| x.as_f64().ok_or_else(|| schema(&format!("{}[{i}]", self.at(key)), "expected a number")))
            .collect::<CResult<Vec<_>>>()
            .map(Some)
    }
}

fn state_at(text: &str, path: &str) -> CResult<NamedState> {
    NamedState::parse(text).ok_or_else(|| {
        schema(path, format!("{text:?} is neither a builtin target (psi_t1..psi_t6) nor a state literal"))
    })
}

fn parse_gains(v: Option<&Value>, path: &str, defaults: GainSchedule) -> CResult<GainSchedule> {
    let Some(v) = v else { return Ok(defaults) };
    let o = Obj::new(v, path, &["a", "A", "s", "b", "t"])?;
    let g = GainSchedule {
        a: o.f64("a")?.unwrap_or(defaults.a),
        big_a: o.f64("A")?.unwrap_or(defaults.big_a),
        s: o.f64("s")?.unwrap_or(defaults.s),
        b: o.f64("b")?.unwrap_or(defaults.b),
        t: o.f64("t")?.unwrap_or(defaults.t),
    };
    for (key, value, ok) in [
        ("a", g.a, g.a > 0.0),
        ("A", g.big_a, g.big_a >= 0.0),
        ("s", g.s, g.s > 0.0),
        ("b", g.b, g.b > 0.0),
        ("t", g.t, g.t > 0.0),
    ] {
        if !ok {
            let rule = if key == "A" { "must be non-negative" } else { "must be positive" };
            return Err(range(&o.at(key), value, rule));
        }
    }
    Ok(g)
}

fn parse_model(v: Option<&Value>, path: &str) -> CResult<ModelConfig> {
    let d = ModelConfig::default();
    let Some(v) = v else { return Ok(d) };
    let o = Obj::new(v, path, &["mode", "pairs_per_setting", "background_rate"])?;
    let mode = match o.str("mode")? {
        None | Some("analytic") => MeasurementMode::Analytic,
        Some("sampled") => MeasurementMode::Sampled,
        Some(other) => return Err(schema(&o.at("mode"), format!("{other:?} is not analytic|sampled"))),
    };
    let pairs_per_setting = o.u64("pairs_per_setting")?.unwrap_or(d.pairs_per_setting);
    if pairs_per_setting == 0 {
        return Err(range(&o.at("pairs_per_setting"), 0, "must be at least 1"));
    }
    let background_rate = o.f64("background_rate")?.unwrap_or(d.background_rate);
    if background_rate < 0.0 {
        return Err(range(&o.at("background_rate"), background_rate, "must be non-negative"));
    }
    Ok(ModelConfig { mode, pairs_per_setting, background_rate })
}

fn parse_scene(v: Option<&Value>, path: &str) -> CResult<SceneSpec> {
    let Some(v) = v else { return Ok(SceneSpec { n: 10, weights: None, sigma: 1.0, psi: None }) };
    let o = Obj::new(v, path, &["n", "A", "sigma", "psi"])?;
    let weights = o.f64_list("A")?;
    let psi = o.f64_list("psi")?;
    let inferred = psi.as_ref().map(Vec::len).or(weights.as_ref().map(Vec::len));
    let n = match (o.u64("n")?, inferred) {
        (Some(n), _) => n as usize,
        (None, Some(n)) => n,
        (None, None) => 10,
    };
    if n == 0 {
        return Err(range(&o.at("n"), 0, "must be at least 1"));
    }
    let sigma = o.f64("sigma")?.unwrap_or(1.0);
    if sigma < 0.0 {
        return Err(range(&o.at("sigma"), sigma, "must be non-negative"));
    }
    if let Some(w) = &weights {
        if w.len() != n {
            return Err(range(&o.at("A"), w.len(), format!("entries given, expected n = {n}")));
        }
        if let Some((i, a)) = w.iter().enumerate().find(|(_, a)| **a < 0.0) {
            return Err(range(&format!("{}[{i}]", o.at("A")), a, "must be non-negative"));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(range(&o.at("A"), total, "is the sum; weights must sum to 1"));
        }
        if psi.is_none() {
            return Err(schema(&o.at("psi"), "required when A is given"));
        }
    }
    if let Some(p) = &psi {
        if p.len() != n {
            return Err(range(&o.at("psi"), p.len(), format!("entries given, expected n = {n}")));
        }
    }
    Ok(SceneSpec { n, weights, sigma, psi })
}

const COMMON_KEYS: [&str; 7] = ["command", "gains", "model", "iterations", "trials", "master_seed", "output"];

fn parse_run(v: &Value, path: &str, command: Command, allow_output: bool) -> CResult<RunConfig> {
    let mut allowed: Vec<&str> = COMMON_KEYS.iter().copied().filter(|k| allow_output || *k != "output").collect();
    allowed.extend_from_slice(match command {
        Command::LearnState => &["target", "initial"][..],
        Command::Characterize => &["process", "probes", "initial"][..],
        Command::Multiphase => &["scene"][..],
        Command::Sweep => unreachable!(),
    });
    let o = Obj::new(v, path, &allowed)?;
    let initial = || -> CResult<NamedState> {
        match o.str("initial")? {
            Some(t) => state_at(t, &o.at("initial")),
            None => Ok(NamedState::parse("0, 1").unwrap()),
        }
    };
    let (task, gains_default, k_default, t_default) = match command {
        Command::LearnState => {
            let text = o.str("target")?.ok_or_else(|| schema(&o.at("target"), "required"))?;
            let target = state_at(text, &o.at("target"))?;
            let initial = initial()?;
            if initial.state.dim() != target.state.dim() {
                return Err(range(&o.at("initial"), initial.state.dim(), "dimension differs from target"));
            }
            (Task::LearnState { target, initial }, GainSchedule::default(), 20, 100)
        }
        Command::Characterize => {
            let process = o.str("process")?.ok_or_else(|| schema(&o.at("process"), "required"))?;
            parse_waveplates(process).map_err(|e| schema(&o.at("process"), e.to_string()))?;
            let probes = match o.get("probes") {
                None => ["1, 0", "1, 1", "1, i"].iter().map(|t| NamedState::parse(t).unwrap()).collect(),
                Some(Value::Array(items)) => items
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let at = format!("{}[{i}]", o.at("probes"));
                        let t = p.as_str().ok_or_else(|| schema(&at, "expected a string"))?;
                        let s = state_at(t, &at)?;
                        if s.state.dim() != 2 {
                            return Err(range(&at, s.state.dim(), "probes must be qubit states"));
                        }
                        Ok(s)
                    })
                    .collect::<CResult<Vec<_>>>()?,
                Some(_) => return Err(schema(&o.at("probes"), "expected an array of state literals")),
            };
            let initial = initial()?;
            if initial.state.dim() != 2 {
                return Err(range(&o.at("initial"), initial.state.dim(), "must be a qubit state"));
            }
            (Task::Characterize { process: process.to_string(), probes, initial }, GainSchedule::default(), 30, 1)
        }
        Command::Multiphase => {
            let scene = parse_scene(o.get("scene"), &o.at("scene"))?;
            (Task::Multiphase { scene }, GainSchedule::phase_default(), 2000, 50)
        }
        Command::Sweep => unreachable!(),
    };
    let gains = parse_gains(o.get("gains"), &o.at("gains"), gains_default)?;
    let model = parse_model(o.get("model"), &o.at("model"))?;
    let iterations = o.u64("iterations")?.unwrap_or(k_default);
    if iterations == 0 {
        return Err(range(&o.at("iterations"), 0, "must be at least 1"));
    }
    let trials = o.u64("trials")?.unwrap_or(t_default);
    if trials == 0 {
        return Err(range(&o.at("trials"), 0, "must be at least 1"));
    }
    let master_seed = o.u64("master_seed")?.unwrap_or(0);
    Ok(RunConfig { task, gains, model, iterations: iterations as usize, trials: trials as usize, master_seed })
}

fn parse_command(v: &Value, path: &str) -> CResult<Command> {
    let name = v
        .get("command")
        .ok_or_else(|| schema(&format!("{path}.command"), "required"))?
        .as_str()
        .ok_or_else(|| schema(&format!("{path}.command"), "expected a string"))?;
    Command::from_name(name).ok_or_else(|| {
        schema(&format!("{path}.command"), format!("{name:?} is not learn-state|characterize|multiphase|sweep"))
    })
}

pub const DEFAULT_OUTPUT: &str = "sgqgan_out/run";

pub fn parse_value(v: &Value) -> CResult<ExperimentConfig> {
    if !v.is_object() {
        return Err(schema("$", "expected an object"));
    }
    let command = parse_command(v, "$")?;
    let output = match v.get("output") {
        None => DEFAULT_OUTPUT.to_string(),
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(schema("$.output", "expected a non-empty string")),
    };
    let experiment = if command == Command::Sweep {
        let o = Obj::new(v, "$", &["command", "base", "grid", "output"])?;
        let base_v = o.get("base").ok_or_else(|| schema("$.base", "required"))?;
        let base_cmd = parse_command(base_v, "$.base")?;
        if base_cmd == Command::Sweep {
            return Err(schema("$.base.command", "sweeps cannot be nested"));
        }
        let base = parse_run(base_v, "$.base", base_cmd, false)?;
        let grid_v = o.get("grid").ok_or_else(|| schema("$.grid", "required"))?;
        let g = Obj::new(grid_v, "$.grid", &GRID_PARAMS)?;
        let mut grid = BTreeMap::new();
        for name in GRID_PARAMS {
            if let Some(mut values) = g.f64_list(name)? {
                if values.is_empty() {
                    return Err(range(&g.at(name), "[]", "needs at least one value"));
                }
                values.sort_by(f64::total_cmp);
                for v in &values {
                    let ok = match name {
                        "A" | "background_rate" => *v >= 0.0,
                        "pairs_per_setting" => *v >= 1.0 && v.fract() == 0.0,
                        _ => *v > 0.0,
                    };
                    if !ok || !v.is_finite() {
                        return Err(range(&g.at(name), v, "is outside the parameter's range"));
                    }
                }
                grid.insert(name.to_string(), values);
            }
        }
        if grid.is_empty() {
            return Err(schema("$.grid", "needs at least one parameter"));
        }
        Experiment::Sweep(SweepConfig { base, grid })
    } else {
        Experiment::Run(parse_run(v, "$", command, true)?)
    };
    Ok(ExperimentConfig { experiment, output })
}

pub fn parse_config(text: &str) -> CResult<ExperimentConfig> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema("$", format!("invalid JSON: {e}")))?;
    parse_value(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cfg: &ExperimentConfig) -> &RunConfig {
        match &cfg.experiment {
            Experiment::Run(r) => r,
            _ => panic!("expected a run"),
        }
    }

    #[test]
    fn minimal_learn_state_defaults() {
        let cfg = parse_config(r#"{"command":"learn-state","target":"psi_t1"}"#).unwrap();
        let r = run(&cfg);
        assert_eq!((r.iterations, r.trials, r.master_seed), (20, 100, 0));
        assert_eq!(r.model, ModelConfig::default());
        assert_eq!(r.gains, GainSchedule::default());
        assert_eq!(cfg.command(), Command::LearnState);
        match &r.task {
            Task::LearnState { target, initial } => {
                assert_eq!(target.state, PureState::horizontal());
                assert_eq!(initial.state, PureState::vertical());
            }
            _ => panic!(),
        }
    }

    #[test]
    fn range_and_schema_errors() {
        let e = parse_config(r#"{"command":"learn-state","target":"psi_t1","iterations":0}"#).unwrap_err();
        assert!(matches!(&e, ConfigError::Range { path, .. } if path == "$.iterations"), "{e}");
        let e = parse_config(r#"{"command":"learn-state","target":"psi_t1","foo":1}"#).unwrap_err();
        assert!(matches!(&e, ConfigError::Schema { path, .. } if path == "$.foo"), "{e}");
        let e = parse_config(r#"{"command":"learn-state","target":"psi_t1","gains":{"a":-1}}"#).unwrap_err();
        assert_eq!(e.path(), "$.gains.a");
        let e = parse_config(r#"{"command":"learn-state","target":"psi_t1","model":{"modee":"x"}}"#).unwrap_err();
        assert_eq!(e.path(), "$.model.modee");
        let e = parse_config(r#"{"command":"learn-state","target":"nope"}"#).unwrap_err();
        assert_eq!(e.path(), "$.target");
        let e = parse_config(r#"{"command":"learn-state"}"#).unwrap_err();
        assert_eq!(e.path(), "$.target");
        let e = parse_config(r#"{"command":"teleport"}"#).unwrap_err();
        assert_eq!(e.path(), "$.command");
        let e = parse_config(r#"{"target":"psi_t1"}"#).unwrap_err();
        assert_eq!(e.path(), "$.command");
        let e = parse_config(r#"{"command":"learn-state","target":"psi_t1","trials":-3}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Range { .. }));
        let e = parse_config(r#"{"command":"multiphase","scene":{"n":2,"A":[0.3,0.3],"psi":[0,1]}}"#).unwrap_err();
        assert_eq!(e.path(), "$.scene.A");
        let e = parse_config(r#"{"command":"multiphase","scene":{"psi":[0,1],"n":3}}"#).unwrap_err();
        assert_eq!(e.path(), "$.scene.psi");
        let e = parse_config(r#"{"command":"characterize","process":"lens:4"}"#).unwrap_err();
        assert_eq!(e.path(), "$.process");
        let e = parse_config(r#"{"command":"characterize","process":"hwp:4","probes":["1, 0", 3]}"#).unwrap_err();
        assert_eq!(e.path(), "$.probes[1]");
        let e = parse_config("[1,2]").unwrap_err();
        assert_eq!(e.path(), "$");
        let e = parse_config("{not json").unwrap_err();
        assert_eq!(e.path(), "$");
    }

    #[test]
    fn command_defaults() {
        let c = parse_config(r#"{"command":"characterize","process":"hwp:22.5,qwp:45"}"#).unwrap();
        let r = run(&c);
        assert_eq!((r.iterations, r.trials), (30, 1));
        let m = parse_config(r#"{"command":"multiphase"}"#).unwrap();
        let r = run(&m);
        assert_eq!((r.iterations, r.trials), (2000, 50));
        assert_eq!(r.gains, GainSchedule::phase_default());
        assert_eq!(r.task, Task::Multiphase { scene: SceneSpec { n: 10, weights: None, sigma: 1.0, psi: None } });
    }

    #[test]
    fn manifest_round_trip() {
        let texts = [
            r#"{"command":"learn-state","target":"0.75, 0.07+0.65i","model":{"mode":"sampled","background_rate":50},"master_seed":18446744073709551615}"#,
            r#"{"command":"characterize","process":"hwp:22.5,qwp:45","probes":["psi_t1","1, 1"],"gains":{"b":0.15}}"#,
            r#"{"command":"multiphase","scene":{"A":[0.25,0.75],"psi":[0.1,-2.9],"sigma":0.5},"iterations":7}"#,
            r#"{"command":"sweep","base":{"command":"learn-state","target":"psi_t4","trials":3},"grid":{"b":[0.1,0.05],"a":[3,1]},"output":"x/y"}"#,
        ];
        for t in texts {
            let cfg = parse_config(t).unwrap();
            let again = parse_value(&cfg.to_json()).unwrap();
            assert_eq!(cfg, again, "{t}");
        }
    }

    #[test]
    fn sweep_grid_order() {
        let cfg = parse_config(
            r#"{"command":"sweep","base":{"command":"learn-state","target":"psi_t1"},"grid":{"b":[0.1,0.05],"a":[3,1]}}"#,
        )
        .unwrap();
        let Experiment::Sweep(s) = &cfg.experiment else { panic!() };
        let pts = s.points();
        assert_eq!(pts.len(), 4);
        let flat: Vec<(f64, f64)> = pts.iter().map(|p| (p[0].1, p[1].1)).collect();
        assert_eq!(flat, vec![(1.0, 0.05), (1.0, 0.1), (3.0, 0.05), (3.0, 0.1)]);
        assert_eq!(pts[0][0].0, "a");
        let applied = s.apply(&pts[3]);
        assert_eq!((applied.gains.a, applied.gains.b), (3.0, 0.1));
        let e =
            parse_config(r#"{"command":"sweep","base":{"command":"learn-state","target":"psi_t1"},"grid":{"z":[1]}}"#)
                .unwrap_err();
        assert_eq!(e.path(), "$.grid.z");
        let e = parse_config(
            r#"{"command":"sweep","base":{"command":"learn-state","target":"psi_t1","output":"o"},"grid":{"a":[1]}}"#,
        )
        .unwrap_err();
        assert_eq!(e.path(), "$.base.output");
    }
}
