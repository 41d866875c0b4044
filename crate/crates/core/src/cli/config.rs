//! Run configuration: strict JSON parsing, validation and digests.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kernels::{AngularSection, KernelSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("invalid configuration:\n  {}", .0.iter().map(|(p, m)| format!("{p}: {m}")).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<(String, String)>),
}

impl ConfigError {
    /// Offending paths, in document order.
    pub fn paths(&self) -> Vec<&str> {
        match self {
            Self::Json(_) => vec![],
            Self::Invalid(v) => v.iter().map(|(p, _)| p.as_str()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InitSpec {
    Gaussian { temperature: f64, drift: Vec<f64> },
    /// Velocities read from an ensemble snapshot; `species` selects the block.
    File { path: PathBuf, species: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciesConfig {
    pub mass: f64,
    pub count: usize,
    pub init: InitSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub b_preset: String,
    pub b_coefficients: Vec<f64>,
    pub e: f64,
}

impl KernelConfig {
    pub fn spec(&self) -> KernelSpec {
        let b = AngularSection::from_preset(&self.b_preset, &self.b_coefficients)
            .expect("validated at parse time");
        KernelSpec::new(self.lambda, self.gamma, b).expect("validated at parse time")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    /// `None` until resolved from the initial ensemble.
    pub dt: Option<f64>,
    pub steps: u64,
    pub sample_every: u64,
    pub max_candidates_per_step: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservablesConfig {
    pub entropy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub snapshot_every: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dimension: usize,
    pub species: Vec<SpeciesConfig>,
    pub kernel: KernelConfig,
    pub time: TimeConfig,
    pub seed: u64,
    pub observables: ObservablesConfig,
    pub outputs: OutputConfig,
}

impl SimConfig {
    pub fn masses(&self) -> Vec<f64> {
        self.species.iter().map(|s| s.mass).collect()
    }

    pub fn total_count(&self) -> usize {
        self.species.iter().map(|s| s.count).sum()
    }

    pub fn max_candidates(&self) -> u64 {
        self.time
            .max_candidates_per_step
            .unwrap_or(10 * self.total_count() as u64)
    }

    /// Canonical JSON (sorted keys) of every field that affects the physics.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("outputs");
        }
        // serde_json's default map is ordered by key.
        v.to_string()
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct Reader {
    errors: Vec<(String, String)>,
}

impl Reader {
    fn err(&mut self, path: &str, msg: impl Into<String>) {
        self.errors.push((path.to_string(), msg.into()));
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => {
                for k in m.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.err(&join(path, k), "unknown key");
                    }
                }
                Some(m)
            }
            None => {
                self.err(path, "expected an object");
                None
            }
        }
    }

    fn number(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<f64>) -> Option<f64> {
        let p = join(path, key);
        match m.get(key) {
            None => {
                if default.is_none() {
                    self.err(&p, "missing required field");
                }
                default
            }
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.err(&p, "expected a finite number");
                    None
                }
            },
        }
    }

    fn integer(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<u64>) -> Option<u64> {
        let p = join(path, key);
        match m.get(key) {
            None => {
                if default.is_none() {
                    self.err(&p, "missing required field");
                }
                default
            }
            Some(v) => match v.as_u64() {
                Some(x) => Some(x),
                None => {
                    self.err(&p, "expected a nonnegative integer");
                    None
                }
            },
        }
    }

    fn optional_integer(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<u64> {
        match m.get(key) {
            None | Some(Value::Null) => None,
            Some(_) => self.integer(m, path, key, None),
        }
    }

    fn string(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<&str>) -> Option<String> {
        let p = join(path, key);
        match m.get(key) {
            None => {
                if default.is_none() {
                    self.err(&p, "missing required field");
                }
                default.map(str::to_string)
            }
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.err(&p, "expected a string");
                None
            }
        }
    }

    fn numbers(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Vec<f64>) -> Option<Vec<f64>> {
        let p = join(path, key);
        match m.get(key) {
            None => Some(default),
            Some(Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                let mut ok = true;
                for (i, x) in a.iter().enumerate() {
                    match x.as_f64() {
                        Some(x) if x.is_finite() => out.push(x),
                        _ => {
                            self.err(&format!("{p}[{i}]"), "expected a finite number");
                            ok = false;
                        }
                    }
                }
                ok.then_some(out)
            }
            Some(_) => {
                self.err(&p, "expected an array of numbers");
                None
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Parses and validates a run configuration, resolving every default.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let mut r = Reader { errors: Vec::new() };
    let top = r
        .object(&root, "", &["dimension", "species", "kernel", "time", "seed", "observables", "outputs"])
        .cloned()
        .unwrap_or_default();

    let dimension = r.integer(&top, "", "dimension", Some(3));
    if let Some(d) = dimension {
        if !(1..=3).contains(&d) {
            r.err("dimension", "must be 1, 2 or 3");
        }
    }
    let d = dimension.unwrap_or(3).clamp(1, 3) as usize;

    let mut species = Vec::new();
    match top.get("species") {
        Some(Value::Array(list)) if !list.is_empty() => {
            for (i, item) in list.iter().enumerate() {
                let p = format!("species[{i}]");
                if let Some(s) = parse_species(&mut r, item, &p, d, i) {
                    species.push(s);
                }
            }
        }
        Some(Value::Array(_)) => r.err("species", "must list at least one species"),
        Some(_) => r.err("species", "expected an array"),
        None => r.err("species", "missing required field"),
    }

    let empty = Map::new();
    let kernel = top.get("kernel").map(|k| {
        r.object(k, "kernel", &["lambda", "gamma", "b_preset", "b_coefficients", "e"])
            .cloned()
            .unwrap_or_default()
    });
    if kernel.is_none() {
        r.err("kernel", "missing required field");
    }
    let km = kernel.unwrap_or_default();
    let lambda = r.number(&km, "kernel", "lambda", Some(1.0));
    let gamma = r.number(&km, "kernel", "gamma", Some(0.0));
    let b_preset = r.string(&km, "kernel", "b_preset", Some("const"));
    let b_coefficients = r.numbers(&km, "kernel", "b_coefficients", vec![1.0]);
    let e = if top.contains_key("kernel") { r.number(&km, "kernel", "e", None) } else { None };
    if let Some(l) = lambda {
        if !(0.0..=1.0).contains(&l) {
            r.err("kernel.lambda", "must lie in [0, 1]");
        }
    }
    if let Some(e) = e {
        if !(e > 0.0 && e <= 1.0) {
            r.err("kernel.e", "must lie in (0, 1]");
        }
    }
    if let (Some(name), Some(coef)) = (&b_preset, &b_coefficients) {
        match AngularSection::from_preset(name, coef) {
            Ok(b) => {
                if b.bounds().0 <= 0.0 {
                    r.err("kernel.b_coefficients", "angular section must be positive on [-1, 1]");
                }
            }
            Err(err) => r.err("kernel.b_preset", err.to_string()),
        }
    }

    let tm = match top.get("time") {
        Some(t) => r
            .object(t, "time", &["dt", "steps", "sample_every", "max_candidates_per_step"])
            .cloned()
            .unwrap_or_default(),
        None => {
            r.err("time", "missing required field");
            empty.clone()
        }
    };
    let dt = match tm.get("dt") {
        None | Some(Value::Null) => Some(None),
        Some(_) => r.number(&tm, "time", "dt", None).map(Some),
    };
    if let Some(Some(dt)) = dt {
        if dt <= 0.0 {
            r.err("time.dt", "must be positive");
        }
    }
    let steps = if top.contains_key("time") { r.integer(&tm, "time", "steps", None) } else { None };
    let sample_every = r.integer(&tm, "time", "sample_every", Some(1));
    if sample_every == Some(0) {
        r.err("time.sample_every", "must be at least 1");
    }
    let max_candidates = r.optional_integer(&tm, "time", "max_candidates_per_step");

    let seed = r.integer(&top, "", "seed", Some(0));

    let om = match top.get("observables") {
        Some(o) => r.object(o, "observables", &["entropy"]).cloned().unwrap_or_default(),
        None => empty.clone(),
    };
    let entropy = match om.get("entropy") {
        None => Some(true),
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => {
            r.err("observables.entropy", "expected a boolean");
            None
        }
    };

    let outm = match top.get("outputs") {
        Some(o) => r
            .object(o, "outputs", &["csv_path", "manifest_path", "snapshot_every"])
            .cloned()
            .unwrap_or_default(),
        None => empty,
    };
    let csv_path = r.string(&outm, "outputs", "csv_path", Some("series.csv"));
    let manifest_path = r.string(&outm, "outputs", "manifest_path", Some("manifest.json"));
    let snapshot_every = r.optional_integer(&outm, "outputs", "snapshot_every");
    if snapshot_every == Some(0) {
        r.err("outputs.snapshot_every", "must be at least 1");
    }

    if !r.errors.is_empty() {
        return Err(ConfigError::Invalid(r.errors));
    }
    Ok(SimConfig {
        dimension: d,
        species,
        kernel: KernelConfig {
            lambda: lambda.unwrap(),
            gamma: gamma.unwrap(),
            b_preset: b_preset.unwrap(),
            b_coefficients: b_coefficients.unwrap(),
            e: e.unwrap(),
        },
        time: TimeConfig {
            dt: dt.unwrap(),
            steps: steps.unwrap(),
            sample_every: sample_every.unwrap(),
            max_candidates_per_step: max_candidates,
        },
        seed: seed.unwrap(),
        observables: ObservablesConfig { entropy: entropy.unwrap() },
        outputs: OutputConfig {
            csv_path: csv_path.unwrap().into(),
            manifest_path: manifest_path.unwrap().into(),
            snapshot_every,
        },
    })
}

fn parse_species(r: &mut Reader, v: &Value, path: &str, d: usize, index: usize) -> Option<SpeciesConfig> {
    let m = r.object(v, path, &["mass", "count", "init"])?.clone();
    let mass = r.number(&m, path, "mass", None);
    if let Some(x) = mass {
        if x <= 0.0 {
            r.err(&join(path, "mass"), "must be positive");
        }
    }
    let count = r.integer(&m, path, "count", None);
    if let Some(n) = count {
        if n < 2 {
            r.err(&join(path, "count"), "must be at least 2");
        }
    }
    let ip = join(path, "init");
    let init = match m.get("init") {
        None => {
            r.err(&ip, "missing required field");
            None
        }
        Some(iv) => match iv.get("type").and_then(Value::as_str) {
            Some("gaussian") => {
                let im = r.object(iv, &ip, &["type", "temperature", "drift"])?.clone();
                let t = r.number(&im, &ip, "temperature", None);
                if let Some(t) = t {
                    if t <= 0.0 {
                        r.err(&join(&ip, "temperature"), "must be positive");
                    }
                }
                let drift = r.numbers(&im, &ip, "drift", vec![0.0; d]);
                if let Some(dr) = &drift {
                    if dr.len() != d {
                        r.err(&join(&ip, "drift"), format!("expected {d} components"));
                    }
                }
                Some(InitSpec::Gaussian { temperature: t?, drift: drift? })
            }
            Some("file") => {
                let im = r.object(iv, &ip, &["type", "path", "species"])?.clone();
                let p = r.string(&im, &ip, "path", None);
                let s = r.integer(&im, &ip, "species", Some(index as u64));
                Some(InitSpec::File { path: p?.into(), species: s? as usize })
            }
            _ => {
                r.err(&join(&ip, "type"), "expected \"gaussian\" or \"file\"");
                None
            }
        },
    };
    Some(SpeciesConfig { mass: mass?, count: count? as usize, init: init? })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "species": [
            {"mass": 1.0, "count": 100, "init": {"type": "gaussian", "temperature": 1.0}},
            {"mass": 2.0, "count": 50, "init": {"type": "gaussian", "temperature": 1.0}}
        ],
        "kernel": {"e": 0.7},
        "time": {"steps": 10}
    }"#;

    #[test]
    fn minimal_config_is_fully_defaulted() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.dimension, 3);
        assert_eq!(c.kernel.lambda, 1.0);
        assert_eq!(c.kernel.gamma, 0.0);
        assert_eq!(c.kernel.b_preset, "const");
        assert_eq!(c.kernel.b_coefficients, vec![1.0]);
        assert_eq!(c.time.dt, None);
        assert_eq!(c.time.sample_every, 1);
        assert_eq!(c.seed, 0);
        assert!(c.observables.entropy);
        assert_eq!(c.max_candidates(), 1500);
        assert_eq!(
            c.species[0].init,
            InitSpec::Gaussian { temperature: 1.0, drift: vec![0.0; 3] }
        );
        let echoed: Value = serde_json::from_str(&c.canonical_json()).unwrap();
        assert_eq!(echoed["kernel"]["lambda"], 1.0);
    }

    #[test]
    fn out_of_range_restitution_names_path() {
        let text = MINIMAL.replace("\"e\": 0.7", "\"e\": 1.5");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.paths(), vec!["kernel.e"]);
        assert!(err.to_string().contains("kernel.e"));
    }

    #[test]
    fn every_offending_path_is_listed() {
        let text = r#"{
            "dimension": 4,
            "species": [{"mass": -1, "count": 1, "init": {"type": "gaussian", "temperature": 0}}],
            "kernel": {"e": 0, "lambda": 2, "colour": 1},
            "time": {"steps": 1, "dt": -0.5}
        }"#;
        let err = parse_config(text).unwrap_err();
        let paths = err.paths();
        for p in [
            "dimension",
            "species[0].mass",
            "species[0].count",
            "species[0].init.temperature",
            "kernel.colour",
            "kernel.lambda",
            "kernel.e",
            "time.dt",
        ] {
            assert!(paths.contains(&p), "missing {p} in {paths:?}");
        }
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let text = MINIMAL.replacen('{', "{\"extra\": true,", 1);
        assert_eq!(parse_config(&text).unwrap_err().paths(), vec!["extra"]);
    }

    #[test]
    fn digest_is_stable_under_key_order_and_ignores_outputs() {
        let a = parse_config(MINIMAL).unwrap();
        let reordered = r#"{
            "time": {"steps": 10},
            "kernel": {"e": 0.7},
            "species": [
                {"init": {"temperature": 1.0, "type": "gaussian"}, "count": 100, "mass": 1.0},
                {"count": 50, "mass": 2.0, "init": {"type": "gaussian", "temperature": 1.0}}
            ],
            "outputs": {"csv_path": "elsewhere.csv"}
        }"#;
        let b = parse_config(reordered).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest(), parse_config(MINIMAL).unwrap().digest());
        let c = parse_config(&MINIMAL.replace("0.7", "0.8")).unwrap();
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse_config("{"), Err(ConfigError::Json(_))));
    }
}
