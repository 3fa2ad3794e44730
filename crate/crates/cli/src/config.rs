//! Run configuration: JSON file and command line flags resolve to one [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use widder_core::catalog::{self, ClosedFormPair, PairTerm};
use widder_core::{EnvelopedFunction, Method, TransformOracle, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Transform,
    Derivative,
    WidderCheck,
    Invert,
    Represent,
    Roundtrip,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().unwrap())
    }
}

/// Inline density: a sum of tensor products of `c t^a e^(b t) {1, cos, sin}(w t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub n: usize,
    #[serde(default = "one")]
    pub d: usize,
    pub terms: Vec<PairTerm>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    /// Primary grid: lambda for transform, derivative and widder-check; t otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmax: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// Weight vectors of the seminorm family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seminorms: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<widder_core::Error> for ConfigError {
    fn from(e: widder_core::Error) -> Self {
        ConfigError(format!("{}: {e}", e.code()))
    }
}

pub fn cfg_err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// The published schema for [`RunConfig`].
pub const SCHEMA: &str = include_str!("../schema/run_config.schema.json");

fn validator() -> &'static jsonschema::Validator {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    V.get_or_init(|| {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("schema is JSON");
        jsonschema::validator_for(&schema).expect("schema compiles")
    })
}

fn json_path(pointer: &jsonschema::paths::Location) -> String {
    let mut out = String::from("$");
    for seg in pointer.segments() {
        match seg {
            jsonschema::paths::LocationSegment::Property(p) => {
                out.push('.');
                out.push_str(&p);
            }
            jsonschema::paths::LocationSegment::Index(i) => out.push_str(&format!("[{i}]")),
        }
    }
    out
}

/// Check a JSON document against [`SCHEMA`], reporting the first violation.
pub fn validate(instance: &serde_json::Value) -> Result<(), ConfigError> {
    match validator().iter_errors(instance).next() {
        Some(e) => cfg_err(format!("config error at {}: {e}", json_path(e.instance_path()))),
        None => Ok(()),
    }
}

impl RunConfig {
    /// Parse JSON, validate it against the schema and report the path of the
    /// offending field.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError(format!("config error at $: {e}")))?;
        validate(&value)?;
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "$".to_string() } else { format!("$.{path}") };
            ConfigError(format!("config error at {path}: {}", e.inner()))
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate(&serde_json::to_value(self).expect("config serializes"))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(command, entry, function, grid, lambda, t, omega, vmax, kmax, tol, r, orders, method, seminorms, output, csv);
        self
    }

    /// SHA-256 of the canonical JSON, ignoring output destinations.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.csv = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Parse `start:stop:step`, a comma list or a single number per coordinate,
/// coordinates joined by `x`.
pub fn parse_axes(spec: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    spec.split('x').map(|axis| parse_axis(axis.trim())).collect()
}

fn num(s: &str, spec: &str) -> Result<f64, ConfigError> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => cfg_err(format!("grid {spec:?}: {s:?} is not a finite number")),
    }
}

fn parse_axis(axis: &str) -> Result<Vec<f64>, ConfigError> {
    if axis.is_empty() {
        return cfg_err("empty grid axis");
    }
    let parts: Vec<&str> = axis.split(':').collect();
    match parts.len() {
        1 => axis.split(',').map(|s| num(s, axis)).collect(),
        3 => {
            let (a, b, h) = (num(parts[0], axis)?, num(parts[1], axis)?, num(parts[2], axis)?);
            if !(h > 0.0) || b < a {
                return cfg_err(format!("grid {axis:?} needs start <= stop and a positive step"));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return cfg_err(format!("grid {axis:?} has more than 100000 points"));
            }
            Ok((0..count).map(|i| a + i as f64 * h).collect())
        }
        _ => cfg_err(format!("grid axis {axis:?} must be start:stop:step or a comma list")),
    }
}

/// Tensor product of axes, first coordinate outermost.
pub fn tensor_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for axis in axes {
        out = out.iter().flat_map(|p| axis.iter().map(move |x| [p.as_slice(), &[*x]].concat())).collect();
    }
    out
}

pub fn broadcast<T: Clone>(v: &[T], n: usize, what: &str) -> Result<Vec<T>, ConfigError> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); n]),
        k if k == n => Ok(v.to_vec()),
        k => cfg_err(format!("{what} has {k} entries, expected 1 or {n}")),
    }
}

/// The function under study, from the catalog or from an inline spec.
pub struct Subject {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub density: EnvelopedFunction,
    pub oracle: TransformOracle,
    pub sample_lambdas: Vec<Vec<C64>>,
}

impl Subject {
    pub fn resolve(cfg: &RunConfig) -> Result<Subject, ConfigError> {
        match (&cfg.entry, &cfg.function) {
            (Some(_), Some(_)) => cfg_err("give either an entry or an inline function, not both"),
            (None, None) => cfg_err("no function: set `entry` or `function`"),
            (Some(name), None) => {
                let e = catalog::get(name)?;
                Ok(Subject {
                    name: e.name.clone(),
                    n: e.n,
                    d: e.d,
                    density: e.density.clone(),
                    oracle: e.oracle.clone(),
                    sample_lambdas: e.sample_lambdas.clone(),
                })
            }
            (None, Some(spec)) => {
                if spec.n > 3 || spec.d > 3 {
                    return cfg_err("inline functions need n <= 3 and d <= 3");
                }
                let pair = ClosedFormPair::new(spec.n, spec.d, spec.terms.clone())?;
                let base: Vec<f64> = pair.abscissa().iter().map(|w| w.max(0.0)).collect();
                let envelope_w: Vec<f64> = pair
                    .envelope(&widder_core::SeminormFamily::sup(spec.d))
                    .map(|e| e.omega)
                    .unwrap_or_else(|| base.clone());
                let sample_lambdas = [1.0, 2.0, 3.5]
                    .iter()
                    .map(|off| base.iter().zip(&envelope_w).map(|(b, w)| C64::new(b.max(*w) + off, 0.0)).collect())
                    .collect();
                Ok(Subject {
                    name: "inline".into(),
                    n: pair.n,
                    d: pair.d,
                    density: pair.density(),
                    oracle: pair.oracle(),
                    sample_lambdas,
                })
            }
        }
    }
}
