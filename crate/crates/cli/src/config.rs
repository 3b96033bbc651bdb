//! Flat `key = value` run configuration with `#` comments and `TQD3D_*`
//! environment overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tqd_core::dynamics::IntegratorConfig;
use tqd_core::experiments::{linspace, PulseShape, Scenario};
use tqd_core::model::ModelParams;
use tqd_core::pulses::{FittedPulse, GaussianTerm};

use crate::error::CliError;

/// Environment variables `TQD3D_<KEY>` override the file; the key is
/// upper-cased with `.` replaced by `_` (e.g. `TQD3D_FIT1_AMPLITUDE`).
pub const ENV_PREFIX: &str = "TQD3D_";

/// Every accepted key with its default, in manifest order.
pub const KEYS: &[(&str, &str)] = &[
    ("delta", "3.6"),
    ("t_f", "50"),
    ("kappa", "0"),
    ("gamma", "0"),
    ("omega0", "0.35"),
    ("tau_frac", "0.12"),
    ("T_frac", "0.16"),
    ("fit1.amplitude", "0.3861"),
    ("fit1.center", "25.6816"),
    ("fit1.width", "12.2827"),
    ("fit2.amplitude", "0.3227"),
    ("fit2.center", "25.6808"),
    ("fit2.width", "5.7835"),
    ("dt", "0.002"),
    ("record_every", "50"),
    ("out", "out"),
    ("sweep.t_f", "10:100:46"),
    ("sweep.delta", "0.5:10:39"),
    ("sweep.kappa", "0:0.05:26"),
    ("sweep.gamma", "0:0.05:26"),
    ("sweep.deviation", "-0.1:0.1:21"),
    ("sweep.cap", "200"),
];

pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"))
}

/// `start:stop:count`, evenly spaced and inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub sweep_t_f: Range,
    pub sweep_delta: Range,
    pub sweep_kappa: Range,
    pub sweep_gamma: Range,
    pub sweep_deviation: Range,
    pub axis_cap: usize,
    /// Resolved `key = value` pairs, for the manifest.
    pub resolved: Vec<(String, String)>,
}

/// Where a value came from, for error messages.
#[derive(Clone, Debug)]
enum Origin {
    Default,
    File(PathBuf, usize),
    Env(String),
}

impl Origin {
    fn error(&self, key: &str, message: &str) -> CliError {
        match self {
            Origin::Default => CliError::Config(format!("default for {key}: {message}")),
            Origin::File(path, line) => CliError::Config(format!("{}:{line}: {key}: {message}", path.display())),
            Origin::Env(var) => CliError::Config(format!("environment variable {var}: {message}")),
        }
    }
}

fn parse_file(path: &Path, text: &str, values: &mut BTreeMap<String, (String, Origin)>) -> Result<(), CliError> {
    let mut seen = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| CliError::Config(format!("{}:{line_no}: {msg}", path.display()));
        let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(known, _)| *known == key) {
            return Err(at(format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(at(format!("missing value for `{key}`")));
        }
        if let Some(first) = seen.insert(key.to_string(), line_no) {
            return Err(at(format!("`{key}` already set on line {first}")));
        }
        values.insert(key.to_string(), (value.to_string(), Origin::File(path.to_path_buf(), line_no)));
    }
    Ok(())
}

struct Values(BTreeMap<String, (String, Origin)>);

impl Values {
    fn raw(&self, key: &str) -> &(String, Origin) {
        self.0.get(key).expect("every key has a default")
    }

    fn float(&self, key: &str) -> Result<f64, CliError> {
        let (v, origin) = self.raw(key);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(origin.error(key, &format!("`{v}` is not a finite number"))),
        }
    }

    fn count(&self, key: &str) -> Result<usize, CliError> {
        let (v, origin) = self.raw(key);
        match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(origin.error(key, &format!("`{v}` is not a positive integer"))),
        }
    }

    fn range(&self, key: &str) -> Result<Range, CliError> {
        let (v, origin) = self.raw(key);
        let bad = || origin.error(key, &format!("`{v}` is not `start:stop:count`"));
        let parts: Vec<&str> = v.split(':').map(str::trim).collect();
        let [start, stop, count] = parts[..] else { return Err(bad()) };
        let start: f64 = start.parse().map_err(|_| bad())?;
        let stop: f64 = stop.parse().map_err(|_| bad())?;
        let count: usize = count.parse().map_err(|_| bad())?;
        if !start.is_finite() || !stop.is_finite() || count == 0 {
            return Err(bad());
        }
        Ok(Range { start, stop, count })
    }

    fn check(&self, key: &str, ok: bool, message: &str) -> Result<(), CliError> {
        if ok {
            Ok(())
        } else {
            Err(self.raw(key).1.error(key, message))
        }
    }
}

impl RunConfig {
    /// Defaults, then the file (if any), then the environment.
    pub fn load(path: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, (String, Origin)> =
            KEYS.iter().map(|(k, v)| (k.to_string(), (v.to_string(), Origin::Default))).collect();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_file(path, &text, &mut values)?;
        }
        for (key, _) in KEYS {
            let var = env_name(key);
            if let Some(v) = env(&var) {
                values.insert(key.to_string(), (v.trim().to_string(), Origin::Env(var)));
            }
        }
        Self::resolve(Values(values))
    }

    fn resolve(v: Values) -> Result<Self, CliError> {
        let params = ModelParams {
            g: 1.0,
            delta: v.float("delta")?,
            kappa: v.float("kappa")?,
            gamma: v.float("gamma")?,
            t_f: v.float("t_f")?,
        };
        v.check("t_f", params.t_f > 0.0, "must be positive")?;
        v.check("kappa", params.kappa >= 0.0, "must be nonnegative")?;
        v.check("gamma", params.gamma >= 0.0, "must be nonnegative")?;
        v.check("delta", params.delta != 0.0, "must be nonzero")?;

        let shape = PulseShape {
            omega0: v.float("omega0")?,
            tau_fraction: v.float("tau_frac")?,
            width_fraction: v.float("T_frac")?,
        };
        v.check("omega0", shape.omega0 > 0.0, "must be positive")?;
        v.check("tau_frac", shape.tau_fraction > 0.0 && shape.tau_fraction < 0.5, "must lie in (0, 0.5)")?;
        v.check("T_frac", shape.width_fraction > 0.0, "must be positive")?;

        let mut terms = Vec::new();
        for k in 1..=2 {
            let width_key = format!("fit{k}.width");
            let term = GaussianTerm {
                amplitude: v.float(&format!("fit{k}.amplitude"))?,
                center: v.float(&format!("fit{k}.center"))?,
                width: v.float(&width_key)?,
            };
            v.check(&width_key, term.width > 0.0, "must be positive")?;
            terms.push(term);
        }
        let fitted = FittedPulse::new(terms).map_err(|e| CliError::Config(e.to_string()))?;

        let integrator = IntegratorConfig {
            dt: v.float("dt")?,
            record_every: v.count("record_every")?,
            reduce_support: true,
        };
        v.check("dt", integrator.dt > 0.0, "must be positive")?;

        let resolved = KEYS.iter().map(|(k, _)| (k.to_string(), v.raw(k).0.clone())).collect();
        Ok(Self {
            scenario: Scenario { params, shape, fitted, integrator },
            out: PathBuf::from(&v.raw("out").0),
            sweep_t_f: v.range("sweep.t_f")?,
            sweep_delta: v.range("sweep.delta")?,
            sweep_kappa: v.range("sweep.kappa")?,
            sweep_gamma: v.range("sweep.gamma")?,
            sweep_deviation: v.range("sweep.deviation")?,
            axis_cap: v.count("sweep.cap")?,
            resolved,
        })
    }

    /// Canonical text of the resolved configuration; the manifest hashes this.
    pub fn canonical(&self) -> String {
        self.resolved.iter().filter(|(k, _)| k != "out").map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::load(None, |_| None).expect("defaults are valid")
    }
}
