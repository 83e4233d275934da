//! Run settings from a `key = value` file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use agekin::ShearProfile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown setting `{0}`")]
    UnknownKey(String),
    #[error("bad value {value:?} for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
}

/// Driving profile as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileSpec {
    Constant(f64),
    Ramp(f64),
}

impl ProfileSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let (kind, v) = s
            .split_once(':')
            .ok_or_else(|| "expected constant:<rate> or ramp:<slope>".to_string())?;
        let v: f64 = v.trim().parse().map_err(|e| format!("{e}"))?;
        if !v.is_finite() {
            return Err("value must be finite".into());
        }
        match kind.trim() {
            "constant" => Ok(Self::Constant(v)),
            "ramp" => Ok(Self::Ramp(v)),
            other => Err(format!("unknown profile kind `{other}`")),
        }
    }

    /// Profile in the time variable of the macroscopic closures.
    pub fn slow(&self) -> ShearProfile {
        match *self {
            Self::Constant(v) => ShearProfile::constant(v),
            Self::Ramp(a) => ShearProfile::ramp(a),
        }
    }

    /// Kinetic-time profile; ramps are slowed down by `epsilon` when given.
    pub fn kinetic(&self, epsilon: Option<f64>) -> ShearProfile {
        match epsilon {
            Some(e) => ShearProfile::time_scaled(self.slow(), e),
            None => self.slow(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub sigma_c: f64,
    pub m_sigma: f64,
    pub n_cells: usize,
    /// Kinetic time step; derived from `cfl` when absent.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_end: Option<f64>,
    pub profile: ProfileSpec,
    pub epsilon: Option<f64>,
    pub epsilons: Vec<f64>,
    pub gamma_infs: Vec<f64>,
    pub theta: f64,
    pub seed: u64,
    pub paths: usize,
    pub omega: Option<f64>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub paper_scale: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            sigma_c: 2.0,
            m_sigma: 10.0,
            n_cells: 4000,
            dt: None,
            cfl: 0.9,
            t_end: None,
            profile: ProfileSpec::Constant(1.0),
            epsilon: None,
            epsilons: vec![0.05, 0.025, 0.0125, 0.00625],
            gamma_infs: vec![0.2, 0.4, 0.6, 0.8],
            theta: 1.0,
            seed: 20_240_917,
            paths: 100_000,
            omega: None,
            out: PathBuf::from("out"),
            jobs: None,
            paper_scale: false,
        }
    }
}

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: reason.to_string(),
    }
}

fn positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.trim().parse().map_err(|e| bad(key, value, e))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, value, "must be a positive number"))
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let v = value
        .split(',')
        .map(|x| positive(key, x))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(bad(key, value, "list is empty"));
    }
    Ok(v)
}

impl Settings {
    /// Full-resolution grid and sweeps.
    pub fn paper_scale(&mut self) {
        self.paper_scale = true;
        self.n_cells = 400_000;
        self.gamma_infs = (1..=8).map(|k| k as f64 / 10.0).collect();
        self.epsilons = vec![0.05, 0.04, 0.03, 0.02, 0.01, 0.005];
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "sigma_c" => self.sigma_c = positive(key, v)?,
            "m_sigma" => self.m_sigma = positive(key, v)?,
            "n_cells" => {
                self.n_cells = v.parse().map_err(|e| bad(key, v, e))?;
            }
            "dt" => self.dt = Some(positive(key, v)?),
            "cfl" => {
                let c = positive(key, v)?;
                if c > 1.0 {
                    return Err(bad(key, v, "CFL number must be at most 1"));
                }
                self.cfl = c;
            }
            "t_end" => self.t_end = Some(positive(key, v)?),
            "profile" => self.profile = ProfileSpec::parse(v).map_err(|r| bad(key, v, r))?,
            "epsilon" => self.epsilon = Some(positive(key, v)?),
            "epsilons" => self.epsilons = list(key, v)?,
            "gamma_inf" | "gamma_infs" => self.gamma_infs = list(key, v)?,
            "theta" => self.theta = positive(key, v)?,
            "seed" => self.seed = v.parse().map_err(|e| bad(key, v, e))?,
            "paths" => {
                self.paths = v.parse().map_err(|e| bad(key, v, e))?;
                if self.paths == 0 {
                    return Err(bad(key, v, "need at least one path"));
                }
            }
            "omega" => self.omega = Some(positive(key, v)?),
            "out" => self.out = PathBuf::from(v),
            "jobs" => self.jobs = Some(v.parse().map_err(|e| bad(key, v, e))?),
            "paper_scale" => {
                let on: bool = v.parse().map_err(|e| bad(key, v, e))?;
                if on {
                    self.paper_scale();
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.trim().to_string())),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    pub fn model_params(&self, t_end: f64) -> Result<agekin::ModelParams, agekin::Error> {
        agekin::ModelParams::new(self.sigma_c, self.m_sigma, self.n_cells, self.dt.unwrap_or(1.0), t_end)
    }
}
