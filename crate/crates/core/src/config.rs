//! Experiment configuration.
//!
//! The format is flat `key = value` text, one key per line, `#` starts a
//! comment. Lists are comma separated with optional brackets:
//!
//! ```text
//! # Fig. 1 style sweep
//! w_list = [10, 50, 200, 1000]
//! snr_db_list = 0, 5, 10, 15, 20, 25, 30
//! schemes = robust, baseline
//! ```
//!
//! A JSON object with the same keys is accepted as well.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::channel::RicianFactor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Robust,
    Baseline,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::Robust => "robust",
            Scheme::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "robust" => Ok(Scheme::Robust),
            "baseline" | "tmmse" => Ok(Scheme::Baseline),
            other => Err(format!("unknown scheme `{other}` (expected robust or baseline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Transmit antennas.
    pub m: usize,
    /// Users.
    pub k: usize,
    /// Receive antennas per user.
    pub n: usize,
    /// Streams per user.
    pub l: usize,
    pub w_list: Vec<RicianFactor>,
    pub rho_tx: f64,
    pub rho_rx: f64,
    pub power: f64,
    pub snr_db_list: Vec<f64>,
    /// SNR of the MSE-versus-W sweep.
    pub fixed_snr_db: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Independent channel-mean draws per sweep point.
    pub n_trials: usize,
    /// Channel realizations per trial.
    pub n_real: usize,
    /// Symbol vectors per realization.
    pub n_sym: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            m: 4,
            k: 2,
            n: 2,
            l: 2,
            w_list: [10.0, 50.0, 200.0, 1000.0]
                .into_iter()
                .map(RicianFactor::Finite)
                .collect(),
            rho_tx: 0.9,
            rho_rx: 0.0,
            power: 1.0,
            snr_db_list: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            fixed_snr_db: 20.0,
            epsilon: 1e-4,
            max_iterations: 100,
            n_trials: 50,
            n_real: 20,
            n_sym: 100,
            seed: 1,
            schemes: vec![Scheme::Robust, Scheme::Baseline],
        }
    }
}

const KEYS: &[&str] = &[
    "m",
    "k",
    "n",
    "l",
    "w_list",
    "rho_tx",
    "rho_rx",
    "power",
    "snr_db_list",
    "fixed_snr_db",
    "epsilon",
    "max_iterations",
    "n_trials",
    "n_real",
    "n_sym",
    "seed",
    "schemes",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = match key {
        "wList" => "w_list",
        "rhoTx" => "rho_tx",
        "rhoRx" => "rho_rx",
        "snrDbList" => "snr_db_list",
        "fixedSnrDb" => "fixed_snr_db",
        "maxIterations" => "max_iterations",
        "nTrials" => "n_trials",
        "nReal" => "n_real",
        "nSym" => "n_sym",
        other => other,
    };
    KEYS.iter().copied().find(|k| *k == key)
}

fn list_items(value: &str) -> Vec<&str> {
    let inner = value
        .trim()
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .unwrap_or(value);
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("malformed number `{}`", value.trim()))
}

impl SimConfig {
    fn set(&mut self, key: &'static str, value: &str) -> std::result::Result<(), String> {
        match key {
            "m" => self.m = parse_num(value)?,
            "k" => self.k = parse_num(value)?,
            "n" => self.n = parse_num(value)?,
            "l" => self.l = parse_num(value)?,
            "w_list" => {
                self.w_list = list_items(value)
                    .into_iter()
                    .map(|s| s.parse::<RicianFactor>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "rho_tx" => self.rho_tx = parse_num(value)?,
            "rho_rx" => self.rho_rx = parse_num(value)?,
            "power" => self.power = parse_num(value)?,
            "snr_db_list" => {
                self.snr_db_list = list_items(value)
                    .into_iter()
                    .map(parse_num)
                    .collect::<std::result::Result<_, _>>()?
            }
            "fixed_snr_db" => self.fixed_snr_db = parse_num(value)?,
            "epsilon" => self.epsilon = parse_num(value)?,
            "max_iterations" => self.max_iterations = parse_num(value)?,
            "n_trials" => self.n_trials = parse_num(value)?,
            "n_real" => self.n_real = parse_num(value)?,
            "n_sym" => self.n_sym = parse_num(value)?,
            "seed" => self.seed = parse_num(value)?,
            "schemes" => {
                self.schemes = list_items(value)
                    .into_iter()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()?
            }
            _ => unreachable!("canonical_key only yields known keys"),
        }
        Ok(())
    }

    /// Range checks. `lines` maps keys to the line they were set on, for
    /// error messages; keys left at their defaults report line 0.
    fn check(&self, lines: &HashMap<&'static str, usize>) -> Result<()> {
        let fail = |key: &'static str, message: String| Error::Config {
            line: lines.get(key).copied().unwrap_or(0),
            key: key.to_string(),
            message,
        };
        for (key, value) in [
            ("m", self.m),
            ("k", self.k),
            ("n", self.n),
            ("l", self.l),
            ("max_iterations", self.max_iterations),
            ("n_trials", self.n_trials),
            ("n_real", self.n_real),
            ("n_sym", self.n_sym),
        ] {
            if value == 0 {
                return Err(fail(key, "must be at least 1".into()));
            }
        }
        if self.l > self.n {
            return Err(fail(
                "l",
                format!("{} streams exceed {} receive antennas", self.l, self.n),
            ));
        }
        for (key, rho) in [("rho_tx", self.rho_tx), ("rho_rx", self.rho_rx)] {
            if !(0.0..1.0).contains(&rho) {
                return Err(fail(key, format!("must lie in [0, 1), got {rho}")));
            }
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(fail("power", format!("must be positive, got {}", self.power)));
        }
        if !(self.epsilon > 0.0) {
            return Err(fail("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if self.w_list.is_empty() {
            return Err(fail("w_list", "must not be empty".into()));
        }
        if self.snr_db_list.is_empty() || self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return Err(fail("snr_db_list", "must be a non-empty list of finite values".into()));
        }
        if !self.fixed_snr_db.is_finite() {
            return Err(fail("fixed_snr_db", "must be finite".into()));
        }
        if self.schemes.is_empty() {
            return Err(fail("schemes", "must name at least one scheme".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check(&HashMap::new())
    }

    /// Non-fatal problems with the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.k * self.l > self.m {
            out.push(format!(
                "k*l = {} streams exceed m = {} transmit antennas",
                self.k * self.l,
                self.m
            ));
        }
        out
    }
}

/// Parses a configuration; omitted keys keep their [`SimConfig::default`]
/// values.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    if text.trim_start().starts_with('{') {
        return parse_json(text);
    }
    let mut config = SimConfig::default();
    let mut lines = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                line: line_no,
                key: line.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let key = key.trim();
        let canonical = canonical_key(key).ok_or_else(|| Error::Config {
            line: line_no,
            key: key.to_string(),
            message: "unknown key".into(),
        })?;
        config.set(canonical, value).map_err(|message| Error::Config {
            line: line_no,
            key: canonical.to_string(),
            message,
        })?;
        lines.insert(canonical, line_no);
    }
    config.check(&lines)?;
    Ok(config)
}

fn parse_json(text: &str) -> Result<SimConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config {
        line: e.line(),
        key: String::new(),
        message: e.to_string(),
    })?;
    let object = value.as_object().ok_or_else(|| Error::Config {
        line: 1,
        key: String::new(),
        message: "expected a JSON object".into(),
    })?;
    let line_of = |key: &str| {
        let quoted = format!("\"{key}\"");
        text.lines()
            .position(|l| l.contains(&quoted))
            .map_or(1, |i| i + 1)
    };
    let mut config = SimConfig::default();
    let mut lines = HashMap::new();
    for (key, value) in object {
        let line = line_of(key);
        let canonical = canonical_key(key).ok_or_else(|| Error::Config {
            line,
            key: key.clone(),
            message: "unknown key".into(),
        })?;
        let flat = match value {
            serde_json::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        config.set(canonical, &flat).map_err(|message| Error::Config {
            line,
            key: canonical.to_string(),
            message,
        })?;
        lines.insert(canonical, line);
    }
    config.check(&lines)?;
    Ok(config)
}
