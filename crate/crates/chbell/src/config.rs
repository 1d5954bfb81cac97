//! Run configuration: flat `key = value` text files, JSON documents written
//! by `--json`, and command-line overrides.
//!
//! Text format: one `key = value` per line, `#` starts a comment. Lists are
//! comma separated; `theta2_grid` also accepts `start:stop:step` (inclusive).
//! Angles are degrees everywhere.

use std::path::{Path, PathBuf};

use chbell_core::{DetectionModel, EntangledState, SettingsQuad};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Every parameter a subcommand may read. `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    /// Relative phase, degrees.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    /// `[θ1, θ1', θ2, θ2']`, degrees.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_rate1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_rate2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coincidence_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta2_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ScanMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhv_mixture: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Analytic,
    Simulated,
}

const DEFAULT_THETA1: f64 = 45.0;
const DEFAULT_WINDOW: f64 = 1e-9;

impl RunConfig {
    /// Read a config file. JSON documents (as written by `--json`) are
    /// recognised by a leading `{`; their `config` member is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_text(&text)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::usage(format!("malformed JSON config: {e}")))?;
        let body = match doc.get_mut("config") {
            Some(inner) => inner.take(),
            None => doc,
        };
        serde_json::from_value(body).map_err(|e| CliError::invalid(format!("invalid JSON config: {e}")))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| relabel(e, &format!("config line {}: ", lineno + 1)))?;
        }
        Ok(config)
    }

    /// Assign one key from its text form. Dashes and underscores are
    /// interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match key.as_str() {
            "f" => self.f = Some(number(&key, value)?),
            "phi" => self.phi = Some(number(&key, value)?),
            "v" => self.v = Some(number(&key, value)?),
            "quad" => self.quad = Some(parse_quad(value)?),
            "eta1" => self.eta1 = Some(number(&key, value)?),
            "eta2" => self.eta2 = Some(number(&key, value)?),
            "pair_rate" => self.pair_rate = Some(number(&key, value)?),
            "duration" => self.duration = Some(number(&key, value)?),
            "dark_rate1" => self.dark_rate1 = Some(number(&key, value)?),
            "dark_rate2" => self.dark_rate2 = Some(number(&key, value)?),
            "coincidence_window" => self.coincidence_window = Some(number(&key, value)?),
            "seed" => {
                self.seed = Some(
                    value
                        .parse()
                        .map_err(|_| CliError::invalid(format!("seed: `{value}` is not a non-negative integer")))?,
                )
            }
            "f_list" => self.f_list = Some(parse_list(&key, value)?),
            "theta1" => self.theta1 = Some(number(&key, value)?),
            "theta2_grid" => self.theta2_grid = Some(parse_grid(value)?),
            "mode" => {
                self.mode = Some(match value.to_ascii_lowercase().as_str() {
                    "analytic" => ScanMode::Analytic,
                    "simulated" => ScanMode::Simulated,
                    _ => return Err(CliError::invalid(format!("mode: `{value}` is not analytic|simulated"))),
                })
            }
            "replicates" => {
                self.replicates = Some(
                    value
                        .parse()
                        .map_err(|_| CliError::invalid(format!("replicates: `{value}` is not an integer")))?,
                )
            }
            "lhv_mixture" => self.lhv_mixture = Some(PathBuf::from(value)),
            "csv" => self.csv = Some(PathBuf::from(value)),
            _ => return Err(CliError::usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Overlay every field that `other` sets.
    pub fn merge(&mut self, other: RunConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            f, phi, v, quad, eta1, eta2, pair_rate, duration, dark_rate1, dark_rate2, coincidence_window, seed,
            f_list, theta1, theta2_grid, mode, replicates, lhv_mixture, csv
        );
    }

    pub fn state(&self) -> Result<EntangledState> {
        let f = self.f.ok_or_else(|| CliError::usage("missing f (use --f or `f =` in the config)"))?;
        let phi = self.phi.unwrap_or(0.0).to_radians();
        Ok(EntangledState::new(f, phi, self.v.unwrap_or(1.0))?)
    }

    pub fn quad(&self) -> Result<SettingsQuad> {
        let q = self
            .quad
            .ok_or_else(|| CliError::usage("missing quad (use --quad θ1,θ1p,θ2,θ2p or `quad =` in the config)"))?;
        Ok(SettingsQuad::from_array(q)?)
    }

    pub fn efficiencies(&self) -> (f64, f64) {
        (self.eta1.unwrap_or(1.0), self.eta2.unwrap_or(1.0))
    }

    /// Detection model for simulations; pair rate and duration are required.
    pub fn detection_model(&self) -> Result<DetectionModel> {
        let (eta1, eta2) = self.efficiencies();
        let model = DetectionModel {
            eta1,
            eta2,
            pair_rate: self
                .pair_rate
                .ok_or_else(|| CliError::usage("missing pair rate (use --pair-rate)"))?,
            duration: self
                .duration
                .ok_or_else(|| CliError::usage("missing duration (use --duration)"))?,
            dark_rate1: self.dark_rate1.unwrap_or(0.0),
            dark_rate2: self.dark_rate2.unwrap_or(0.0),
            coincidence_window: self.coincidence_window.unwrap_or(DEFAULT_WINDOW),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn theta1_or_default(&self) -> f64 {
        self.theta1.unwrap_or(DEFAULT_THETA1)
    }

    /// Scan grid, `0:180:1` unless given.
    pub fn theta2_grid_or_default(&self) -> Vec<f64> {
        self.theta2_grid
            .clone()
            .unwrap_or_else(|| (0..=180).map(f64::from).collect())
    }
}

fn relabel(e: CliError, prefix: &str) -> CliError {
    match e {
        CliError::Usage(m) => CliError::Usage(format!("{prefix}{m}")),
        CliError::Validation(m) => CliError::Validation(format!("{prefix}{m}")),
        other => other,
    }
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::invalid(format!("{key}: `{value}` is not a number")))
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(key, s))
        .collect()
}

pub fn parse_quad(value: &str) -> Result<[f64; 4]> {
    let v = parse_list("quad", value)?;
    v.try_into()
        .map_err(|v: Vec<f64>| CliError::invalid(format!("quad needs four angles, got {}", v.len())))
}

/// `start:stop:step` (inclusive of `stop` up to round-off) or a comma list.
pub fn parse_grid(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (
                number("theta2_grid", start)?,
                number("theta2_grid", stop)?,
                number("theta2_grid", step)?,
            );
            if !(step > 0.0 && stop >= start && ((stop - start) / step) < 1e7) {
                return Err(CliError::invalid(format!("theta2_grid: bad range `{value}`")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => parse_list("theta2_grid", value),
        _ => Err(CliError::invalid(format!("theta2_grid: bad range `{value}`"))),
    }
}
