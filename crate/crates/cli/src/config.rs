//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use the same
//! names as the long command-line flags; flags win over file values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use twf_core::experiments::presets::Preset;
use twf_core::experiments::{Axis, TrialParams};
use twf_core::{NoiseFamily, ThresholdOperator};

/// A problem with the configuration. Maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub nsr: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub iters: Option<usize>,
    pub operator: Option<ThresholdOperator>,
    pub noise: Option<NoiseFamily>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub preset: Option<PresetName>,
    pub trials: Option<usize>,
    pub axis: Option<Axis>,
    pub grid: Option<Grid>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PresetName(pub Preset);

impl FromStr for PresetName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(PresetName)
    }
}

/// Comma-separated list of numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad grid value {:?}", v.trim()))
            })
            .collect::<Result<_, _>>()
            .map(Grid)
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> anyhow::Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| {
        config_error(format!(
            "line {line}: invalid value {value:?} for {key}: {e}"
        ))
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                config_error(format!(
                    "line {line}: expected `key = value`, got {trimmed:?}"
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "p" => cfg.p = Some(parse_value(key, value, line)?),
                "m" => cfg.m = Some(parse_value(key, value, line)?),
                "k" => cfg.k = Some(parse_value(key, value, line)?),
                "nsr" => cfg.nsr = Some(parse_value(key, value, line)?),
                "alpha" => cfg.alpha = Some(parse_value(key, value, line)?),
                "beta" => cfg.beta = Some(parse_value(key, value, line)?),
                "mu" => cfg.mu = Some(parse_value(key, value, line)?),
                "iters" => cfg.iters = Some(parse_value(key, value, line)?),
                "operator" => cfg.operator = Some(parse_value(key, value, line)?),
                "noise" => cfg.noise = Some(parse_value(key, value, line)?),
                "seed" => cfg.seed = Some(parse_value(key, value, line)?),
                "workers" => cfg.workers = Some(parse_value(key, value, line)?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                "preset" => cfg.preset = Some(parse_value(key, value, line)?),
                "trials" => cfg.trials = Some(parse_value(key, value, line)?),
                "axis" => cfg.axis = Some(parse_value(key, value, line)?),
                "grid" => cfg.grid = Some(parse_value(key, value, line)?),
                other => return Err(config_error(format!("line {line}: unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_error(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Self { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            p, m, k, nsr, alpha, beta, mu, iters, operator, noise, seed, workers, out, preset,
            trials, axis, grid
        )
    }

    pub fn preset(&self) -> Preset {
        self.preset.map(|p| p.0).unwrap_or(Preset::Quick)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("twf-out"))
    }

    /// Preset values with explicit settings applied, validated.
    pub fn trial_params(&self) -> anyhow::Result<TrialParams> {
        let mut t = self.preset().params();
        macro_rules! set {
            ($($src:ident => $dst:ident),*) => { $(if let Some(v) = self.$src { t.$dst = v; })* };
        }
        set!(p => p, m => m, k => k, nsr => nsr, alpha => alpha, beta => beta, mu => mu,
             iters => iterations, operator => operator, noise => noise);
        if t.nsr == 0.0 && self.noise.is_none() {
            t.noise = NoiseFamily::None;
        }
        t.validate().map_err(|e| config_error(e.to_string()))?;
        if self.workers == Some(0) {
            return Err(config_error("workers must be at least 1"));
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys_and_comments() {
        let cfg =
            RunConfig::parse("# comment\n\np = 50\n m=400 \noperator = hard\ngrid = 0, 0.5,1\n")
                .unwrap();
        assert_eq!(cfg.p, Some(50));
        assert_eq!(cfg.m, Some(400));
        assert_eq!(cfg.operator, Some(ThresholdOperator::Hard));
        assert_eq!(cfg.grid, Some(Grid(vec![0.0, 0.5, 1.0])));
    }

    #[test]
    fn unknown_key_names_line() {
        let err = RunConfig::parse("p = 5\n\nlambda = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("lambda"), "{msg}");
        assert!(err.downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn bad_value_names_line() {
        let msg = RunConfig::parse("k = ten\n").unwrap_err().to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::parse("p = 50\nm = 400\n").unwrap();
        let flags = RunConfig {
            m: Some(900),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!((merged.p, merged.m), (Some(50), Some(900)));
    }

    #[test]
    fn ranges_checked_before_running() {
        let cfg = RunConfig {
            mu: Some(-1.0),
            ..Default::default()
        };
        assert!(cfg
            .trial_params()
            .unwrap_err()
            .to_string()
            .contains("mu must be positive"));
        let cfg = RunConfig {
            k: Some(500),
            ..Default::default()
        };
        assert!(cfg.trial_params().is_err());
    }
}
