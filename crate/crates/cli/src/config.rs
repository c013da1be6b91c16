//! Flat `key = value` design configuration.
//!
//! ```text
//! # TBP 200 design
//! T = 1.0
//! delta_f = 200
//! K = 32
//! seed = 0
//! delta = 0.1
//! max_evals = 4000
//! sample_rate = 3200
//! output_dir = out
//! # z = 0.1, -0.05, 0.02    (overrides K and seed)
//! ```

use std::path::{Path, PathBuf};

use mtffm_core::kapteyn::{DesignCoefficients, WaveformParams};
use mtffm_core::optimizer::{random_init, OptimizerConfig, DEFAULT_INIT_MARGIN};
use mtffm_core::waveform::{DEFAULT_OVERSAMPLING, MIN_OVERSAMPLING};

use crate::error::CliError;

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "MTFFM_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub duration: f64,
    pub bandwidth: f64,
    pub k: usize,
    pub seed: u64,
    pub delta: f64,
    pub max_evals: usize,
    pub sample_rate: f64,
    pub output_dir: PathBuf,
    pub z: Option<Vec<f64>>,
    pub penalty_weight: f64,
    pub step_init: f64,
    pub margin: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        let optimizer = OptimizerConfig::default();
        Self {
            duration: 1.0,
            bandwidth: 200.0,
            k: 32,
            seed: 0,
            delta: optimizer.delta,
            max_evals: optimizer.max_evals,
            sample_rate: DEFAULT_OVERSAMPLING * 200.0,
            output_dir: PathBuf::from("mtffm-out"),
            z: None,
            penalty_weight: optimizer.penalty_weight,
            step_init: optimizer.step_init,
            margin: DEFAULT_INIT_MARGIN,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: cannot parse {key} = {value:?}")))
}

impl DesignConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates a configuration document. Unset keys keep their
    /// defaults; `sample_rate` defaults to `16·delta_f`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut sample_rate = None;
        let mut k = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line}: expected key = value, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "T" => cfg.duration = parse_value(key, value, line)?,
                "delta_f" => cfg.bandwidth = parse_value(key, value, line)?,
                "K" => k = Some(parse_value(key, value, line)?),
                "seed" => cfg.seed = parse_value(key, value, line)?,
                "delta" => cfg.delta = parse_value(key, value, line)?,
                "max_evals" => cfg.max_evals = parse_value(key, value, line)?,
                "sample_rate" => sample_rate = Some(parse_value(key, value, line)?),
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "penalty_weight" => cfg.penalty_weight = parse_value(key, value, line)?,
                "step_init" => cfg.step_init = parse_value(key, value, line)?,
                "margin" => cfg.margin = parse_value(key, value, line)?,
                "z" => {
                    let z = value
                        .split(',')
                        .map(|v| parse_value::<f64>(key, v.trim(), line))
                        .collect::<Result<Vec<_>, _>>()?;
                    cfg.z = Some(z);
                }
                other => return Err(CliError::Config(format!("line {line}: unknown key {other:?}"))),
            }
        }
        cfg.sample_rate = sample_rate.unwrap_or(DEFAULT_OVERSAMPLING * cfg.bandwidth);
        cfg.k = match (&cfg.z, k) {
            (Some(z), Some(k)) if z.len() != k => {
                return Err(CliError::Config(format!("K = {k} but z has {} entries", z.len())));
            }
            (Some(z), _) => z.len(),
            (None, Some(k)) => k,
            (None, None) => cfg.k,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("T must be positive, got {}", self.duration));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad(format!("delta_f must be positive, got {}", self.bandwidth));
        }
        if self.k < 1 {
            return bad("K must be at least 1".into());
        }
        if !(self.sample_rate >= MIN_OVERSAMPLING * self.bandwidth) {
            return bad(format!(
                "sample_rate {} is below {MIN_OVERSAMPLING}·delta_f = {}",
                self.sample_rate,
                MIN_OVERSAMPLING * self.bandwidth
            ));
        }
        if !(self.margin > 0.0 && self.margin <= 1.0) {
            return bad(format!("margin must lie in (0, 1], got {}", self.margin));
        }
        self.optimizer().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.z.is_some() {
            self.initial_design()?;
        }
        Ok(())
    }

    /// Explicit `z` if given, otherwise the seeded random start.
    pub fn initial_design(&self) -> Result<DesignCoefficients, CliError> {
        let design = match &self.z {
            Some(z) => DesignCoefficients::new(z.clone()),
            None => random_init(self.k, self.seed, self.margin),
        };
        design.map_err(|e| CliError::Config(format!("invalid design: {e}")))
    }

    pub fn params(&self, design: DesignCoefficients) -> Result<WaveformParams, CliError> {
        Ok(WaveformParams::new(self.duration, self.bandwidth, design)?)
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            delta: self.delta,
            max_evals: self.max_evals,
            seed: self.seed,
            penalty_weight: self.penalty_weight,
            step_init: self.step_init,
            ..OptimizerConfig::default()
        }
    }

    /// Output directory after applying [`OUTPUT_DIR_ENV`].
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Config text reproducing this run with an explicit design vector.
    pub fn to_text_with(&self, z: &[f64]) -> String {
        let list: Vec<String> = z.iter().map(|v| v.to_string()).collect();
        format!(
            "T = {}\ndelta_f = {}\nK = {}\nseed = {}\ndelta = {}\nmax_evals = {}\nsample_rate = {}\noutput_dir = {}\n\
             penalty_weight = {}\nstep_init = {}\nmargin = {}\nz = {}\n",
            self.duration,
            self.bandwidth,
            z.len(),
            self.seed,
            self.delta,
            self.max_evals,
            self.sample_rate,
            self.output_dir.display(),
            self.penalty_weight,
            self.step_init,
            self.margin,
            list.join(", ")
        )
    }
}
