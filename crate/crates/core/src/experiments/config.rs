//! Plain-text experiment configuration.
//!
//! One `key = value` pair per line. Blank lines are ignored and `#` starts
//! a comment that runs to the end of the line. Lists are comma-separated
//! and may be empty. Recognised keys, all optional:
//!
//! | key            | value                                      | default            |
//! |----------------|--------------------------------------------|--------------------|
//! | `mean_snr_db`  | mean SNR in dB                             | `5`                |
//! | `thresholds_db`| interior SNR thresholds in dB, ascending   | `0, 10`            |
//! | `long_ttis`    | long TTI per region, one more than thresholds | `15, 10, 2`     |
//! | `mu_short`     | short service rate (inverse slot length)   | `1`                |
//! | `lambda_ratio` | `λ_L / λ_S`                                | `4`                |
//! | `rho`          | per-server utilizations to sweep           | `0.1, 0.2, …, 0.9` |
//!
//! Unknown or repeated keys are errors.

use std::path::Path;
use std::str::FromStr;

use crate::desim::SweepTemplate;
use crate::error::{Error, Result};
use crate::traffic_channel::{ChannelModel, RateAdaptationTable};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mean_snr_db: f64,
    pub thresholds_db: Vec<f64>,
    pub long_ttis: Vec<f64>,
    pub mu_short: f64,
    pub lambda_ratio: f64,
    pub rho: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mean_snr_db: 5.0,
            thresholds_db: vec![0.0, 10.0],
            long_ttis: vec![15.0, 10.0, 2.0],
            mu_short: 1.0,
            lambda_ratio: 4.0,
            rho: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            reason: format!("{}: {e}", path.display()),
        })?;
        text.parse()
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        ChannelModel::from_db(self.mean_snr_db)
    }

    pub fn table(&self) -> Result<RateAdaptationTable> {
        if self.long_ttis.len() != self.thresholds_db.len() + 1 {
            return Err(Error::invalid(
                "long_ttis",
                format!(
                    "{} durations for {} thresholds (need one more)",
                    self.long_ttis.len(),
                    self.thresholds_db.len()
                ),
            ));
        }
        RateAdaptationTable::from_db(&self.thresholds_db, &self.long_ttis)
    }

    pub fn template(&self) -> Result<SweepTemplate> {
        Ok(SweepTemplate {
            mu_short: self.mu_short,
            lambda_ratio: self.lambda_ratio,
            channel: self.channel()?,
            table: self.table()?,
        })
    }
}

fn parse_number(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v = f64::from_str(raw.trim()).map_err(|_| Error::Config {
        line,
        reason: format!("`{key}`: `{}` is not a number", raw.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Config {
            line,
            reason: format!("`{key}`: value must be finite"),
        });
    }
    Ok(v)
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|item| parse_number(line, key, item)).collect()
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                reason: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Config {
                    line,
                    reason: format!("duplicate key `{key}`"),
                });
            }
            match key {
                "mean_snr_db" => config.mean_snr_db = parse_number(line, key, value)?,
                "thresholds_db" => config.thresholds_db = parse_list(line, key, value)?,
                "long_ttis" => config.long_ttis = parse_list(line, key, value)?,
                "mu_short" => config.mu_short = parse_number(line, key, value)?,
                "lambda_ratio" => config.lambda_ratio = parse_number(line, key, value)?,
                "rho" => config.rho = parse_list(line, key, value)?,
                other => {
                    return Err(Error::Config {
                        line,
                        reason: format!("unknown key `{other}`"),
                    })
                }
            }
            seen.push(key);
        }
        Ok(config)
    }
}
