//! Flat `key = value` configuration.
//!
//! Blank lines and text after `#` are ignored. Lists are comma separated.
//! Frequencies are ordinary frequencies (MHz unless the key says kHz).
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `gamma_mhz` | excited-state decay Γ/2π | 6 |
//! | `gamma_d_khz` | ground decoherence γ_d/2π | 150 |
//! | `gamma_bar_mhz` | laser phase diffusion γ̄/2π | 1 |
//! | `rabi1_over_gamma`, `rabi2_over_gamma` | Ω₁/Γ, Ω₂/Γ | 0.30, 0.34 |
//! | `kappa1`, `kappa2` | thin-sample coupling | 0.1 |
//! | `phase_noise_correlation` | beam phase-noise correlation | 1 |
//! | `delta_range_mhz` | δ/2π grid `start, stop, count` | -10, 10, 401 |
//! | `analysis_mhz` | ω/2π list | 2 |
//! | `delta1_mhz` | Δ₁/2π list | 0.2 |
//! | `power_scale` | power factors (Ω² multiplied) | 1 |
//! | `oracle` | run the stochastic reference | false |
//! | `oracle_trajectories` | trajectories per point | 200 |
//! | `oracle_duration_us` | recorded time per trajectory | 2000 |
//! | `oracle_transient_us` | discarded start | 20 |
//! | `oracle_dt_us` | step; `auto` uses the stability bound | auto |
//! | `oracle_sample_us` | output sample interval | 0.02 |
//! | `seed` | base seed | 1 |
//! | `out` | output path (stdout if absent) | |
//! | `format` | `csv` or `json` | csv |

use std::path::PathBuf;

use thiserror::Error;

use crate::bloch::SystemParams;
use crate::units;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{key}: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(()),
        }
    }
}

/// Uniform δ grid in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    /// Grid values; the endpoints are exactly `start` and `stop`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        let step = (self.stop - self.start) / (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.stop
                } else {
                    self.start + k as f64 * step
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleScanSettings {
    pub trajectories: usize,
    pub duration_us: f64,
    pub transient_us: f64,
    /// `None` picks the largest step allowed at each point.
    pub dt_us: Option<f64>,
    pub sample_us: f64,
}

impl Default for OracleScanSettings {
    fn default() -> Self {
        OracleScanSettings {
            trajectories: 200,
            duration_us: 2000.0,
            transient_us: 20.0,
            dt_us: None,
            sample_us: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Rates, Rabi frequencies, κ and noise; its detunings are overwritten
    /// at each grid point.
    pub base: SystemParams,
    pub delta: Grid,
    pub analysis_mhz: Vec<f64>,
    pub delta1_mhz: Vec<f64>,
    pub power_scale: Vec<f64>,
    pub oracle: bool,
    pub oracle_settings: OracleScanSettings,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            base: SystemParams::reference(),
            delta: Grid {
                start: -10.0,
                stop: 10.0,
                count: 401,
            },
            analysis_mhz: vec![2.0],
            delta1_mhz: vec![0.2],
            power_scale: vec![1.0],
            oracle: false,
            oracle_settings: OracleScanSettings::default(),
            seed: 1,
            out: None,
            format: Format::Csv,
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim().parse::<f64>().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: v.into(),
    })
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| num(key, s)).collect()
}

impl ScanConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScanConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: k + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Sets one key. Call [`ScanConfig::validate`] afterwards.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let gamma_ratio = |p: &SystemParams, r: f64| r * p.gamma;
        match key {
            "gamma_mhz" => {
                // Rabi frequencies are given relative to Γ
                let (r1, r2) = (self.base.rabi1 / self.base.gamma, self.base.rabi2 / self.base.gamma);
                self.base.gamma = units::mhz(num(key, value)?);
                self.base.rabi1 = gamma_ratio(&self.base, r1);
                self.base.rabi2 = gamma_ratio(&self.base, r2);
            }
            "gamma_d_khz" => self.base.gamma_d = units::khz(num(key, value)?),
            "gamma_bar_mhz" => self.base.gamma_bar = units::mhz(num(key, value)?),
            "rabi1_over_gamma" => self.base.rabi1 = gamma_ratio(&self.base, num(key, value)?),
            "rabi2_over_gamma" => self.base.rabi2 = gamma_ratio(&self.base, num(key, value)?),
            "kappa1" => self.base.kappa1 = num(key, value)?,
            "kappa2" => self.base.kappa2 = num(key, value)?,
            "phase_noise_correlation" => self.base.phase_noise_correlation = num(key, value)?,
            "delta_range_mhz" => {
                let v = list(key, value)?;
                if v.len() != 3 || v[2].fract() != 0.0 || v[2] < 0.0 {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        value: value.into(),
                    });
                }
                self.delta = Grid {
                    start: v[0],
                    stop: v[1],
                    count: v[2] as usize,
                };
            }
            "analysis_mhz" => self.analysis_mhz = list(key, value)?,
            "delta1_mhz" => self.delta1_mhz = list(key, value)?,
            "power_scale" => self.power_scale = list(key, value)?,
            "oracle" => {
                self.oracle = match value.to_ascii_lowercase().as_str() {
                    "true" | "on" | "yes" | "1" => true,
                    "false" | "off" | "no" | "0" => false,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "oracle_trajectories" => {
                self.oracle_settings.trajectories = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                })?
            }
            "oracle_duration_us" => self.oracle_settings.duration_us = num(key, value)?,
            "oracle_transient_us" => self.oracle_settings.transient_us = num(key, value)?,
            "oracle_dt_us" => {
                self.oracle_settings.dt_us = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "oracle_sample_us" => self.oracle_settings.sample_us = num(key, value)?,
            "seed" => {
                self.seed = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                })?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => {
                self.format = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                })?
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: &str| {
            Err(ConfigError::Invalid {
                key: key.into(),
                reason: reason.into(),
            })
        };
        self.base.validate().map_err(|e| ConfigError::Invalid {
            key: "parameters".into(),
            reason: e.to_string(),
        })?;
        let g = &self.delta;
        if g.count < 2 || !(g.start < g.stop) || !g.start.is_finite() || !g.stop.is_finite() {
            return invalid("delta_range_mhz", "need finite start < stop and count >= 2");
        }
        for (key, v) in [
            ("analysis_mhz", &self.analysis_mhz),
            ("delta1_mhz", &self.delta1_mhz),
            ("power_scale", &self.power_scale),
        ] {
            if v.is_empty() {
                return invalid(key, "empty list");
            }
            if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[0] < w[1])) {
                return invalid(key, "values must be finite and strictly increasing");
            }
        }
        if self.analysis_mhz.iter().any(|&w| w <= 0.0) {
            return invalid("analysis_mhz", "must be positive");
        }
        if self.power_scale.iter().any(|&s| s <= 0.0) {
            return invalid("power_scale", "must be positive");
        }
        let o = &self.oracle_settings;
        if o.trajectories < 2 {
            return invalid("oracle_trajectories", "need at least 2");
        }
        if !(o.duration_us > 0.0) || !(o.transient_us >= 0.0) || !(o.sample_us > 0.0) {
            return invalid("oracle", "durations must be positive");
        }
        if let Some(dt) = o.dt_us {
            if !(dt > 0.0) || dt > o.sample_us {
                return invalid("oracle_dt_us", "must be positive and at most oracle_sample_us");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg = ScanConfig::parse(
            "# comment\n\
             gamma_d_khz = 150\n\
             delta_range_mhz = -5, 5, 101   # trailing\n\
             analysis_mhz = 3, 4\n\
             delta1_mhz = -6, 0.2, 5\n\
             power_scale = 1,3,4\n\
             oracle = on\n\
             oracle_dt_us = 0.0025\n\
             seed = 9\n\
             format = json\n",
        )
        .unwrap();
        assert_eq!(cfg.delta.count, 101);
        assert_eq!(cfg.analysis_mhz, vec![3.0, 4.0]);
        assert_eq!(cfg.delta1_mhz, vec![-6.0, 0.2, 5.0]);
        assert!(cfg.oracle);
        assert_eq!(cfg.oracle_settings.dt_us, Some(0.0025));
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn gamma_rescales_rabi() {
        let cfg = ScanConfig::parse("rabi1_over_gamma = 0.5\ngamma_mhz = 5").unwrap();
        assert!((cfg.base.rabi1 / cfg.base.gamma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "nonsense",
            "foo = 1",
            "delta_range_mhz = 1, 0, 10",
            "delta_range_mhz = -1, 1, 1",
            "delta_range_mhz = -1, 1",
            "delta1_mhz = 1, 1",
            "power_scale = 2, 1",
            "analysis_mhz = ",
            "gamma_d_khz = -3",
            "oracle = maybe",
        ] {
            assert!(ScanConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = Grid {
            start: -10.0,
            stop: 10.0,
            count: 401,
        };
        let v = g.values();
        assert_eq!(v.len(), 401);
        assert_eq!(v[0], -10.0);
        assert_eq!(v[400], 10.0);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }
}
