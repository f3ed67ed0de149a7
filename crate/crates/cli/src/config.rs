//! Experiment configuration: a JSON document whose fields command-line
//! flags may override.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

/// Spacings used for the Burgers convergence studies; each divides 100 and
/// reaches `t = 6250/81` in a whole number of steps when `nu = 0.45`.
pub const DX_LADDER: [(u32, u32); 10] = [
    (25, 3),
    (25, 12),
    (25, 27),
    (25, 48),
    (1, 3),
    (25, 108),
    (25, 147),
    (25, 192),
    (25, 243),
    (1, 12),
];

/// Comparison time of the Burgers presets.
pub const TARGET_TIME: f64 = 6250.0 / 81.0;

pub fn dx_ladder() -> Vec<f64> {
    DX_LADDER
        .iter()
        .map(|&(p, q)| f64::from(p) / f64::from(q))
        .collect()
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid value for {field}: {message}")]
    Field { field: &'static str, message: String },
}

/// Parses `"0.25"`, `"25/3"` or `"-3"`.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("'{text}': {e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("'{text}': {e}"))?;
            num / den
        }
        None => text.parse().map_err(|e| format!("'{text}': {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{text}' is not a finite number"))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RealRepr {
    Number(f64),
    Text(String),
}

impl RealRepr {
    fn value<E: serde::de::Error>(self) -> Result<f64, E> {
        match self {
            RealRepr::Number(v) => Ok(v),
            RealRepr::Text(s) => parse_real(&s).map_err(E::custom),
        }
    }
}

fn real<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    RealRepr::deserialize(d)?.value()
}

fn reals<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Vec::<RealRepr>::deserialize(d)?
        .into_iter()
        .map(RealRepr::value)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Example1Dirichlet,
    Example2Neumann,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Example1Dirichlet => "example1-dirichlet",
            Preset::Example2Neumann => "example2-neumann",
            Preset::Custom => "custom",
        }
    }
}

/// Problem description for the `custom` preset.
///
/// Boundary specs are `periodic`, `zero-flux`, `dirichlet:<fn>` or
/// `neumann:<fn>`, where `<fn>` is `burgers-left`, `burgers-right`, `zero`
/// or `const:<value>`. Initial data are `burgers-tanh`, `gaussian` or
/// `const:<value>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CustomSpec {
    /// `burgers` or `diffusion`.
    pub force: String,
    #[serde(deserialize_with = "real")]
    pub x_min: f64,
    #[serde(deserialize_with = "real")]
    pub x_max: f64,
    pub bc_left: String,
    pub bc_right: String,
    pub initial: String,
    /// `burgers-tanh`, `heat-gaussian` or absent.
    pub oracle: Option<String>,
    /// Defaults to `nu`.
    pub diffusivity: Option<f64>,
}

impl Default for CustomSpec {
    fn default() -> Self {
        Self {
            force: "diffusion".into(),
            x_min: 0.0,
            x_max: 100.0,
            bc_left: "zero-flux".into(),
            bc_right: "zero-flux".into(),
            initial: "gaussian".into(),
            oracle: None,
            diffusivity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub nu: f64,
    pub c: f64,
    #[serde(deserialize_with = "reals")]
    pub dx_list: Vec<f64>,
    #[serde(deserialize_with = "real")]
    pub target_t: f64,
    /// `boltzmann1`, `boltzmann2` or `naive`.
    pub weights: String,
    /// `exp` or `fd`.
    pub ghost: String,
    pub output_dir: PathBuf,
    pub snap: bool,
    pub seed: u64,
    pub trace_error: bool,
    /// Number of finest spacings used for the convergence slope; 0 uses all.
    pub slope_points: usize,
    pub custom: Option<CustomSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Example1Dirichlet,
            nu: 0.45,
            c: -3.0,
            dx_list: dx_ladder(),
            target_t: TARGET_TIME,
            weights: "boltzmann2".into(),
            ghost: "exp".into(),
            output_dir: PathBuf::from("out"),
            snap: false,
            seed: 0,
            trace_error: false,
            slope_points: 4,
            custom: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dx_list.is_empty() {
            return Err(ConfigError::Field {
                field: "dx_list",
                message: "must not be empty".into(),
            });
        }
        if let Some(dx) = self.dx_list.iter().find(|dx| !(**dx > 0.0)) {
            return Err(ConfigError::Field {
                field: "dx_list",
                message: format!("spacings must be positive, got {dx}"),
            });
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(ConfigError::Field {
                field: "nu",
                message: format!("must be positive, got {}", self.nu),
            });
        }
        if !(self.target_t >= 0.0 && self.target_t.is_finite()) {
            return Err(ConfigError::Field {
                field: "target_t",
                message: format!("must be non-negative, got {}", self.target_t),
            });
        }
        self.weights
            .parse::<dtrw::WeightRule>()
            .map_err(|e| ConfigError::Field {
                field: "weights",
                message: e.to_string(),
            })?;
        self.ghost
            .parse::<dtrw::GhostRule>()
            .map_err(|e| ConfigError::Field {
                field: "ghost",
                message: e.to_string(),
            })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_real("25/3").unwrap(), 25.0 / 3.0);
        assert_eq!(parse_real(" -3 ").unwrap(), -3.0);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
    }

    #[test]
    fn json_accepts_numbers_and_fractions() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"preset": "example2-neumann", "dx_list": ["1/3", 0.25], "target_t": "6250/81"}"#,
        )
        .unwrap();
        assert_eq!(cfg.preset, Preset::Example2Neumann);
        assert_eq!(cfg.dx_list, vec![1.0 / 3.0, 0.25]);
        assert_eq!(cfg.target_t, TARGET_TIME);
        assert_eq!(cfg.nu, 0.45);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"nuu": 1}"#).is_err());
        let cfg = ExperimentConfig {
            dx_list: vec![],
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Field { field: "dx_list", .. })
        ));
        let cfg = ExperimentConfig {
            weights: "linear".into(),
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Field { field: "weights", .. })
        ));
    }

    #[test]
    fn ladder_values() {
        let l = dx_ladder();
        assert_eq!(l.len(), 10);
        assert_eq!(l[0], 25.0 / 3.0);
        assert_eq!(l[9], 1.0 / 12.0);
    }
}
