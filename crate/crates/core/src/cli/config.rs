use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mismatch::stein_threshold;
use crate::simplex::Distribution;

/// Output encoding of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoGamma {
    /// `γ̂ = 0`.
    AutoBayes,
    /// The finite-`n` Stein threshold for the configured `ε` and first `n`.
    AutoStein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Auto(AutoGamma),
}

impl std::str::FromStr for GammaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto_bayes" => Ok(GammaSpec::Auto(AutoGamma::AutoBayes)),
            "auto_stein" => Ok(GammaSpec::Auto(AutoGamma::AutoStein)),
            _ => s
                .parse::<f64>()
                .map(GammaSpec::Value)
                .map_err(|_| format!("expected a number, auto_bayes or auto_stein, got '{s}'")),
        }
    }
}

/// A configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Raw configuration document. Every field is optional; missing fields
/// take the defaults of [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub p1: Option<Vec<f64>>,
    pub p2: Option<Vec<f64>>,
    #[serde(alias = "phat1")]
    pub p_hat1: Option<Vec<f64>>,
    #[serde(alias = "phat2")]
    pub p_hat2: Option<Vec<f64>>,
    pub gamma: Option<GammaSpec>,
    pub radii: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    #[serde(alias = "n")]
    pub n_list: Option<Vec<u64>>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub grid_points: Option<usize>,
    pub output_format: Option<OutputFormat>,
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("{source}: {e}")))
    }

    /// Reads a JSON document from a file, or from stdin when `path` is `-`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let (text, source) = if path.as_os_str() == "-" {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| ConfigError(format!("stdin: {e}")))?;
            (s, "stdin".to_string())
        } else {
            let s = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            (s, path.display().to_string())
        };
        Self::parse(&text, &source)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RawConfig) -> Self {
        Self {
            p1: other.p1.or(self.p1),
            p2: other.p2.or(self.p2),
            p_hat1: other.p_hat1.or(self.p_hat1),
            p_hat2: other.p_hat2.or(self.p_hat2),
            gamma: other.gamma.or(self.gamma),
            radii: other.radii.or(self.radii),
            epsilon: other.epsilon.or(self.epsilon),
            n_list: other.n_list.or(self.n_list),
            seed: other.seed.or(self.seed),
            trials: other.trials.or(self.trials),
            grid_points: other.grid_points.or(self.grid_points),
            output_format: other.output_format.or(self.output_format),
        }
    }
}

pub const DEFAULT_P_HAT1: [f64; 2] = [0.9, 0.1];
pub const DEFAULT_P_HAT2: [f64; 2] = [0.2, 0.8];
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_N_LIST: [u64; 3] = [100, 500, 2000];
pub const DEFAULT_GRID_POINTS: usize = 100;

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p1: Distribution,
    pub p2: Distribution,
    pub p_hat1: Distribution,
    pub p_hat2: Distribution,
    pub gamma: GammaSpec,
    /// `None` lets each subcommand pick its own default grid.
    pub radii: Option<Vec<f64>>,
    pub epsilon: f64,
    pub n_list: Vec<u64>,
    pub seed: u64,
    pub trials: u64,
    pub grid_points: usize,
    pub output_format: OutputFormat,
}

fn distribution(
    name: &str,
    v: Option<Vec<f64>>,
    default: &Distribution,
) -> Result<Distribution, ConfigError> {
    match v {
        None => Ok(default.clone()),
        Some(v) => Distribution::new(v).map_err(|e| ConfigError(format!("{name}: {e}"))),
    }
}

impl ExperimentConfig {
    /// Applies defaults and validates. Test distributions default to
    /// `Bern(0.1)` and `Bern(0.8)`; generating distributions default to the
    /// test distributions.
    pub fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        let h1 = Distribution::new(DEFAULT_P_HAT1.to_vec()).expect("valid default");
        let h2 = Distribution::new(DEFAULT_P_HAT2.to_vec()).expect("valid default");
        let p_hat1 = distribution("p_hat1", raw.p_hat1, &h1)?;
        let p_hat2 = distribution("p_hat2", raw.p_hat2, &h2)?;
        let p1 = distribution("p1", raw.p1, &p_hat1)?;
        let p2 = distribution("p2", raw.p2, &p_hat2)?;
        let k = p_hat1.alphabet_size();
        for (name, d) in [("p_hat2", &p_hat2), ("p1", &p1), ("p2", &p2)] {
            if d.alphabet_size() != k {
                return Err(ConfigError(format!(
                    "{name} has {} entries but p_hat1 has {k}",
                    d.alphabet_size()
                )));
            }
        }
        if let Some(r) = &raw.radii {
            if let Some(bad) = r.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(ConfigError(format!(
                    "radii: {bad} is not a finite nonnegative value"
                )));
            }
            if r.windows(2).any(|w| w[1] < w[0]) {
                return Err(ConfigError("radii must be in ascending order".into()));
            }
        }
        let epsilon = raw.epsilon.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(ConfigError(format!(
                "epsilon must lie in (0, 0.5], got {epsilon}"
            )));
        }
        let n_list = raw.n_list.unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(ConfigError(
                "n_list must be a nonempty list of positive integers".into(),
            ));
        }
        let trials = raw.trials.unwrap_or(0);
        if trials != 0 && trials < 100 {
            return Err(ConfigError(format!(
                "trials must be 0 or at least 100, got {trials}"
            )));
        }
        let grid_points = raw.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        if grid_points < 3 {
            return Err(ConfigError(format!(
                "grid_points must be at least 3, got {grid_points}"
            )));
        }
        if let Some(GammaSpec::Value(g)) = raw.gamma {
            if !g.is_finite() {
                return Err(ConfigError(format!("gamma must be finite, got {g}")));
            }
        }
        Ok(Self {
            p1,
            p2,
            p_hat1,
            p_hat2,
            gamma: raw.gamma.unwrap_or(GammaSpec::Auto(AutoGamma::AutoBayes)),
            radii: raw.radii,
            epsilon,
            n_list,
            seed: raw.seed.unwrap_or(0),
            trials,
            grid_points,
            output_format: raw.output_format.unwrap_or_default(),
        })
    }

    /// Numeric threshold for the test `(p̂1, p̂2)` judged under `p1`.
    pub fn gamma_value(
        &self,
        p1: &Distribution,
        p_hat1: &Distribution,
        p_hat2: &Distribution,
    ) -> crate::Result<f64> {
        match self.gamma {
            GammaSpec::Value(g) => Ok(g),
            GammaSpec::Auto(AutoGamma::AutoBayes) => Ok(0.0),
            GammaSpec::Auto(AutoGamma::AutoStein) => {
                Ok(stein_threshold(p1, p_hat1, p_hat2, self.epsilon, self.n_list[0])?.0)
            }
        }
    }

    pub fn radii_or(&self, default: Vec<f64>) -> Vec<f64> {
        self.radii.clone().unwrap_or(default)
    }
}
