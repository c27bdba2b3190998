//! Flat `key = value` configuration files.
//!
//! Blank lines and everything after `#` are ignored. One [`Settings`] value
//! carries simulation, sampler and study keys so a single file can drive any
//! subcommand. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use geoexp_core::bayes::{BayesConfig, NoiseModel};
use geoexp_core::sim::SimConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    SingleBrand,
    MultibrandShrinkage,
    SteinVsBayes,
    BayesCoverage,
    CredibleWidth,
}

impl StudyKind {
    pub fn uses_shrinkage(self) -> bool {
        matches!(self, StudyKind::MultibrandShrinkage | StudyKind::SteinVsBayes)
    }

    pub fn uses_bayes(self) -> bool {
        matches!(
            self,
            StudyKind::SteinVsBayes | StudyKind::BayesCoverage | StudyKind::CredibleWidth
        )
    }
}

impl FromStr for StudyKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "single_brand" => StudyKind::SingleBrand,
            "multibrand_shrinkage" => StudyKind::MultibrandShrinkage,
            "stein_vs_bayes" => StudyKind::SteinVsBayes,
            "bayes_coverage" => StudyKind::BayesCoverage,
            "credible_width" => StudyKind::CredibleWidth,
            _ => return Err(()),
        })
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StudyKind::SingleBrand => "single_brand",
            StudyKind::MultibrandShrinkage => "multibrand_shrinkage",
            StudyKind::SteinVsBayes => "stein_vs_bayes",
            StudyKind::BayesCoverage => "bayes_coverage",
            StudyKind::CredibleWidth => "credible_width",
        };
        f.write_str(s)
    }
}

/// Everything a config or study spec file can set.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub sim: SimConfig,
    pub bayes: BayesConfig,
    pub kind: Option<StudyKind>,
    pub replicates: usize,
    pub master_seed: Option<u64>,
    /// Empty means "use `sim.delta`".
    pub delta_levels: Vec<f64>,
    pub freeze_sizes: bool,
    pub grid_points: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            bayes: BayesConfig::default(),
            kind: None,
            replicates: 1000,
            master_seed: None,
            delta_levels: Vec::new(),
            freeze_sizes: false,
            grid_points: 1001,
        }
    }
}

pub const KEYS: &[&str] = &[
    "g_count",
    "b_count",
    "phi",
    "cv_pre",
    "cv_post",
    "n_pre",
    "n_post",
    "delta",
    "beta_mean",
    "beta_sd",
    "iterations",
    "burn_in",
    "chains",
    "thin",
    "level",
    "noise_model",
    "ig_obs_shape",
    "ig_obs_rate",
    "ig_beta_shape",
    "ig_beta_rate",
    "fixed_sigma2_obs",
    "fixed_sigma2_beta",
    "kind",
    "replicates",
    "master_seed",
    "delta_levels",
    "freeze_sizes",
    "grid_points",
];

fn bad_value(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| bad_value(key, value))
}

/// Splits a file into `(line, key, value)` triples.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        if out.iter().any(|(_, seen, _)| seen == k) {
            return Err(ConfigError::Duplicate(k.to_string()));
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value;
        match key {
            "g_count" => self.sim.g_count = parse(key, v)?,
            "b_count" => self.sim.b_count = parse(key, v)?,
            "phi" => self.sim.phi = parse(key, v)?,
            "cv_pre" => self.sim.cv_pre = parse(key, v)?,
            "cv_post" => self.sim.cv_post = parse(key, v)?,
            "n_pre" => self.sim.n_pre = parse(key, v)?,
            "n_post" => self.sim.n_post = parse(key, v)?,
            "delta" => self.sim.delta = parse(key, v)?,
            "beta_mean" => self.sim.beta_mean = parse(key, v)?,
            "beta_sd" => self.sim.beta_sd = parse(key, v)?,
            "iterations" => self.bayes.iterations = parse(key, v)?,
            "burn_in" => self.bayes.burn_in = parse(key, v)?,
            "chains" => self.bayes.chains = parse(key, v)?,
            "thin" => self.bayes.thin = parse(key, v)?,
            "level" => self.bayes.level = parse(key, v)?,
            "noise_model" => {
                self.bayes.noise_model = match v {
                    "relative_to_pre" => NoiseModel::RelativeToPre,
                    "inverse_to_pre" => NoiseModel::InverseToPre,
                    _ => return Err(bad_value(key, v)),
                }
            }
            "ig_obs_shape" => self.bayes.ig_obs.0 = parse(key, v)?,
            "ig_obs_rate" => self.bayes.ig_obs.1 = parse(key, v)?,
            "ig_beta_shape" => self.bayes.ig_beta.0 = parse(key, v)?,
            "ig_beta_rate" => self.bayes.ig_beta.1 = parse(key, v)?,
            "fixed_sigma2_obs" => self.bayes.fixed_sigma2_obs = optional(key, v)?,
            "fixed_sigma2_beta" => self.bayes.fixed_sigma2_beta = optional(key, v)?,
            "kind" => self.kind = Some(v.parse().map_err(|_| bad_value(key, v))?),
            "replicates" => self.replicates = parse(key, v)?,
            "master_seed" => self.master_seed = Some(parse(key, v)?),
            "delta_levels" => {
                self.delta_levels = v
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "freeze_sizes" => self.freeze_sizes = parse(key, v)?,
            "grid_points" => self.grid_points = parse(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (line, k, v) in parse_pairs(text)? {
            self.set(&k, &v).map_err(|e| match e {
                ConfigError::UnknownKey(k) => ConfigError::Invalid(format!("line {line}: unknown key `{k}`")),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut s = Self::default();
        s.apply_text(text)?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Self::from_text(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    /// Renders every key, so that `from_text(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let s = &self.sim;
        let b = &self.bayes;
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("g_count", s.g_count.to_string());
        put("b_count", s.b_count.to_string());
        put("phi", s.phi.to_string());
        put("cv_pre", s.cv_pre.to_string());
        put("cv_post", s.cv_post.to_string());
        put("n_pre", s.n_pre.to_string());
        put("n_post", s.n_post.to_string());
        put("delta", s.delta.to_string());
        put("beta_mean", s.beta_mean.to_string());
        put("beta_sd", s.beta_sd.to_string());
        put("iterations", b.iterations.to_string());
        put("burn_in", b.burn_in.to_string());
        put("chains", b.chains.to_string());
        put("thin", b.thin.to_string());
        put("level", b.level.to_string());
        let nm = match b.noise_model {
            NoiseModel::RelativeToPre => "relative_to_pre",
            NoiseModel::InverseToPre => "inverse_to_pre",
        };
        put("noise_model", nm.to_string());
        put("ig_obs_shape", b.ig_obs.0.to_string());
        put("ig_obs_rate", b.ig_obs.1.to_string());
        put("ig_beta_shape", b.ig_beta.0.to_string());
        put("ig_beta_rate", b.ig_beta.1.to_string());
        if let Some(v) = b.fixed_sigma2_obs {
            put("fixed_sigma2_obs", v.to_string());
        }
        if let Some(v) = b.fixed_sigma2_beta {
            put("fixed_sigma2_beta", v.to_string());
        }
        if let Some(k) = self.kind {
            put("kind", k.to_string());
        }
        put("replicates", self.replicates.to_string());
        if let Some(seed) = self.master_seed {
            put("master_seed", seed.to_string());
        }
        if !self.delta_levels.is_empty() {
            let levels: Vec<String> = self.delta_levels.iter().map(f64::to_string).collect();
            put("delta_levels", levels.join(", "));
        }
        put("freeze_sizes", self.freeze_sizes.to_string());
        put("grid_points", self.grid_points.to_string());
        out
    }
}

fn optional(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value.is_empty() || value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}
