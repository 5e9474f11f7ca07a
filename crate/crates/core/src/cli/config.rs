//! Experiment configuration files.
//!
//! ```toml
//! [game]
//! Z = 60
//! alpha = 4
//!
//! [benefit]
//! kind = "sigmoid"
//!
//! [experiment]
//! name = "stationary"
//! ```
//!
//! Every key is optional; unknown keys are rejected. A fully resolved copy
//! (all defaults filled in) is echoed into the run manifest and can be read
//! back to reproduce the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BenefitFunction, GameParams, MutationForm};
use crate::stochastic::StationaryMethod;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Field,
    Stationary,
    SweepAlpha,
    InformedMap,
    KProfile,
    S1Compare,
    Montecarlo,
    Figure2,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Error::Config(format!("unknown experiment `{name}`")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Field => "field",
            ExperimentKind::Stationary => "stationary",
            ExperimentKind::SweepAlpha => "sweep-alpha",
            ExperimentKind::InformedMap => "informed-map",
            ExperimentKind::KProfile => "k-profile",
            ExperimentKind::S1Compare => "s1-compare",
            ExperimentKind::Montecarlo => "montecarlo",
            ExperimentKind::Figure2 => "figure2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    #[serde(rename = "Z", alias = "z", skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_form: Option<MutationForm>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenefitKind {
    #[default]
    Sigmoid,
    Linear,
    Step,
    Tabulated,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenefitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<BenefitKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steepness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    /// Two-column CSV `contribution,benefit`, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<ExperimentKind>,
    /// α values for sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<StationaryMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    /// Monte Carlo steps, trajectory stride and starting `(i_C, i_D)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<[usize; 2]>,
    /// Member fraction of the `k-profile` row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Coalition size shared by the `s1-compare` slices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_target: Option<usize>,
    /// Population sizes compared by `s1-compare`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub populations: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub benefit: BenefitSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    /// Directory that relative paths are resolved against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Turns a TOML parse error into one line that names the offending key.
fn toml_error(text: &str, err: toml::de::Error) -> Error {
    let line = err
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    let msg = err.message().replace('\n', " ");
    match line {
        Some(l) => Error::Config(format!("line {l}: {msg}")),
        None => Error::Config(msg),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(text, e))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            Self::from_toml_str(&text)?
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.name.unwrap_or(ExperimentKind::Stationary)
    }

    pub fn population(&self) -> usize {
        self.game.population.unwrap_or(match self.kind() {
            ExperimentKind::Figure2 => 100,
            _ => 60,
        })
    }

    pub fn benefit(&self) -> Result<BenefitFunction> {
        let b = &self.benefit;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("benefit kind needs key `{key}`")))
        };
        let reference = BenefitFunction::threshold_sigmoid();
        Ok(match b.kind.unwrap_or_default() {
            BenefitKind::Sigmoid => match reference {
                BenefitFunction::Sigmoid {
                    amplitude,
                    steepness,
                    threshold,
                } => BenefitFunction::Sigmoid {
                    amplitude: b.amplitude.unwrap_or(amplitude),
                    steepness: b.steepness.unwrap_or(steepness),
                    threshold: b.threshold.unwrap_or(threshold),
                },
                _ => unreachable!(),
            },
            BenefitKind::Linear => BenefitFunction::Linear {
                slope: need(b.slope, "slope")?,
            },
            BenefitKind::Step => BenefitFunction::Step {
                threshold: need(b.threshold, "threshold")?,
                height: need(b.height, "height")?,
            },
            BenefitKind::Tabulated => {
                let path = b
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("benefit kind needs key `path`".into()))?;
                BenefitFunction::from_csv_path(self.base_dir.join(path))?
            }
        })
    }

    /// Model parameters with defaults filled in and validated.
    pub fn params(&self) -> Result<GameParams> {
        let z = self.population();
        let g = &self.game;
        let mut p = GameParams::reference(z).with_benefit(self.benefit()?);
        p.excludability = g.e.unwrap_or(p.excludability);
        p.theta = g.theta.unwrap_or(p.theta);
        p.theta_prime = g.theta_prime.unwrap_or(p.theta_prime);
        p.cost = g.c.unwrap_or(p.cost);
        p.membership_cost = g.c_c.unwrap_or(p.membership_cost);
        p.min_group_fraction = g.g_m.unwrap_or(p.min_group_fraction);
        p.alpha = g.alpha.unwrap_or(p.alpha);
        p.beta = g.beta.unwrap_or(p.beta);
        p.mu = g.mu.unwrap_or(p.mu);
        p.mutation_form = g.mutation_form.unwrap_or(p.mutation_form);
        p.validate()?;
        Ok(p)
    }

    pub fn values(&self) -> Vec<f64> {
        self.experiment
            .values
            .clone()
            .unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0])
    }

    pub fn seed(&self) -> u64 {
        self.experiment.seed.unwrap_or(0)
    }

    pub fn formats(&self) -> Vec<Format> {
        let mut f = self
            .experiment
            .formats
            .clone()
            .unwrap_or_else(|| vec![Format::Csv, Format::Json]);
        f.sort();
        f.dedup();
        f
    }

    pub fn out_dir(&self) -> PathBuf {
        let out = self
            .experiment
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("out/{}", self.kind().name())));
        if out.is_absolute() {
            out
        } else {
            self.base_dir.join(out)
        }
    }

    pub fn grid_resolution(&self) -> usize {
        self.experiment.grid_resolution.unwrap_or(200)
    }

    /// Copy with every default made explicit, as echoed in the manifest.
    pub fn resolved(&self) -> Result<ExperimentConfig> {
        let p = self.params()?;
        let mut r = self.clone();
        let g = &mut r.game;
        g.population = Some(p.population);
        g.e = Some(p.excludability);
        g.theta = Some(p.theta);
        g.theta_prime = Some(p.theta_prime);
        g.c = Some(p.cost);
        g.c_c = Some(p.membership_cost);
        g.g_m = Some(p.min_group_fraction);
        g.alpha = Some(p.alpha);
        g.beta = Some(p.beta);
        g.mu = Some(p.mu);
        g.mutation_form = Some(p.mutation_form);
        let b = &mut r.benefit;
        b.kind = Some(b.kind.unwrap_or_default());
        if let Some(path) = b.path.take() {
            let joined = self.base_dir.join(path);
            b.path = Some(std::fs::canonicalize(&joined).unwrap_or(joined));
        }
        if let BenefitFunction::Sigmoid {
            amplitude,
            steepness,
            threshold,
        } = p.benefit
        {
            b.amplitude = Some(amplitude);
            b.steepness = Some(steepness);
            b.threshold = Some(threshold);
        }
        let e = &mut r.experiment;
        e.name = Some(self.kind());
        e.seed = Some(self.seed());
        e.formats = Some(self.formats());
        if matches!(
            self.kind(),
            ExperimentKind::SweepAlpha
                | ExperimentKind::Figure2
                | ExperimentKind::KProfile
                | ExperimentKind::S1Compare
        ) {
            e.values = Some(self.values());
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml_str("[game]\nthetta = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("thetta"), "{msg}");
        assert!(!msg.contains('\n'));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(ExperimentConfig::from_toml_str("[gmae]\nZ = 10\n").is_err());
    }

    #[test]
    fn defaults_follow_population() {
        let cfg = ExperimentConfig::from_toml_str("[game]\nZ = 40\nalpha = 3\n").unwrap();
        let p = cfg.params().unwrap();
        assert_eq!(p.population, 40);
        assert_eq!(p.min_group_fraction, 5.0 / 40.0);
        assert_eq!(p.mu, 1.0 / 40.0);
        assert_eq!(p.alpha, 3.0);
    }

    #[test]
    fn invalid_param_exit_code() {
        let cfg = ExperimentConfig::from_toml_str("[game]\ne = 2\n").unwrap();
        assert_eq!(cfg.params().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn resolved_round_trips_through_json() {
        let cfg = ExperimentConfig::from_toml_str(
            "[game]\nZ = 30\n[benefit]\nkind = \"linear\"\nslope = 3\n[experiment]\nname = \"sweep-alpha\"\n",
        )
        .unwrap();
        let r = cfg.resolved().unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.params().unwrap(), cfg.params().unwrap());
        assert_eq!(back.values(), vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn missing_benefit_key() {
        let cfg = ExperimentConfig::from_toml_str("[benefit]\nkind = \"step\"\nheight = 1\n").unwrap();
        assert!(cfg.params().unwrap_err().to_string().contains("threshold"));
    }
}
