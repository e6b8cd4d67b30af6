//! Run configuration: a TOML document, optionally overridden from the
//! command line, validated before anything is simulated.

use std::path::PathBuf;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::patient::DiabetesType;
use crate::protocol::{Arm, ScenarioId, ScenarioSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_scenario")]
    scenario: String,
    #[serde(default = "default_type")]
    diabetes_type: String,
    #[serde(default = "default_days")]
    days: u32,
    #[serde(default = "default_arms")]
    arms: Vec<String>,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default)]
    jobs: usize,
    #[serde(default)]
    cohort: RawCohort,
    #[serde(default)]
    features: RawFeatures,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCohort {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
}

impl Default for RawCohort {
    fn default() -> Self {
        RawCohort { n: default_n(), seed: default_seed() }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeatures {
    dawn: Option<bool>,
    misestimation: Option<Misestimation>,
    rescue_threshold: Option<f64>,
}

/// `false` disables misestimation, `true` keeps the scenario's interval,
/// `[lo, hi]` replaces it.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Misestimation {
    Toggle(bool),
    Interval([f64; 2]),
}

fn default_scenario() -> String {
    "S1".into()
}
fn default_type() -> String {
    "T1D".into()
}
fn default_days() -> u32 {
    90
}
fn default_arms() -> Vec<String> {
    vec!["ABBA".into(), "BBA".into()]
}
fn default_out() -> PathBuf {
    PathBuf::from("abba-out")
}
fn default_n() -> usize {
    20
}
fn default_seed() -> u64 {
    1
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub scenario: Option<ScenarioId>,
    pub arms: Vec<Arm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub diabetes_type: DiabetesType,
    pub n: usize,
    pub seed: u64,
    pub arms: Vec<Arm>,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub spec: ScenarioSpec,
}

impl RunConfig {
    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let scenario = match overrides.scenario {
            Some(s) => s,
            None => raw.scenario.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
        };
        let diabetes_type = raw.diabetes_type.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        let arms = if overrides.arms.is_empty() {
            raw.arms
                .iter()
                .map(|a| a.parse())
                .collect::<Result<Vec<Arm>>>()
                .map_err(|e| Error::Config(e.to_string()))?
        } else {
            overrides.arms.clone()
        };
        let mut spec = ScenarioSpec::new(scenario);
        spec.days = raw.days;
        if let Some(d) = raw.features.dawn {
            spec.dawn = d;
        }
        match raw.features.misestimation {
            Some(Misestimation::Toggle(false)) => spec.misestimation = None,
            Some(Misestimation::Interval([lo, hi])) => spec.misestimation = Some((lo, hi)),
            Some(Misestimation::Toggle(true)) | None => {}
        }
        if let Some(t) = raw.features.rescue_threshold {
            spec.rescue_threshold = t;
        }
        let cfg = RunConfig {
            diabetes_type,
            n: raw.cohort.n,
            seed: overrides.seed.unwrap_or(raw.cohort.seed),
            arms,
            out: overrides.out.clone().unwrap_or(raw.out),
            jobs: overrides.jobs.unwrap_or(raw.jobs),
            spec,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("cohort size must be at least 1".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::Config("no arms to run".into()));
        }
        let mut arms = self.arms.clone();
        arms.sort();
        arms.dedup();
        if arms.len() != self.arms.len() {
            return Err(Error::Config("arms listed twice".into()));
        }
        self.spec.validate()
    }

    /// Everything that influences results, one `key = value` per line.
    /// Output location and thread count are left out.
    pub fn canonical(&self) -> String {
        let s = &self.spec;
        let arms: Vec<String> = self.arms.iter().map(Arm::to_string).collect();
        let mis = match s.misestimation {
            Some((lo, hi)) => format!("{lo} {hi}"),
            None => "off".into(),
        };
        format!(
            "scenario = {}\ndiabetes_type = {}\ndays = {}\narms = {}\nn = {}\nseed = {}\ndawn = {}\nmisestimation = {}\nrescue_threshold = {}\n",
            s.id,
            self.diabetes_type,
            s.days,
            arms.join(" "),
            self.n,
            self.seed,
            s.dawn,
            mis,
            s.rescue_threshold
        )
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
