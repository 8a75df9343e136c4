//! Experiment configuration, read from a flat JSON object.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1::SolverConfig;
use crate::measurement::default_n0;
use crate::signal::ModelParams;
use crate::trackers::{Algorithm, Thresholds};

/// Either the fixed recipe keyword or explicit values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    Recipe(RecipeKeyword),
    Explicit(Thresholds),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipeKeyword {
    Recipe,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::Recipe(RecipeKeyword::Recipe)
    }
}

/// Output files; any may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl OutputPaths {
    /// `results.csv`, `results.json` and `results.svg` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        OutputPaths {
            csv: Some(dir.join("results.csv")),
            json: Some(dir.join("results.json")),
            svg: Some(dir.join("results.svg")),
        }
    }
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub s0: usize,
    pub sa: usize,
    pub d: usize,
    pub r: f64,
    #[serde(default)]
    pub seed: u64,
    pub n: usize,
    /// Measurements at `t = 0`; defaults to `min(m, 5·S0 + 10)`, at least `n`.
    #[serde(default)]
    pub n0: Option<usize>,
    pub c: f64,
    #[serde(default = "default_one")]
    pub horizon: usize,
    #[serde(default = "default_one")]
    pub trials: usize,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub thresholds: ThresholdSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn model(&self) -> ModelParams {
        ModelParams { m: self.m, s0: self.s0, sa: self.sa, d: self.d, r: self.r }
    }

    pub fn n0(&self) -> usize {
        self.n0.unwrap_or_else(|| default_n0(self.m, self.s0, self.n))
    }

    pub fn thresholds(&self) -> Thresholds {
        match self.thresholds {
            ThresholdSpec::Recipe(_) => Thresholds::recipe(self.c, self.r),
            ThresholdSpec::Explicit(t) => t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        if self.trials < 1 {
            return Err(Error::Config("trials >= 1 violated".into()));
        }
        if self.horizon < 1 {
            return Err(Error::Config("horizon >= 1 violated".into()));
        }
        if self.n == 0 || self.n >= self.m {
            return Err(Error::Config(format!("0 < n < m violated (n = {}, m = {})", self.n, self.m)));
        }
        let n0 = self.n0();
        if n0 < self.n || n0 > self.m {
            return Err(Error::Config(format!("n <= n0 <= m violated (n0 = {n0})")));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("c >= 0 violated (c = {})", self.c)));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::Config("algorithms must not repeat".into()));
        }
        self.thresholds().validate()?;
        self.solver.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// One of the four stability regimes of the reference study.
    pub fn fig1(regime: Fig1Regime, trials: usize, seed: u64) -> Self {
        let (r, d) = regime.ramp();
        ExperimentConfig {
            m: 200,
            s0: 20,
            sa: 2,
            d,
            r,
            seed,
            n: 59,
            n0: None,
            c: 0.1266,
            horizon: 200,
            trials,
            algorithms: default_algorithms(),
            thresholds: ThresholdSpec::default(),
            solver: SolverConfig::default(),
            output: OutputPaths::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fig1Regime {
    #[serde(rename = "r1d3")]
    R1D3,
    #[serde(rename = "r075d4")]
    R075D4,
    #[serde(rename = "r05d4")]
    R05D4,
    #[serde(rename = "r04d5")]
    R04D5,
}

impl Fig1Regime {
    pub const ALL: [Fig1Regime; 4] = [Fig1Regime::R1D3, Fig1Regime::R075D4, Fig1Regime::R05D4, Fig1Regime::R04D5];

    /// `(r, d)`
    pub fn ramp(self) -> (f64, usize) {
        match self {
            Fig1Regime::R1D3 => (1.0, 3),
            Fig1Regime::R075D4 => (0.75, 4),
            Fig1Regime::R05D4 => (0.5, 4),
            Fig1Regime::R04D5 => (0.4, 5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Fig1Regime::R1D3 => "r1d3",
            Fig1Regime::R075D4 => "r075d4",
            Fig1Regime::R05D4 => "r05d4",
            Fig1Regime::R04D5 => "r04d5",
        }
    }
}

impl std::str::FromStr for Fig1Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fig1Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown regime {s:?} (expected r1d3, r075d4, r05d4 or r04d5)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"m": 200, "s0": 20, "sa": 2, "d": 3, "r": 1.0, "n": 59, "c": 0.1266}"#;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.n0(), 110);
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.algorithms, Algorithm::ALL.to_vec());
        assert_eq!(cfg.thresholds(), Thresholds::recipe(0.1266, 1.0));
        assert_eq!(cfg.solver, SolverConfig::default());
    }

    #[test]
    fn explicit_thresholds_and_round_trip() {
        let text = r#"{"m": 30, "s0": 4, "sa": 1, "d": 2, "r": 1.0, "n": 20, "c": 0.0,
            "thresholds": {"alpha": 0.1, "alpha_add": 0.05, "alpha_del": 0.5},
            "algorithms": ["modcs-aldl"], "solver": {"max_iters": 100}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.thresholds().alpha_del, 0.5);
        assert_eq!(cfg.solver.max_iters, 100);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let recipe = ExperimentConfig::from_json(&serde_json::to_string(&ExperimentConfig::fig1(Fig1Regime::R05D4, 3, 1)).unwrap()).unwrap();
        assert_eq!(recipe.thresholds, ThresholdSpec::default());
    }

    #[test]
    fn rejects_invalid() {
        for bad in [
            r#"{"m": 200, "s0": 20, "sa": 2, "d": 3, "r": 1.0, "n": 59, "c": 0.1, "trials": 0}"#,
            r#"{"m": 200, "s0": 20, "sa": 2, "d": 3, "r": 1.0, "n": 200, "c": 0.1}"#,
            r#"{"m": 200, "s0": 2, "sa": 2, "d": 3, "r": 1.0, "n": 59, "c": 0.1}"#,
            r#"{"m": 200, "s0": 20, "sa": 2, "d": 3, "r": 1.0, "n": 59, "c": 0.1, "algorithms": ["kfcs"]}"#,
            r#"{"m": 200, "s0": 20, "sa": 2, "d": 3, "r": 1.0, "n": 59, "c": 0.1, "bogus": 1}"#,
            r#"{"m": 200, "s0": 20, "sa": 2, "d": 3, "r": 1.0, "n": 59, "c": 0.1, "thresholds": "other"}"#,
        ] {
            let err = ExperimentConfig::from_json(bad).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{bad}: {err:?}");
        }
    }

    #[test]
    fn regimes() {
        for r in Fig1Regime::ALL {
            assert_eq!(r.name().parse::<Fig1Regime>().unwrap(), r);
            ExperimentConfig::fig1(r, 2, 0).validate().unwrap();
        }
    }
}
