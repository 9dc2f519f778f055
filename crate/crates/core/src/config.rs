//! Experiment configuration file.
//!
//! One JSON document carries the scenario (`sources`, `mixing`), the bank
//! (`rings`, `weight_model`, `noise_std`, `noise_seed`), and optional `pbss`
//! and `sweep` sections. Missing `rings` default to one default ring per
//! received channel.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::engine::PbssConfig;
use crate::error::{PbssError, Result};
use crate::signal::{MixingScenario, ScenarioSpec};
use crate::sweep::SweepConfig;
use crate::weightbank::{BankSpec, RingSpec, WeightBank};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scenario: ScenarioSpec,
    #[serde(flatten)]
    pub bank: BankSpec,
    #[serde(default)]
    pub pbss: PbssConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

/// A fully built and validated configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: MixingScenario,
    pub bank: WeightBank,
    pub pbss: PbssConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    /// Default two-source setup with the given mixing matrix.
    pub fn two_source_default(mixing: &DMatrix<f64>) -> Self {
        Self {
            scenario: ScenarioSpec::two_source_default(mixing),
            bank: BankSpec::default_for(mixing.nrows()),
            pbss: PbssConfig::default(),
            sweep: SweepConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        if cfg.bank.rings.is_empty() {
            cfg.bank.rings = vec![RingSpec::default(); cfg.scenario.mixing.len()];
        }
        cfg.build()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            PbssError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<Experiment> {
        let scenario = self.scenario.build()?;
        let bank = self.bank.build()?;
        self.pbss.validate(&bank)?;
        self.sweep.validate()?;
        if scenario.channels() != bank.len() {
            return Err(PbssError::DimensionMismatch(format!(
                "{} rings for {} received channels",
                bank.len(),
                scenario.channels()
            )));
        }
        Ok(Experiment {
            scenario,
            bank,
            pbss: self.pbss,
            sweep: self.sweep.clone(),
        })
    }
}
