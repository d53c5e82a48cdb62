//! Scenario files: one JSON document describing a contest and run options.

use std::path::Path;

use contest_core::dist::{DistributionSpec, Num};
use contest_core::equilibrium::{ContestSpec, PrizeSchedule};
use contest_core::{AbilityDistributionF64, ContestSpecF64, PopulationModelF64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrizeLists {
    #[serde(default)]
    pub general: Vec<Num>,
    #[serde(default)]
    pub group: Vec<Num>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    General,
    Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub mu: Num,
    #[serde(rename = "F")]
    pub f: DistributionSpec,
    #[serde(rename = "G")]
    pub g: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prizes: Option<PrizeLists>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<DesignKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<Vec<Num>>,
    /// Multiplies both strategies before verification; a negative control.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb_scale: Option<f64>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        if s.n < 2 {
            return Err(CliError::Config(format!(
                "n must be at least 2, got {}",
                s.n
            )));
        }
        if s.name.is_empty() || s.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!(
                "scenario name {:?} is not a usable file stem",
                s.name
            )));
        }
        Ok(s)
    }

    pub fn mu(&self) -> Result<f64, CliError> {
        Ok(self.mu.value()?)
    }

    pub fn target(&self) -> Result<AbilityDistributionF64, CliError> {
        Ok(self.f.build()?)
    }

    pub fn nontarget(&self) -> Result<AbilityDistributionF64, CliError> {
        Ok(self.g.build()?)
    }

    pub fn population(&self) -> Result<PopulationModelF64, CliError> {
        Ok(PopulationModelF64::new(
            self.mu()?,
            self.target()?,
            self.nontarget()?,
        )?)
    }

    /// The contest with the scenario's prizes (all zero when none are given).
    pub fn contest(&self) -> Result<ContestSpecF64, CliError> {
        let lists = self.prizes.clone().unwrap_or_default();
        let values = |v: &[Num]| v.iter().map(|x| x.value()).collect::<Result<Vec<f64>, _>>();
        let prizes = PrizeSchedule::padded(self.n, values(&lists.general)?, values(&lists.group)?)?;
        Ok(ContestSpec::new(self.n, self.population()?, prizes)?)
    }

    pub fn mu_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.mu_grid {
            Some(g) => Ok(g.iter().map(|x| x.value()).collect::<Result<_, _>>()?),
            None => Ok((1..=99).map(|i| i as f64 / 100.0).collect()),
        }
    }
}
