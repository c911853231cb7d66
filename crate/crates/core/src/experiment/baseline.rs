use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../baselines/kho.toml");

/// Frozen bounds for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineEntry {
    pub min_fidelity: Option<f64>,
    pub max_backward_l2: Option<f64>,
    pub max_amplitude_deviation: Option<f64>,
    /// Fidelity the slope sweep is measured against.
    pub reference_fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Baseline(pub BTreeMap<String, BaselineEntry>);

impl Baseline {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("checked-in baseline parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("baseline: {e}")))
    }

    pub fn entry(&self, name: &str) -> Result<BaselineEntry> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("no baseline entry `{name}`")))
    }
}
