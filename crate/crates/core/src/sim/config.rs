use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{DataCenterSpec, SfcType, VnfType};
use crate::num::Num;

use super::SimError;

fn default_cpu() -> Num {
    Num::from_int(2)
}
fn default_storage() -> Num {
    Num::from_int(5)
}
fn default_processing() -> Num {
    Num::from_int(1)
}
fn default_hop() -> Num {
    Num::from_int(3)
}
fn default_hold() -> u64 {
    10
}
fn default_arrival() -> f64 {
    0.25
}

/// Resource footprint and processing delay of one VNF instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VnfProfile {
    #[serde(default = "default_cpu")]
    pub cpu_units: Num,
    #[serde(default = "default_storage")]
    pub storage_gb: Num,
    #[serde(default = "default_processing")]
    pub processing_delay_ms: Num,
}

impl Default for VnfProfile {
    fn default() -> Self {
        VnfProfile {
            cpu_units: default_cpu(),
            storage_gb: default_storage(),
            processing_delay_ms: default_processing(),
        }
    }
}

/// Partial override of [`VnfProfile`] for one VNF type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VnfProfileOverride {
    pub cpu_units: Option<Num>,
    pub storage_gb: Option<Num>,
    pub processing_delay_ms: Option<Num>,
}

/// Scenario file contents. See `scenarios/three_dc.toml` for the canonical example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub data_centers: Vec<DataCenterSpec>,
    /// Default horizon when the caller does not supply one.
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub vnf_defaults: VnfProfile,
    #[serde(default)]
    pub vnf_overrides: BTreeMap<VnfType, VnfProfileOverride>,
    #[serde(default = "default_hop")]
    pub hop_delay_ms: Num,
    /// Steps an accepted request stays active before completing.
    #[serde(default = "default_hold")]
    pub hold_steps: u64,
    /// Per-step probability that a bundle of each SFC type arrives.
    #[serde(default = "default_arrival")]
    pub arrival_probability: f64,
    #[serde(default)]
    pub arrival_probability_by_type: BTreeMap<SfcType, f64>,
}

impl ScenarioConfig {
    pub fn with_data_centers(data_centers: Vec<DataCenterSpec>) -> Self {
        ScenarioConfig {
            data_centers,
            horizon: None,
            vnf_defaults: VnfProfile::default(),
            vnf_overrides: BTreeMap::new(),
            hop_delay_ms: default_hop(),
            hold_steps: default_hold(),
            arrival_probability: default_arrival(),
            arrival_probability_by_type: BTreeMap::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidScenario(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn profile(&self, vnf: VnfType) -> VnfProfile {
        let mut p = self.vnf_defaults;
        if let Some(o) = self.vnf_overrides.get(&vnf) {
            p.cpu_units = o.cpu_units.unwrap_or(p.cpu_units);
            p.storage_gb = o.storage_gb.unwrap_or(p.storage_gb);
            p.processing_delay_ms = o.processing_delay_ms.unwrap_or(p.processing_delay_ms);
        }
        p
    }

    pub fn arrival_probability_for(&self, sfc: SfcType) -> f64 {
        self.arrival_probability_by_type
            .get(&sfc)
            .copied()
            .unwrap_or(self.arrival_probability)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if self.data_centers.is_empty() {
            return bad("at least one data center is required".into());
        }
        let mut ids = HashSet::new();
        for dc in &self.data_centers {
            if dc.dc_id == 0 {
                return bad("dc_id must be positive".into());
            }
            if !ids.insert(dc.dc_id) {
                return bad(format!("duplicate dc_id {}", dc.dc_id));
            }
            if dc.total_storage_gb.is_negative() || dc.total_cpu_units.is_negative() {
                return bad(format!("data center {} has negative capacity", dc.dc_id));
            }
        }
        for vnf in VnfType::ALL {
            let p = self.profile(vnf);
            if p.cpu_units.is_negative()
                || p.storage_gb.is_negative()
                || p.processing_delay_ms.is_negative()
            {
                return bad(format!("{vnf} profile has a negative value"));
            }
        }
        if self.hop_delay_ms.is_negative() {
            return bad("hop_delay_ms must be non-negative".into());
        }
        let probs = std::iter::once(self.arrival_probability)
            .chain(self.arrival_probability_by_type.values().copied());
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("arrival probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}
