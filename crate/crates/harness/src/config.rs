//! Run configuration: a TOML file with grid, material, data-family,
//! integration and measurement sections.

use serde::{Deserialize, Serialize};
use std::path::Path;

use mhd_slab::state::{DataFamily, MaterialLaw};

use crate::HarnessError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub n1: usize,
    pub n2: usize,
    #[serde(default = "one")]
    pub l1: f64,
    #[serde(default = "one")]
    pub l2: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    pub lambdas: Vec<f64>,
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_clean_every")]
    pub clean_every: usize,
    #[serde(default = "default_outputs")]
    pub outputs: usize,
}

fn default_cfl() -> f64 {
    0.8
}
fn default_epsilon() -> f64 {
    0.02
}
fn default_clean_every() -> usize {
    10
}
fn default_outputs() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureSection {
    /// Measurement subdomain [0, frac * L1] x full tangential extent.
    #[serde(default = "default_subdomain")]
    pub subdomain_fraction: f64,
    /// Layer split instant as a fraction of the final time.
    #[serde(default = "default_layer_split")]
    pub layer_split_fraction: f64,
    #[serde(default = "default_norm_order")]
    pub norm_order: usize,
    #[serde(default = "default_kmax")]
    pub time_derivative_order: usize,
}

fn default_subdomain() -> f64 {
    0.8
}
fn default_layer_split() -> f64 {
    0.1
}
fn default_norm_order() -> usize {
    2
}
fn default_kmax() -> usize {
    1
}

impl Default for MeasureSection {
    fn default() -> Self {
        MeasureSection {
            subdomain_fraction: default_subdomain(),
            layer_split_fraction: default_layer_split(),
            norm_order: default_norm_order(),
            time_derivative_order: default_kmax(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub eos: MaterialLaw,
    pub family: DataFamily,
    pub run: RunSection,
    #[serde(default)]
    pub measure: MeasureSection,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.run.lambdas.is_empty() {
            return Err(HarnessError::Config("lambda list is empty".into()));
        }
        for pair in self.run.lambdas.windows(2) {
            if pair[1] <= pair[0] {
                return Err(HarnessError::Config(format!(
                    "lambda list must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if self.run.lambdas[0] < 1.0 {
            return Err(HarnessError::Config(format!(
                "lambdas must be >= 1, got {}",
                self.run.lambdas[0]
            )));
        }
        if !(self.run.cfl > 0.0 && self.run.cfl <= 1.0) {
            return Err(HarnessError::Config(format!(
                "cfl must lie in (0, 1], got {}",
                self.run.cfl
            )));
        }
        if self.run.epsilon < 0.0 {
            return Err(HarnessError::Config("epsilon must be >= 0".into()));
        }
        if !(self.run.t_final > 0.0) {
            return Err(HarnessError::Config("t_final must be positive".into()));
        }
        if !(self.measure.subdomain_fraction > 0.0 && self.measure.subdomain_fraction <= 1.0) {
            return Err(HarnessError::Config(
                "subdomain fraction must lie in (0, 1]".into(),
            ));
        }
        if !(self.measure.layer_split_fraction > 0.0
            && self.measure.layer_split_fraction < 1.0)
        {
            return Err(HarnessError::Config(
                "layer split fraction must lie in (0, 1)".into(),
            ));
        }
        // grid constraints surface early instead of mid-sweep
        mhd_slab::build_grid(self.grid.n1, self.grid.n2, self.grid.l1, self.grid.l2)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Canonical serialized form and its FNV-1a fingerprint.
    pub fn fingerprint(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in text.as_bytes() {
            hash ^= *b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}
