use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pann::PannConfig;
use crate::pc_lstm::TwoPortConfig;
use crate::synthesis::SynthesisConfig;

pub const RUN_CONFIG_SCHEMA_VERSION: u32 = 1;

/// Settings for generated datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub frequency_hz: f64,
    pub segments: usize,
    pub radius_wavelengths: f64,
    pub two_port_samples: usize,
    /// Spacing range of the two-element dataset, in wavelengths.
    pub two_port_range: (f64, f64),
    pub synthesis_samples: usize,
    pub synthesis_sizes: Vec<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            frequency_hz: 3e9,
            segments: 16,
            radius_wavelengths: 0.002,
            two_port_samples: 100,
            two_port_range: (0.04, 0.7),
            synthesis_samples: 100,
            synthesis_sizes: vec![10, 30],
        }
    }
}

/// Fully resolved configuration; echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub ref_ohms: f64,
    pub data: DataConfig,
    pub pann: PannConfig,
    pub two_port: TwoPortConfig,
    pub synthesis: SynthesisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: RUN_CONFIG_SCHEMA_VERSION,
            seed: 42,
            ref_ohms: 50.0,
            data: DataConfig::default(),
            pann: PannConfig::default(),
            two_port: TwoPortConfig::default(),
            synthesis: SynthesisConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file, or the `config` section of a previous run's manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut value: serde_json::Value = serde_json::from_str(&text)?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        let config: RunConfig = serde_json::from_value(value)?;
        if config.schema_version != RUN_CONFIG_SCHEMA_VERSION {
            return Err(Error::domain(format!(
                "unsupported config schema_version {}",
                config.schema_version
            )));
        }
        Ok(config)
    }

    /// Copies the top-level seed into every stage.
    pub fn propagate_seed(&mut self) {
        self.pann.seed = self.seed;
        self.two_port.seed = self.seed;
        self.two_port.pann.seed = self.seed;
        self.synthesis.seed = self.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"seed": 7, "pann": {"epochs": 10}}"#).unwrap();
        let c = RunConfig::load(&p).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.pann.epochs, 10);
        assert_eq!(c.pann.hidden, vec![128, 128, 128]);
        assert_eq!(c.two_port, TwoPortConfig::default());
    }

    #[test]
    fn manifest_config_section_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        let mut c = RunConfig::default();
        c.seed = 3;
        std::fs::write(
            &p,
            serde_json::json!({"command": ["x"], "config": c}).to_string(),
        )
        .unwrap();
        assert_eq!(RunConfig::load(&p).unwrap(), c);
    }

    #[test]
    fn wrong_schema_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"schema_version": 9}"#).unwrap();
        assert!(RunConfig::load(&p).is_err());
    }
}
