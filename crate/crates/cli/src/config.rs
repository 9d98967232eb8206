use std::path::Path;

use anyhow::{Context, Result};
use progression_core::detect::DetectorParams;
use progression_core::sim::SimConfig;
use progression_core::toy::{CompareConfig, SyntheticFeatureSpec, TrainConfig};
use serde::Deserialize;

use crate::args::Preset;

/// Detector settings: a preset scaled to K, then explicit overrides.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub preset: Option<PresetName>,
    pub min_len: Option<usize>,
    pub start_max: Option<f64>,
    pub end_min: Option<f64>,
    pub iou_threshold: Option<f64>,
    pub max_candidates: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Thumos14,
    Dfmad70,
}

impl From<Preset> for PresetName {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Thumos14 => PresetName::Thumos14,
            Preset::Dfmad70 => PresetName::Dfmad70,
        }
    }
}

impl DetectorSection {
    pub fn resolve(&self, ranks: u32) -> DetectorParams {
        let mut p = match self.preset.unwrap_or(PresetName::Thumos14) {
            PresetName::Thumos14 => DetectorParams::thumos14(ranks),
            PresetName::Dfmad70 => DetectorParams::dfmad70(ranks),
        };
        if let Some(v) = self.min_len {
            p.min_len = v;
        }
        if let Some(v) = self.start_max {
            p.start_max = v;
        }
        if let Some(v) = self.end_min {
            p.end_min = v;
        }
        if let Some(v) = self.iou_threshold {
            p.iou_threshold = v;
        }
        if let Some(v) = self.max_candidates {
            p.max_candidates = v;
        }
        p
    }
}

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub ranks: Option<u32>,
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub detector: DetectorSection,
    pub train: Option<TrainConfig>,
    pub features: Option<SyntheticFeatureSpec>,
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub toy: ToySection,
}

/// Dataset sizes for `train-toy`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToySection {
    pub train_samples: usize,
    pub eval_samples: usize,
    pub num_classes: usize,
}

impl Default for ToySection {
    fn default() -> Self {
        Self {
            train_samples: 500,
            eval_samples: 500,
            num_classes: 3,
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
    }
}
