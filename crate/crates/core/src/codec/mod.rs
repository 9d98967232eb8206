//! Progression labels and the five ordinal-regression heads.
//!
//! A progression label is an integer rank in `[0, K]` describing how far an
//! action has evolved at a frame. Each [`Method`] encodes that rank into a
//! training target, scores a raw head output against it (with the exact
//! gradient), and decodes a raw output back into a real-valued progression.

mod heads;
mod labels;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use heads::{compute_loss, decode, encode_target, ideal_output, soft_label, LossOutput};
pub use labels::{generate_labels, progression_labels, volume_indices};

/// Ordinal-regression head type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Regression,
    NominalClassification,
    CostSensitive,
    BinaryDecomposition,
    ThresholdModel,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::NominalClassification,
        Method::Regression,
        Method::CostSensitive,
        Method::BinaryDecomposition,
        Method::ThresholdModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Regression => "regression",
            Method::NominalClassification => "nominal_classification",
            Method::CostSensitive => "cost_sensitive",
            Method::BinaryDecomposition => "binary_decomposition",
            Method::ThresholdModel => "threshold_model",
        }
    }

    /// Number of raw output values the head produces for `ranks` = K.
    pub fn output_len(self, ranks: u32) -> usize {
        let k = ranks as usize;
        match self {
            Method::Regression => 1,
            Method::NominalClassification | Method::CostSensitive => k + 1,
            Method::BinaryDecomposition => 2 * k,
            Method::ThresholdModel => k,
        }
    }

    pub fn is_ordinal(self) -> bool {
        self != Method::NominalClassification
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "regression" | "reg" => Method::Regression,
            "nominal_classification" | "nominal" | "classification" => {
                Method::NominalClassification
            }
            "cost_sensitive" | "cost_sensitive_classification" | "sord" => Method::CostSensitive,
            "binary_decomposition" | "binary" => Method::BinaryDecomposition,
            "threshold_model" | "threshold" | "coral" => Method::ThresholdModel,
            _ => return Err(Error::config(format!("unknown method {s:?}"))),
        })
    }
}

/// How classification-style heads turn a distribution over ranks into a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    ArgMax,
    #[default]
    Expectation,
}

/// Reduction over the K per-rank terms of the binary-decomposition and
/// threshold-model losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressionConfig {
    /// K, the number of progression ranks beyond zero.
    pub ranks: u32,
    pub method: Method,
    #[serde(default)]
    pub decode_mode: DecodeMode,
    #[serde(default)]
    pub reduction: Reduction,
}

impl ProgressionConfig {
    pub fn new(ranks: u32, method: Method) -> Result<Self> {
        let config = Self {
            ranks,
            method,
            decode_mode: DecodeMode::default(),
            reduction: Reduction::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_decode_mode(mut self, mode: DecodeMode) -> Self {
        self.decode_mode = mode;
        self
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ranks < 1 {
            return Err(Error::config("K must be at least 1"));
        }
        Ok(())
    }

    pub fn output_len(&self) -> usize {
        self.method.output_len(self.ranks)
    }

    pub fn label(&self, value: u32) -> Result<ProgressionLabel> {
        ProgressionLabel::new(value, self.ranks)
    }
}

/// Frame layout of the network input around a center frame: `num_frames`
/// (even) frames spaced `stride` apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputVolumeSpec {
    pub num_frames: usize,
    pub stride: usize,
}

impl InputVolumeSpec {
    pub fn new(num_frames: usize, stride: usize) -> Result<Self> {
        let spec = Self { num_frames, stride };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frames < 2 || self.num_frames % 2 != 0 {
            return Err(Error::config(
                "volume length must be a positive even number",
            ));
        }
        if self.stride < 1 {
            return Err(Error::config("volume stride must be at least 1"));
        }
        Ok(())
    }

    /// Temporal span in frames.
    pub fn span(&self) -> usize {
        self.num_frames * self.stride
    }
}

/// An integer progression rank in `[0, K]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProgressionLabel(u32);

impl ProgressionLabel {
    pub fn new(value: u32, ranks: u32) -> Result<Self> {
        if value > ranks {
            return Err(Error::LabelOutOfRange { value, ranks });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

/// Training target of one head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalTarget {
    /// Normalized progression `p / K`.
    Regression(f64),
    /// Class index `p`.
    Nominal(usize),
    /// Soft label over the K + 1 ranks.
    Soft(Vec<f64>),
    /// `t[j - 1] = [p >= j]` for `j = 1..=K`.
    Cumulative(Vec<bool>),
}

/// Raw output of one head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadOutput {
    Scalar(f64),
    /// K + 1 class logits (nominal, cost-sensitive) or K threshold logits.
    Logits(Vec<f64>),
    /// K two-way logit pairs; index 0 answers "p >= j", index 1 "p < j".
    PairLogits(Vec<[f64; 2]>),
}

impl HeadOutput {
    /// Flat row-major view.
    pub fn as_slice(&self) -> &[f64] {
        match self {
            HeadOutput::Scalar(v) => std::slice::from_ref(v),
            HeadOutput::Logits(v) => v,
            HeadOutput::PairLogits(v) => v.as_flattened(),
        }
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        match self {
            HeadOutput::Scalar(v) => std::slice::from_mut(v),
            HeadOutput::Logits(v) => v,
            HeadOutput::PairLogits(v) => v.as_flattened_mut(),
        }
    }

    /// Rebuild an output of `config.method`'s shape from flat values.
    pub fn from_flat(config: &ProgressionConfig, values: &[f64]) -> Result<Self> {
        let expected = config.output_len();
        if values.len() != expected {
            return Err(Error::shape(
                format!("{expected} values for {}", config.method),
                values.len(),
            ));
        }
        Ok(match config.method {
            Method::Regression => HeadOutput::Scalar(values[0]),
            Method::NominalClassification | Method::CostSensitive | Method::ThresholdModel => {
                HeadOutput::Logits(values.to_vec())
            }
            Method::BinaryDecomposition => {
                HeadOutput::PairLogits(values.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}
