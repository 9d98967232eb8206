use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_json, write_json};
use crate::detect::{Detection, Proposal};
use crate::error::{record, Result};

/// Detections for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionFile {
    pub video: String,
    pub num_frames: usize,
    pub num_classes: usize,
    pub detections: Vec<Detection>,
}

/// Class-agnostic proposals for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalFile {
    pub video: String,
    pub num_frames: usize,
    pub proposals: Vec<Proposal>,
}

fn check_window(start: usize, end: usize, frames: usize, grade: f64) -> Option<String> {
    if start >= end || end >= frames {
        return Some(format!(
            "need 0 <= start < end < {frames}, got [{start}, {end}]"
        ));
    }
    if !grade.is_finite() {
        return Some(format!("grade {grade} is not finite"));
    }
    None
}

impl DetectionFile {
    pub fn validate(&self, source: &str) -> Result<()> {
        for (i, d) in self.detections.iter().enumerate() {
            if let Some(msg) = check_window(d.start, d.end, self.num_frames, d.grade) {
                return Err(record(source, i, msg));
            }
            if d.class_scores.len() != self.num_classes {
                return Err(record(
                    source,
                    i,
                    format!(
                        "{} class scores, expected {}",
                        d.class_scores.len(),
                        self.num_classes
                    ),
                ));
            }
            if d.class_scores
                .iter()
                .any(|s| !(s.is_finite() && (0.0..=1.0).contains(s)))
            {
                return Err(record(source, i, "class score outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let f: Self = parse_json(text, source)?;
        f.validate(source)?;
        Ok(f)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate(&path.display().to_string())?;
        write_json(path, self)
    }
}

impl ProposalFile {
    pub fn validate(&self, source: &str) -> Result<()> {
        for (i, p) in self.proposals.iter().enumerate() {
            if let Some(msg) = check_window(p.start, p.end, self.num_frames, p.grade) {
                return Err(record(source, i, msg));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let f: Self = parse_json(text, source)?;
        f.validate(source)?;
        Ok(f)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate(&path.display().to_string())?;
        write_json(path, self)
    }
}
