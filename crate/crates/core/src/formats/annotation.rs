use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_json, write_json};
use crate::error::{record, Error, Result};
use crate::segment::ActionSegment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoAnnotation {
    pub id: String,
    pub num_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<f64>,
    pub segments: Vec<ActionSegment>,
}

/// Ground truth for a set of videos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub num_classes: usize,
    pub videos: Vec<VideoAnnotation>,
}

impl AnnotationFile {
    /// Check every video; errors carry the video's index.
    pub fn validate(&self, source: &str) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::Malformed {
                source_name: source.to_string(),
                message: "num_classes must be positive".into(),
            });
        }
        let mut seen = HashSet::new();
        for (i, v) in self.videos.iter().enumerate() {
            let bad = |msg: String| Err(record(source, i, msg));
            if v.id.is_empty() || v.id.chars().any(char::is_whitespace) {
                return bad(format!(
                    "video id {:?} must be non-empty without whitespace",
                    v.id
                ));
            }
            if !seen.insert(v.id.as_str()) {
                return bad(format!("duplicate video id {:?}", v.id));
            }
            if v.num_frames == 0 {
                return bad("num_frames must be positive".into());
            }
            if let Some(r) = v.frame_rate {
                if !(r > 0.0 && r.is_finite()) {
                    return bad(format!("frame_rate {r} must be positive"));
                }
            }
            for (j, s) in v.segments.iter().enumerate() {
                if s.start >= s.end || s.end >= v.num_frames {
                    return bad(format!(
                        "segment {j}: need 0 <= start < end < {}, got [{}, {}]",
                        v.num_frames, s.start, s.end
                    ));
                }
                if s.class >= self.num_classes {
                    return bad(format!(
                        "segment {j}: class {} out of range for {} classes",
                        s.class, self.num_classes
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let file: Self = parse_json(text, source)?;
        file.validate(source)?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate(&path.display().to_string())?;
        write_json(path, self)
    }

    pub fn video(&self, id: &str) -> Option<&VideoAnnotation> {
        self.videos.iter().find(|v| v.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AnnotationFile {
        AnnotationFile {
            num_classes: 2,
            videos: vec![VideoAnnotation {
                id: "v0".into(),
                num_frames: 100,
                frame_rate: Some(30.0),
                segments: vec![
                    ActionSegment::new(3, 40, 1, true),
                    ActionSegment::new(50, 60, 0, false),
                ],
            }],
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let a = sample();
        a.write(&path).unwrap();
        assert_eq!(AnnotationFile::read(&path).unwrap(), a);
    }

    #[test]
    fn rejects_with_record_index() {
        let mut a = sample();
        a.videos.push(VideoAnnotation {
            id: "v1".into(),
            ..a.videos[0].clone()
        });
        a.videos[1].segments[1].end = 100;
        let err = a.validate("a.json").unwrap_err();
        assert!(matches!(err, Error::Record { record: 1, .. }), "{err}");

        let mut a = sample();
        a.videos[0].segments[0].class = 2;
        assert!(matches!(
            a.validate("a.json"),
            Err(Error::Record { record: 0, .. })
        ));

        let mut a = sample();
        a.videos[0].segments[0].end = 3;
        assert!(a.validate("a.json").is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = r#"{"num_classes": 1, "videos": [], "extra": 1}"#;
        assert!(matches!(
            AnnotationFile::parse(text, "a"),
            Err(Error::Malformed { .. })
        ));
    }

    #[test]
    fn completeness_defaults_to_true() {
        let text = r#"{"num_classes": 1, "videos": [{"id": "a", "num_frames": 10,
            "segments": [{"start": 1, "end": 5, "class": 0}]}]}"#;
        let a = AnnotationFile::parse(text, "a").unwrap();
        assert!(a.videos[0].segments[0].complete);
    }
}
