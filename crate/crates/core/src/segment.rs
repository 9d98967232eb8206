use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An annotated action instance. `start` and `end` are inclusive frame
/// indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSegment {
    pub start: usize,
    pub end: usize,
    pub class: usize,
    #[serde(default = "default_complete")]
    pub complete: bool,
}

fn default_complete() -> bool {
    true
}

impl ActionSegment {
    pub fn new(start: usize, end: usize, class: usize, complete: bool) -> Self {
        Self {
            start,
            end,
            class,
            complete,
        }
    }

    /// Number of frames covered, or an error when `end < start`.
    pub fn num_frames(&self) -> Result<usize> {
        if self.end < self.start {
            return Err(Error::EmptySegment);
        }
        Ok(self.end - self.start + 1)
    }

    pub fn overlaps(&self, other: &ActionSegment) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// IoU of two segments treated as real intervals `[start, end]`.
///
/// Degenerate intervals have zero length; two identical degenerate intervals
/// have IoU 1, any other pair involving one has IoU 0.
pub fn interval_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    inter / union
}

pub fn segment_iou(a: (usize, usize), b: (usize, usize)) -> f64 {
    interval_iou((a.0 as f64, a.1 as f64), (b.0 as f64, b.1 as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_examples() {
        assert_eq!(segment_iou((0, 100), (0, 100)), 1.0);
        assert_eq!(segment_iou((0, 100), (200, 300)), 0.0);
        assert!((segment_iou((0, 100), (50, 150)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(segment_iou((0, 100), (0, 60)), 0.6);
        // touching intervals share a single point, zero length
        assert_eq!(segment_iou((0, 10), (10, 20)), 0.0);
        assert_eq!(segment_iou((5, 5), (5, 5)), 1.0);
    }

    #[test]
    fn inverted_segment_is_empty() {
        let seg = ActionSegment::new(10, 9, 0, true);
        assert!(matches!(seg.num_frames(), Err(Error::EmptySegment)));
        assert_eq!(ActionSegment::new(3, 3, 0, true).num_frames().unwrap(), 1);
    }
}
