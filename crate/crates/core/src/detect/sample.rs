use crate::error::{Error, Result};

use super::{ClassScoreMatrix, Detection, ProgressionSequence};

/// `n` evenly spaced frame indices of a `total`-frame video, first and last
/// included. `n >= total` yields every frame.
pub fn sample_indices(total: usize, n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::input(format!(
            "need at least 2 sampled frames, got {n}"
        )));
    }
    if n >= total {
        return Ok((0..total).collect());
    }
    let span = (total - 1) as u64;
    let steps = (n - 1) as u64;
    // round(i · span / steps), halves up
    Ok((0..n as u64)
        .map(|i| ((2 * i * span + steps) / (2 * steps)) as usize)
        .collect())
}

/// A frame-subsampled view of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsample {
    pub seq: ProgressionSequence,
    pub scores: ClassScoreMatrix,
    /// Original frame index of every sampled frame.
    pub index: Vec<usize>,
}

impl Subsample {
    pub fn is_identity(&self) -> bool {
        self.index.iter().enumerate().all(|(i, &f)| i == f)
    }

    /// Translate detections on the sampled frames back to original frames.
    pub fn map_back(&self, detections: Vec<Detection>) -> Vec<Detection> {
        detections
            .into_iter()
            .map(|mut d| {
                d.start = self.index[d.start];
                d.end = self.index[d.end];
                d
            })
            .collect()
    }

    /// Convert a frame length in original frames to sampled frames,
    /// rounding down.
    pub fn scale_len(&self, frames: usize, total: usize) -> usize {
        if self.is_identity() || total < 2 {
            return frames;
        }
        let steps = (self.index.len() - 1) as u64;
        (frames as u64 * steps / (total - 1) as u64) as usize
    }
}

pub fn subsample(
    seq: &ProgressionSequence,
    scores: &ClassScoreMatrix,
    n: usize,
) -> Result<Subsample> {
    if seq.len() != scores.num_frames() {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: scores.num_frames(),
        });
    }
    let index = sample_indices(seq.len(), n)?;
    let values = index.iter().map(|&i| seq.values()[i]).collect();
    let rows: Vec<f64> = index
        .iter()
        .flat_map(|&i| scores.row(i).iter().copied())
        .collect();
    Ok(Subsample {
        seq: ProgressionSequence::new(values, seq.ranks())?,
        scores: ClassScoreMatrix::new(rows, scores.num_classes())?,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_examples() {
        assert_eq!(sample_indices(10, 10).unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(sample_indices(10, 50).unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(sample_indices(1000, 2).unwrap(), vec![0, 999]);
        assert_eq!(sample_indices(9, 3).unwrap(), vec![0, 4, 8]);
        assert!(sample_indices(9, 1).is_err());
    }

    #[test]
    fn indices_are_strictly_increasing() {
        for total in 2..200 {
            for n in 2..=total {
                let idx = sample_indices(total, n).unwrap();
                assert_eq!(idx.len(), n);
                assert_eq!(idx[0], 0);
                assert_eq!(*idx.last().unwrap(), total - 1);
                assert!(idx.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn subsample_and_map_back() {
        let seq = ProgressionSequence::new((0..9).map(|v| v as f64 * 10.0).collect(), 100).unwrap();
        let scores = ClassScoreMatrix::uniform(9, 2);
        let sub = subsample(&seq, &scores, 3).unwrap();
        assert_eq!(sub.index, vec![0, 4, 8]);
        assert_eq!(sub.seq.values(), &[0.0, 40.0, 80.0]);
        assert_eq!(sub.scores.num_frames(), 3);
        let d = Detection {
            start: 0,
            end: 2,
            class_scores: vec![0.5, 0.5],
            grade: 0.9,
        };
        let back = sub.map_back(vec![d]);
        assert_eq!((back[0].start, back[0].end), (0, 8));
        assert_eq!(sub.scale_len(8, 9), 2);
    }
}
