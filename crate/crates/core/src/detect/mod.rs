//! Profile-matching detection on a per-frame progression sequence.
//!
//! Every window `[s, e]` whose first frame looks like an action start
//! (`p̂_s < start_max`), whose last frame looks like an action end
//! (`p̂_e > end_min`) and which is longer than `min_len` frames is graded
//! against the ideal 0→K ramp. Windows with a positive grade become
//! detections carrying the mean class scores over the window, and
//! class-agnostic NMS removes duplicates.

mod grade;
mod nms;
mod sample;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grade::{grade, grade_normalizer, make_template};
pub use nms::nms;
pub use sample::{sample_indices, subsample, Subsample};

use grade::{grade_ramp, RampGrader};
use nms::{rank_order, suppress_sorted};

/// Largest video length accepted by [`detect_bruteforce`].
pub const BRUTEFORCE_MAX_FRAMES: usize = 2000;

/// Windows whose prefix-sum grade falls below `-SCREEN_MARGIN` are skipped
/// without an exact evaluation. The prefix-sum error stays orders of
/// magnitude below this for any realistic sequence length.
const SCREEN_MARGIN: f64 = 1e-4;

/// Predicted progression per frame, each in `[0, K]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionSequence {
    values: Vec<f64>,
    ranks: u32,
}

impl ProgressionSequence {
    pub fn new(values: Vec<f64>, ranks: u32) -> Result<Self> {
        if ranks < 1 {
            return Err(Error::config("K must be at least 1"));
        }
        if values.is_empty() {
            return Err(Error::input("progression sequence is empty"));
        }
        let k = f64::from(ranks);
        if let Some((t, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=k).contains(*v)))
        {
            return Err(Error::input(format!(
                "frame {t}: progression {v} outside [0, {k}]"
            )));
        }
        Ok(Self { values, ranks })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ranks(&self) -> u32 {
        self.ranks
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-frame class scores, `T × C`, row-major. Rows sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScoreMatrix {
    scores: Vec<f64>,
    num_classes: usize,
}

impl ClassScoreMatrix {
    pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(scores: Vec<f64>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::input("class score matrix needs at least one class"));
        }
        if scores.len() % num_classes != 0 {
            return Err(Error::shape(
                format!("a multiple of {num_classes} scores"),
                scores.len(),
            ));
        }
        for (t, row) in scores.chunks_exact(num_classes).enumerate() {
            if let Some(msg) = Self::row_problem(row) {
                return Err(Error::input(format!("frame {t}: {msg}")));
            }
        }
        Ok(Self {
            scores,
            num_classes,
        })
    }

    /// Why `row` is not a valid score row, if it is not.
    pub(crate) fn row_problem(row: &[f64]) -> Option<String> {
        if row
            .iter()
            .any(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
        {
            return Some("class score outside [0, 1]".into());
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > Self::ROW_SUM_TOLERANCE {
            return Some(format!("class scores sum to {sum}"));
        }
        None
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let c = rows.first().map_or(0, Vec::len);
        if let Some(t) = rows.iter().position(|r| r.len() != c) {
            return Err(Error::input(format!("frame {t}: ragged class score row")));
        }
        Self::new(rows.concat(), c)
    }

    /// Every frame scores every class `1 / C`.
    pub fn uniform(num_frames: usize, num_classes: usize) -> Self {
        Self {
            scores: vec![1.0 / num_classes as f64; num_frames * num_classes],
            num_classes,
        }
    }

    pub fn num_frames(&self) -> usize {
        self.scores.len() / self.num_classes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.scores[t * self.num_classes..(t + 1) * self.num_classes]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    /// Mean score of every class over frames `[start, end]`.
    pub fn window_mean(&self, start: usize, end: usize) -> Vec<f64> {
        let len = (end - start + 1) as f64;
        let mut acc = vec![0.0; self.num_classes];
        for t in start..=end {
            for (a, v) in acc.iter_mut().zip(self.row(t)) {
                *a += v;
            }
        }
        acc.into_iter().map(|a| a / len).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// A window must span strictly more than this many frames.
    pub min_len: usize,
    /// A window may only start on a frame with progression below this rank.
    pub start_max: f64,
    /// A window may only end on a frame with progression above this rank.
    pub end_min: f64,
    /// NMS suppresses overlaps with IoU strictly above this.
    pub iou_threshold: f64,
    /// Upper bound on `|starts| × |ends|`; larger candidate sets are thinned
    /// evenly.
    #[serde(default = "default_max_candidates")]
    pub max_candidates: usize,
}

fn default_max_candidates() -> usize {
    DetectorParams::DEFAULT_MAX_CANDIDATES
}

impl DetectorParams {
    pub const DEFAULT_MAX_CANDIDATES: usize = 1_000_000;

    /// Start below 40%, end above 60%, longer than 60 frames, NMS at 0.4.
    pub fn thumos14(ranks: u32) -> Self {
        Self::from_fractions(ranks, 0.4, 0.6, 60, 0.4)
    }

    /// Start below 20%, end above 80%, longer than 600 frames, NMS at 0.4.
    pub fn dfmad70(ranks: u32) -> Self {
        Self::from_fractions(ranks, 0.2, 0.8, 600, 0.4)
    }

    pub fn from_fractions(
        ranks: u32,
        start_frac: f64,
        end_frac: f64,
        min_len: usize,
        iou_threshold: f64,
    ) -> Self {
        let k = f64::from(ranks);
        Self {
            min_len,
            start_max: start_frac * k,
            end_min: end_frac * k,
            iou_threshold,
            max_candidates: Self::DEFAULT_MAX_CANDIDATES,
        }
    }

    pub fn validate(&self, ranks: u32) -> Result<()> {
        let k = f64::from(ranks);
        if !(self.start_max >= 0.0 && self.start_max < self.end_min && self.end_min <= k) {
            return Err(Error::config(format!(
                "need 0 <= start_max < end_min <= K, got start_max={} end_min={} K={ranks}",
                self.start_max, self.end_min
            )));
        }
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::config(format!(
                "NMS IoU threshold {} outside [0, 1]",
                self.iou_threshold
            )));
        }
        if self.max_candidates == 0 {
            return Err(Error::config("max_candidates must be positive"));
        }
        Ok(())
    }
}

/// One detected action: inclusive frames `[start, end]`, the mean class
/// scores over them and the profile grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub start: usize,
    pub end: usize,
    pub class_scores: Vec<f64>,
    pub grade: f64,
}

impl Detection {
    pub(crate) fn key(&self) -> (usize, usize, f64) {
        (self.start, self.end, self.grade)
    }

    /// Ranking score of this detection for class `class`:
    /// `grade × mean class score`.
    pub fn class_score(&self, class: usize) -> f64 {
        ranking_score(self.grade, self.class_scores[class])
    }

    /// Class with the highest mean score, lowest index on ties.
    pub fn top_class(&self) -> usize {
        let mut best = 0;
        for (c, &v) in self.class_scores.iter().enumerate() {
            if v > self.class_scores[best] {
                best = c;
            }
        }
        best
    }
}

/// How a detection's grade and a class's mean score combine into the score
/// used to rank detections of that class.
pub fn ranking_score(grade: f64, class_score: f64) -> f64 {
    grade * class_score
}

/// A class-free segment hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub start: usize,
    pub end: usize,
    pub grade: f64,
}

pub fn to_proposals(detections: &[Detection]) -> Vec<Proposal> {
    detections
        .iter()
        .map(|d| Proposal {
            start: d.start,
            end: d.end,
            grade: d.grade,
        })
        .collect()
}

fn check_inputs(
    seq: &ProgressionSequence,
    scores: &ClassScoreMatrix,
    params: &DetectorParams,
) -> Result<()> {
    if seq.len() != scores.num_frames() {
        return Err(Error::LengthMismatch {
            left: seq.len(),
            right: scores.num_frames(),
        });
    }
    params.validate(seq.ranks())
}

/// Keep `keep` evenly spaced entries of `items`.
fn thin(items: &[usize], keep: usize) -> Vec<usize> {
    let keep = keep.clamp(1, items.len());
    (0..keep).map(|i| items[i * items.len() / keep]).collect()
}

fn screened_endpoints(
    seq: &ProgressionSequence,
    params: &DetectorParams,
) -> (Vec<usize>, Vec<usize>) {
    let values = seq.values();
    let mut starts: Vec<usize> = (0..values.len())
        .filter(|&t| values[t] < params.start_max)
        .collect();
    let mut ends: Vec<usize> = (0..values.len())
        .filter(|&t| values[t] > params.end_min)
        .collect();
    let total = starts.len() as f64 * ends.len() as f64;
    if total > params.max_candidates as f64 {
        let ratio = (total / params.max_candidates as f64).sqrt();
        starts = thin(&starts, (starts.len() as f64 / ratio).floor() as usize);
        ends = thin(&ends, (ends.len() as f64 / ratio).floor() as usize);
    }
    (starts, ends)
}

/// Positive-grade windows starting at `s`.
fn windows_from(
    s: usize,
    ends: &[usize],
    seq: &ProgressionSequence,
    grader: &RampGrader,
    min_len: usize,
) -> Vec<(usize, usize, f64)> {
    let values = seq.values();
    let first = ends.partition_point(|&e| e <= s);
    ends[first..]
        .iter()
        .filter(|&&e| e - s + 1 > min_len)
        .filter(|&&e| grader.approx_grade(s, e) > -SCREEN_MARGIN)
        .filter_map(|&e| {
            let g = grade_ramp(&values[s..=e], seq.ranks());
            (g > 0.0).then_some((s, e, g))
        })
        .collect()
}

fn finish(
    mut candidates: Vec<(usize, usize, f64)>,
    scores: &ClassScoreMatrix,
    iou_threshold: f64,
) -> Vec<Detection> {
    candidates.sort_by(|a, b| rank_order(*a, *b));
    suppress_sorted(&candidates, iou_threshold)
        .into_iter()
        .map(|i| {
            let (start, end, grade) = candidates[i];
            Detection {
                start,
                end,
                class_scores: scores.window_mean(start, end),
                grade,
            }
        })
        .collect()
}

/// Detect complete actions in one video. Output is sorted by grade,
/// descending, ties by `(start, end)`.
///
/// With the `parallel` feature the candidate search runs on the rayon pool;
/// the result is identical to [`detect_sequential`].
pub fn detect(
    seq: &ProgressionSequence,
    scores: &ClassScoreMatrix,
    params: &DetectorParams,
) -> Result<Vec<Detection>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;

        check_inputs(seq, scores, params)?;
        let (starts, ends) = screened_endpoints(seq, params);
        let grader = RampGrader::new(seq.values(), seq.ranks());
        let candidates: Vec<_> = starts
            .par_iter()
            .flat_map_iter(|&s| windows_from(s, &ends, seq, &grader, params.min_len))
            .collect();
        Ok(finish(candidates, scores, params.iou_threshold))
    }
    #[cfg(not(feature = "parallel"))]
    {
        detect_sequential(seq, scores, params)
    }
}

/// Single-threaded [`detect`].
pub fn detect_sequential(
    seq: &ProgressionSequence,
    scores: &ClassScoreMatrix,
    params: &DetectorParams,
) -> Result<Vec<Detection>> {
    check_inputs(seq, scores, params)?;
    let (starts, ends) = screened_endpoints(seq, params);
    let grader = RampGrader::new(seq.values(), seq.ranks());
    let candidates: Vec<_> = starts
        .iter()
        .flat_map(|&s| windows_from(s, &ends, seq, &grader, params.min_len))
        .collect();
    Ok(finish(candidates, scores, params.iou_threshold))
}

/// Reference detector: tests every `(s, e)` pair against every predicate
/// with an explicitly built template. Ignores `max_candidates`, so it agrees
/// with [`detect`] whenever that cap is not reached.
pub fn detect_bruteforce(
    seq: &ProgressionSequence,
    scores: &ClassScoreMatrix,
    params: &DetectorParams,
) -> Result<Vec<Detection>> {
    check_inputs(seq, scores, params)?;
    let values = seq.values();
    let t = values.len();
    if t > BRUTEFORCE_MAX_FRAMES {
        return Err(Error::TooManyFrames {
            frames: t,
            limit: BRUTEFORCE_MAX_FRAMES,
        });
    }
    let mut found = Vec::new();
    for s in 0..t {
        for e in s + 1..t {
            let len = e - s + 1;
            if len <= params.min_len || values[s] >= params.start_max || values[e] <= params.end_min
            {
                continue;
            }
            let template = make_template(len, seq.ranks())?;
            let g = grade(&values[s..=e], &template, seq.ranks())?;
            if g > 0.0 {
                found.push(Detection {
                    start: s,
                    end: e,
                    class_scores: scores.window_mean(s, e),
                    grade: g,
                });
            }
        }
    }
    Ok(nms(found, params.iou_threshold))
}

/// Detect on `n` evenly sampled frames and report detections in original
/// frame coordinates. `params.min_len` is given in original frames and is
/// rescaled to the sampling rate. `n >= T` is plain [`detect`].
pub fn detect_sampled(
    seq: &ProgressionSequence,
    scores: &ClassScoreMatrix,
    params: &DetectorParams,
    n: usize,
) -> Result<Vec<Detection>> {
    check_inputs(seq, scores, params)?;
    let sub = subsample(seq, scores, n)?;
    let mut scaled = *params;
    scaled.min_len = sub.scale_len(params.min_len, seq.len());
    let found = detect(&sub.seq, &sub.scores, &scaled)?;
    Ok(sub.map_back(found))
}
