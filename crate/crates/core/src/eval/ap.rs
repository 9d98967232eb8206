use serde::{Deserialize, Serialize};

use crate::detect::Detection;
use crate::error::{Error, Result};
use crate::segment::{segment_iou, ActionSegment};

/// A detection attributed to one class with its ranking score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSegment {
    pub start: usize,
    pub end: usize,
    pub class: usize,
    pub score: f64,
}

/// One entry per `(detection, class)` pair, scored with
/// [`Detection::class_score`].
pub fn class_detections(detections: &[Detection]) -> Vec<ScoredSegment> {
    detections
        .iter()
        .flat_map(|d| {
            (0..d.class_scores.len()).map(move |class| ScoredSegment {
                start: d.start,
                end: d.end,
                class,
                score: d.class_score(class),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapAtIou {
    pub iou: f64,
    pub map: f64,
    /// AP of every class id; `None` for classes without complete ground truth.
    pub per_class: Vec<Option<f64>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    TruePositive,
    FalsePositive,
    Ignored,
}

/// Area under the precision envelope of a ranked list of outcomes.
fn all_point_ap(outcomes: &[Outcome], positives: usize) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::new(); // (recall, precision)
    for o in outcomes {
        match o {
            Outcome::TruePositive => tp += 1,
            Outcome::FalsePositive => fp += 1,
            Outcome::Ignored => continue,
        }
        curve.push((tp as f64 / positives as f64, tp as f64 / (tp + fp) as f64));
    }
    // precision envelope, right to left
    for i in (0..curve.len().saturating_sub(1)).rev() {
        curve[i].1 = curve[i].1.max(curve[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &(recall, precision) in &curve {
        if recall > prev_recall {
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
    }
    ap
}

/// Ranked outcome list for `class` at `iou` across all videos.
fn match_class(
    detections: &[Vec<ScoredSegment>],
    ground_truth: &[Vec<ActionSegment>],
    class: usize,
    iou: f64,
) -> Vec<Outcome> {
    let mut ranked: Vec<(usize, &ScoredSegment)> = detections
        .iter()
        .enumerate()
        .flat_map(|(v, dets)| {
            dets.iter()
                .filter(|d| d.class == class)
                .map(move |d| (v, d))
        })
        .collect();
    ranked.sort_by(|(va, a), (vb, b)| {
        b.score
            .total_cmp(&a.score)
            .then(va.cmp(vb))
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
    });

    let mut matched: Vec<Vec<bool>> = ground_truth.iter().map(|g| vec![false; g.len()]).collect();
    ranked
        .into_iter()
        .map(|(v, d)| {
            let gts = &ground_truth[v];
            let mut best: Option<(usize, f64)> = None;
            let mut hits_incomplete = false;
            for (i, g) in gts.iter().enumerate().filter(|(_, g)| g.class == class) {
                let overlap = segment_iou((d.start, d.end), (g.start, g.end));
                if overlap < iou {
                    continue;
                }
                if !g.complete {
                    hits_incomplete = true;
                } else if !matched[v][i] && best.map_or(true, |(_, b)| overlap > b) {
                    best = Some((i, overlap));
                }
            }
            match best {
                Some((i, _)) => {
                    matched[v][i] = true;
                    Outcome::TruePositive
                }
                None if hits_incomplete => Outcome::Ignored,
                None => Outcome::FalsePositive,
            }
        })
        .collect()
}

/// AP of one class at one IoU threshold, or `None` when the class has no
/// complete ground truth.
pub fn average_precision(
    detections: &[Vec<ScoredSegment>],
    ground_truth: &[Vec<ActionSegment>],
    class: usize,
    iou: f64,
) -> Result<Option<f64>> {
    if detections.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: detections.len(),
            right: ground_truth.len(),
        });
    }
    let positives = ground_truth
        .iter()
        .flatten()
        .filter(|g| g.complete && g.class == class)
        .count();
    if positives == 0 {
        return Ok(None);
    }
    let outcomes = match_class(detections, ground_truth, class, iou);
    Ok(Some(all_point_ap(&outcomes, positives)))
}

/// mAP over classes with at least one complete ground-truth instance, at
/// each IoU threshold.
///
/// A detection is a true positive when it overlaps an unmatched complete
/// instance of its class by at least the threshold (highest IoU wins). One
/// that instead overlaps only incomplete instances of its class is ignored,
/// neither rewarded nor penalised. Everything else is a false positive.
pub fn mean_average_precision(
    detections: &[Vec<ScoredSegment>],
    ground_truth: &[Vec<ActionSegment>],
    iou_thresholds: &[f64],
) -> Result<Vec<MapAtIou>> {
    if detections.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: detections.len(),
            right: ground_truth.len(),
        });
    }
    let num_classes = ground_truth
        .iter()
        .flatten()
        .filter(|g| g.complete)
        .map(|g| g.class + 1)
        .max()
        .ok_or(Error::NoGroundTruth)?;

    iou_thresholds
        .iter()
        .map(|&iou| {
            let per_class = per_class_ap(detections, ground_truth, num_classes, iou)?;
            let present: Vec<f64> = per_class.iter().flatten().copied().collect();
            let map = present.iter().sum::<f64>() / present.len() as f64;
            Ok(MapAtIou {
                iou,
                map,
                per_class,
            })
        })
        .collect()
}

fn per_class_ap(
    detections: &[Vec<ScoredSegment>],
    ground_truth: &[Vec<ActionSegment>],
    num_classes: usize,
    iou: f64,
) -> Result<Vec<Option<f64>>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..num_classes)
            .into_par_iter()
            .map(|c| average_precision(detections, ground_truth, c, iou))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..num_classes)
            .map(|c| average_precision(detections, ground_truth, c, iou))
            .collect()
    }
}

/// `(detected, total)` over incomplete instances: an instance counts as
/// detected when any detection overlaps it with IoU at least `iou`.
pub fn incomplete_detection_rate(
    detections: &[Vec<Detection>],
    ground_truth: &[Vec<ActionSegment>],
    iou: f64,
) -> Result<(usize, usize)> {
    if detections.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: detections.len(),
            right: ground_truth.len(),
        });
    }
    let mut detected = 0;
    let mut total = 0;
    for (dets, gts) in detections.iter().zip(ground_truth) {
        for g in gts.iter().filter(|g| !g.complete) {
            total += 1;
            if dets
                .iter()
                .any(|d| segment_iou((d.start, d.end), (g.start, g.end)) >= iou)
            {
                detected += 1;
            }
        }
    }
    Ok((detected, total))
}
