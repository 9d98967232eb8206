//! Progression error, classification accuracy, proposal recall and
//! detection mAP.

mod ap;
mod report;

use crate::detect::{Detection, Proposal};
use crate::error::{Error, Result};
use crate::segment::{segment_iou, ActionSegment};

pub use ap::{
    average_precision, class_detections, incomplete_detection_rate, mean_average_precision,
    MapAtIou, ScoredSegment,
};
pub use report::EvalReport;

/// IoU thresholds for temporal action detection mAP.
pub const DETECTION_IOUS: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
/// IoU thresholds for long-action detection mAP.
pub const STRICT_IOUS: [f64; 3] = [0.5, 0.7, 0.9];

/// `0.50, 0.55, …, 0.95`, each the f64 nearest its decimal value.
pub fn recall_ious() -> Vec<f64> {
    (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

/// Mean absolute error rescaled to `[0, 100]`: `(100 / K) · mean |p̂ − p|`.
pub fn mae(predictions: &[f64], labels: &[f64], ranks: u32) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::input("MAE of an empty set"));
    }
    if ranks == 0 {
        return Err(Error::config("K must be at least 1"));
    }
    let total: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, l)| (p - l).abs())
        .sum();
    Ok(100.0 / f64::from(ranks) * total / predictions.len() as f64)
}

pub fn top1_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::input("accuracy of an empty set"));
    }
    let correct = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / predicted.len() as f64)
}

/// Average recall over [`recall_ious`] when keeping the top `⌈AN⌉`
/// proposals of every video, for each AN in `an_values`.
///
/// Only complete ground-truth segments count. Returns `(AN, AR)` pairs in
/// input order; with no complete ground truth every AR is 0.
pub fn average_recall(
    proposals: &[Vec<Proposal>],
    ground_truth: &[Vec<ActionSegment>],
    an_values: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if proposals.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: proposals.len(),
            right: ground_truth.len(),
        });
    }
    let ranked: Vec<Vec<Proposal>> = proposals
        .iter()
        .map(|props| {
            let mut v = props.clone();
            v.sort_by(|a, b| b.grade.total_cmp(&a.grade));
            v
        })
        .collect();
    let total: usize = ground_truth
        .iter()
        .map(|g| g.iter().filter(|s| s.complete).count())
        .sum();
    let ious = recall_ious();

    an_values
        .iter()
        .map(|&an| {
            if !(an.is_finite() && an >= 0.0) {
                return Err(Error::input(format!("invalid AN {an}")));
            }
            if total == 0 {
                return Ok((an, 0.0));
            }
            let budget = an.ceil() as usize;
            let mut recall_sum = 0.0;
            for &thr in &ious {
                let mut hit = 0usize;
                for (props, gts) in ranked.iter().zip(ground_truth) {
                    let kept = &props[..budget.min(props.len())];
                    hit += gts
                        .iter()
                        .filter(|g| g.complete)
                        .filter(|g| {
                            kept.iter()
                                .any(|p| segment_iou((p.start, p.end), (g.start, g.end)) >= thr)
                        })
                        .count();
                }
                recall_sum += hit as f64 / total as f64;
            }
            Ok((an, recall_sum / ious.len() as f64))
        })
        .collect()
}

/// Most likely class of every detection, for accuracy reporting.
pub fn predicted_classes(detections: &[Detection]) -> Vec<usize> {
    detections.iter().map(Detection::top_class).collect()
}
