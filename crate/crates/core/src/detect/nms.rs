use std::cmp::Ordering;

use crate::segment::segment_iou;

use super::Detection;

/// Grade descending, ties broken by `(start, end)` ascending.
pub(crate) fn rank_order(a: (usize, usize, f64), b: (usize, usize, f64)) -> Ordering {
    b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1))
}

/// Greedy suppression over `(start, end, grade)` triples already sorted by
/// [`rank_order`]. Returns the indices kept.
pub(crate) fn suppress_sorted(items: &[(usize, usize, f64)], iou_threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, &(s, e, _)) in items.iter().enumerate() {
        let overlapping = kept.iter().any(|&k| {
            let (ks, ke, _) = items[k];
            segment_iou((ks, ke), (s, e)) > iou_threshold
        });
        if !overlapping {
            kept.push(i);
        }
    }
    kept
}

/// Class-agnostic greedy NMS: repeatedly keep the highest-grade detection
/// and drop every remaining one whose IoU with it exceeds `iou_threshold`.
/// The result is sorted by grade, descending.
pub fn nms(mut detections: Vec<Detection>, iou_threshold: f64) -> Vec<Detection> {
    detections.sort_by(|a, b| rank_order(a.key(), b.key()));
    let keys: Vec<_> = detections.iter().map(Detection::key).collect();
    let keep = suppress_sorted(&keys, iou_threshold);
    let mut keep_iter = keep.into_iter().peekable();
    detections
        .into_iter()
        .enumerate()
        .filter_map(|(i, d)| {
            if keep_iter.peek() == Some(&i) {
                keep_iter.next();
                Some(d)
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(start: usize, end: usize, grade: f64) -> Detection {
        Detection {
            start,
            end,
            class_scores: vec![1.0],
            grade,
        }
    }

    #[test]
    fn identical_segments_keep_the_best() {
        let out = nms(vec![det(0, 100, 0.8), det(0, 100, 0.9)], 0.4);
        assert_eq!(out, vec![det(0, 100, 0.9)]);
    }

    #[test]
    fn disjoint_segments_all_kept() {
        let out = nms(
            vec![det(0, 10, 0.5), det(20, 30, 0.7), det(40, 50, 0.6)],
            0.0,
        );
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].grade, 0.7);
        assert_eq!(out[2].grade, 0.5);
    }

    #[test]
    fn one_third_overlap_survives_at_point_four() {
        // IoU([0,100], [50,150]) = 50 / 150
        let out = nms(vec![det(0, 100, 0.9), det(50, 150, 0.8)], 0.4);
        assert_eq!(out.len(), 2);
        let out = nms(vec![det(0, 100, 0.9), det(50, 150, 0.8)], 0.3);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn suppressed_boxes_do_not_suppress() {
        // b overlaps a heavily, c overlaps b but not a: c survives.
        let a = det(0, 100, 0.9);
        let b = det(30, 130, 0.8);
        let c = det(101, 200, 0.7);
        let out = nms(vec![c.clone(), b, a.clone()], 0.4);
        assert_eq!(out, vec![a, c]);
    }

    #[test]
    fn ties_break_by_position() {
        let out = nms(vec![det(5, 50, 0.5), det(0, 50, 0.5)], 0.4);
        assert_eq!(out, vec![det(0, 50, 0.5)]);
    }

    #[test]
    fn empty_input() {
        assert!(nms(Vec::new(), 0.4).is_empty());
    }
}
