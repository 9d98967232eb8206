use crate::error::{Error, Result};
use crate::segment::ActionSegment;

use super::{InputVolumeSpec, ProgressionLabel};

/// Labels for the frames `τ = 1..=len` of an action:
/// `p_τ = round(K·τ / len)`, halves rounded up. The last frame always gets K.
///
/// Computed in integer arithmetic, so no label depends on float rounding.
/// When `len < K` some ranks are skipped.
pub fn progression_labels(len: usize, ranks: u32) -> Result<Vec<ProgressionLabel>> {
    if len == 0 {
        return Err(Error::EmptySegment);
    }
    let k = u64::from(ranks);
    let l = len as u64;
    Ok((1..=l)
        .map(|tau| ProgressionLabel(((2 * k * tau + l) / (2 * l)) as u32))
        .collect())
}

/// `(video frame index, label)` for every frame of `segment`.
pub fn generate_labels(
    segment: &ActionSegment,
    ranks: u32,
) -> Result<Vec<(usize, ProgressionLabel)>> {
    let len = segment.num_frames()?;
    let labels = progression_labels(len, ranks)?;
    Ok((segment.start..).zip(labels).collect())
}

/// Frame indices of the input volume centered on `center`:
/// `center - (L/2 - 1)·d, …, center, …, center + (L/2)·d`, clamped to
/// `[0, total_frames - 1]`.
pub fn volume_indices(center: usize, spec: &InputVolumeSpec, total_frames: usize) -> Vec<usize> {
    let half = (spec.num_frames / 2) as i64;
    let stride = spec.stride as i64;
    let last = total_frames.saturating_sub(1) as i64;
    ((1 - half)..=half)
        .map(|offset| (center as i64 + offset * stride).clamp(0, last) as usize)
        .collect()
}
