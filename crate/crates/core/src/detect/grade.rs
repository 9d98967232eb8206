use crate::error::{Error, Result};

/// Value at position `i` of the `len`-point linear ramp from 0 to K.
#[inline]
pub(crate) fn template_value(i: usize, len: usize, ranks: f64) -> f64 {
    ranks * i as f64 / (len - 1) as f64
}

/// The ideal progression profile of a complete action spanning `len` frames:
/// `len` points linearly spaced from 0 to K inclusive.
pub fn make_template(len: usize, ranks: u32) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::input(format!(
            "template length must be at least 2, got {len}"
        )));
    }
    let k = f64::from(ranks);
    Ok((0..len).map(|i| template_value(i, len, k)).collect())
}

/// Mean squared error between two independent uniform variables on `[0, K]`.
pub fn grade_normalizer(ranks: u32) -> f64 {
    let k = f64::from(ranks);
    k * k / 6.0
}

/// `1 - MSE(profile, template) / (K²/6)`.
///
/// 1 for a perfect match, about 0 for an unrelated uniform-random profile,
/// negative for anything worse.
pub fn grade(profile: &[f64], template: &[f64], ranks: u32) -> Result<f64> {
    if profile.len() != template.len() {
        return Err(Error::LengthMismatch {
            left: profile.len(),
            right: template.len(),
        });
    }
    if profile.is_empty() {
        return Err(Error::input("cannot grade an empty profile"));
    }
    let sse: f64 = profile
        .iter()
        .zip(template)
        .map(|(p, t)| (p - t) * (p - t))
        .fold(0.0, |acc, sq| acc + sq);
    Ok(1.0 - (sse / profile.len() as f64) / grade_normalizer(ranks))
}

/// [`grade`] against `make_template(profile.len(), K)` without allocating the
/// template. Bit-identical to the two-step computation.
pub(crate) fn grade_ramp(profile: &[f64], ranks: u32) -> f64 {
    let len = profile.len();
    let k = f64::from(ranks);
    let sse = profile
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = p - template_value(i, len, k);
            d * d
        })
        .fold(0.0, |acc, sq| acc + sq);
    1.0 - (sse / len as f64) / grade_normalizer(ranks)
}

/// Prefix sums that give the ramp grade of any window in O(1), up to
/// floating-point cancellation.
pub(crate) struct RampGrader {
    ranks: f64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    sum_idx: Vec<f64>,
}

impl RampGrader {
    pub(crate) fn new(values: &[f64], ranks: u32) -> Self {
        let n = values.len();
        let mut sum = Vec::with_capacity(n + 1);
        let mut sum_sq = Vec::with_capacity(n + 1);
        let mut sum_idx = Vec::with_capacity(n + 1);
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        sum.push(a);
        sum_sq.push(b);
        sum_idx.push(c);
        for (t, &v) in values.iter().enumerate() {
            a += v;
            b += v * v;
            c += t as f64 * v;
            sum.push(a);
            sum_sq.push(b);
            sum_idx.push(c);
        }
        Self {
            ranks: f64::from(ranks),
            sum,
            sum_sq,
            sum_idx,
        }
    }

    /// Approximate grade of the window `[start, end]`, `end > start`.
    pub(crate) fn approx_grade(&self, start: usize, end: usize) -> f64 {
        let len = (end - start + 1) as f64;
        let m = len - 1.0;
        let k = self.ranks;
        let s = self.sum[end + 1] - self.sum[start];
        let sq = self.sum_sq[end + 1] - self.sum_sq[start];
        // Σ (τ - start) p_τ
        let weighted = (self.sum_idx[end + 1] - self.sum_idx[start]) - start as f64 * s;
        // Σ_{i=0}^{m} (K i / m)² = K² (m + 1)(2m + 1) / (6 m)
        let template_sq = k * k * (m + 1.0) * (2.0 * m + 1.0) / (6.0 * m);
        let sse = sq - 2.0 * k / m * weighted + template_sq;
        1.0 - (sse / len) / (k * k / 6.0)
    }
}
