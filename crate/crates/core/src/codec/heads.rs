use crate::error::{Error, Result};
use crate::math::{logsumexp, sigmoid, softmax, softplus};

use super::{
    DecodeMode, HeadOutput, Method, OrdinalTarget, ProgressionConfig, ProgressionLabel, Reduction,
};

/// Logit magnitude used by [`ideal_output`]; large enough that every
/// softmax/sigmoid saturates to exactly 0 or 1 in f64.
const SATURATION: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// Derivative of `loss` with respect to every raw output value.
    pub gradient: HeadOutput,
}

/// Soft label over ranks `0..=K`: `q_j ∝ exp(-sqrt|j - p|)`.
pub fn soft_label(p: u32, ranks: u32) -> Vec<f64> {
    let weights: Vec<f64> = (0..=ranks)
        .map(|j| (-(f64::from(j.abs_diff(p))).sqrt()).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn cumulative(p: u32, ranks: u32) -> Vec<bool> {
    (1..=ranks).map(|j| p >= j).collect()
}

pub fn encode_target(p: ProgressionLabel, config: &ProgressionConfig) -> Result<OrdinalTarget> {
    let k = config.ranks;
    let p = p.value();
    if p > k {
        return Err(Error::LabelOutOfRange { value: p, ranks: k });
    }
    Ok(match config.method {
        Method::Regression => OrdinalTarget::Regression(f64::from(p) / f64::from(k)),
        Method::NominalClassification => OrdinalTarget::Nominal(p as usize),
        Method::CostSensitive => OrdinalTarget::Soft(soft_label(p, k)),
        Method::BinaryDecomposition | Method::ThresholdModel => {
            OrdinalTarget::Cumulative(cumulative(p, k))
        }
    })
}

fn check_output(output: &HeadOutput, config: &ProgressionConfig) -> Result<()> {
    let expected = config.output_len();
    let ok = match (config.method, output) {
        (Method::Regression, HeadOutput::Scalar(_)) => true,
        (
            Method::NominalClassification | Method::CostSensitive | Method::ThresholdModel,
            HeadOutput::Logits(v),
        ) => v.len() == expected,
        (Method::BinaryDecomposition, HeadOutput::PairLogits(v)) => 2 * v.len() == expected,
        _ => false,
    };
    if !ok {
        return Err(Error::shape(
            format!("{expected} outputs for {}", config.method),
            describe(output),
        ));
    }
    if !output.is_finite() {
        return Err(Error::input("head output contains non-finite values"));
    }
    Ok(())
}

fn describe(output: &HeadOutput) -> String {
    match output {
        HeadOutput::Scalar(_) => "scalar".into(),
        HeadOutput::Logits(v) => format!("{} logits", v.len()),
        HeadOutput::PairLogits(v) => format!("{}x2 logits", v.len()),
    }
}

fn target_mismatch(target: &OrdinalTarget, config: &ProgressionConfig) -> Error {
    Error::shape(
        format!("target for {}", config.method),
        format!("{target:?}"),
    )
}

/// Loss of `output` against `target` and its exact gradient.
///
/// * regression: `|clamp(o, 0, 1) - p/K|`, zero gradient outside `(0, 1)`
/// * nominal: cross-entropy of `softmax(o)` at `p`
/// * cost-sensitive: `KL(q || softmax(o))`
/// * binary decomposition: per-rank two-way cross-entropy
/// * threshold model: per-rank binary cross-entropy on `sigmoid(o_j)`
///
/// The last two are summed over ranks unless `config.reduction` is `Mean`.
pub fn compute_loss(
    output: &HeadOutput,
    target: &OrdinalTarget,
    config: &ProgressionConfig,
) -> Result<LossOutput> {
    check_output(output, config)?;
    let k = config.ranks as usize;
    let scale = match config.reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / k as f64,
    };

    match (config.method, output, target) {
        (Method::Regression, HeadOutput::Scalar(o), OrdinalTarget::Regression(y)) => {
            let g = o.clamp(0.0, 1.0);
            let diff = g - y;
            let grad = if *o > 0.0 && *o < 1.0 {
                if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            } else {
                0.0
            };
            Ok(LossOutput {
                loss: diff.abs(),
                gradient: HeadOutput::Scalar(grad),
            })
        }
        (Method::NominalClassification, HeadOutput::Logits(o), OrdinalTarget::Nominal(p)) => {
            if *p > k {
                return Err(target_mismatch(target, config));
            }
            let lse = logsumexp(o);
            let mut grad = softmax(o);
            grad[*p] -= 1.0;
            Ok(LossOutput {
                loss: (lse - o[*p]).max(0.0),
                gradient: HeadOutput::Logits(grad),
            })
        }
        (Method::CostSensitive, HeadOutput::Logits(o), OrdinalTarget::Soft(q)) => {
            if q.len() != k + 1 {
                return Err(target_mismatch(target, config));
            }
            // KL(q || s) = Σ q log q − Σ q o + logsumexp(o), using Σ q = 1
            let lse = logsumexp(o);
            let loss: f64 = q
                .iter()
                .zip(o)
                .filter(|(&qj, _)| qj > 0.0)
                .map(|(&qj, &oj)| qj * (qj.ln() - (oj - lse)))
                .sum();
            let grad = softmax(o)
                .into_iter()
                .zip(q)
                .map(|(s, qj)| s - qj)
                .collect();
            Ok(LossOutput {
                loss: loss.max(0.0),
                gradient: HeadOutput::Logits(grad),
            })
        }
        (Method::BinaryDecomposition, HeadOutput::PairLogits(o), OrdinalTarget::Cumulative(t)) => {
            if t.len() != k {
                return Err(target_mismatch(target, config));
            }
            let mut loss = 0.0;
            let mut grad = Vec::with_capacity(k);
            for (pair, &yes) in o.iter().zip(t) {
                let (hit, miss) = if yes { (0, 1) } else { (1, 0) };
                // −log softmax(pair)[hit] = softplus(pair[miss] − pair[hit])
                let margin = pair[miss] - pair[hit];
                loss += softplus(margin);
                let s_miss = sigmoid(margin);
                let mut g = [0.0; 2];
                g[hit] = -s_miss * scale;
                g[miss] = s_miss * scale;
                grad.push(g);
            }
            Ok(LossOutput {
                loss: loss * scale,
                gradient: HeadOutput::PairLogits(grad),
            })
        }
        (Method::ThresholdModel, HeadOutput::Logits(o), OrdinalTarget::Cumulative(t)) => {
            if t.len() != k {
                return Err(target_mismatch(target, config));
            }
            let mut loss = 0.0;
            let mut grad = Vec::with_capacity(k);
            for (&oj, &yes) in o.iter().zip(t) {
                let y = if yes { 1.0 } else { 0.0 };
                // −y log σ(o) − (1 − y) log(1 − σ(o))
                loss += if yes { softplus(-oj) } else { softplus(oj) };
                grad.push((sigmoid(oj) - y) * scale);
            }
            Ok(LossOutput {
                loss: loss * scale,
                gradient: HeadOutput::Logits(grad),
            })
        }
        _ => Err(target_mismatch(target, config)),
    }
}

/// Predicted progression in `[0, K]`.
pub fn decode(output: &HeadOutput, config: &ProgressionConfig) -> Result<f64> {
    check_output(output, config)?;
    let k = f64::from(config.ranks);
    let value = match output {
        HeadOutput::Scalar(o) => regression_value(*o, k),
        HeadOutput::Logits(o) => match config.method {
            Method::ThresholdModel => o.iter().filter(|&&v| v >= 0.0).count() as f64,
            _ => match config.decode_mode {
                DecodeMode::ArgMax => argmax(o) as f64,
                DecodeMode::Expectation => softmax(o)
                    .into_iter()
                    .enumerate()
                    .map(|(j, s)| j as f64 * s)
                    .sum(),
            },
        },
        // softmax(pair)[0] >= 0.5 exactly when pair[0] >= pair[1]
        HeadOutput::PairLogits(o) => o.iter().filter(|pair| pair[0] >= pair[1]).count() as f64,
    };
    Ok(value.clamp(0.0, k))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Saturating output that decodes to exactly `p`.
///
/// Classification heads put a logit of 1000 on the target rank (or on the
/// matching side of every binary decision); the regression head outputs `p / K`.
pub fn ideal_output(p: ProgressionLabel, config: &ProgressionConfig) -> Result<HeadOutput> {
    let k = config.ranks;
    let p = p.value();
    if p > k {
        return Err(Error::LabelOutOfRange { value: p, ranks: k });
    }
    Ok(match config.method {
        Method::Regression => HeadOutput::Scalar(f64::from(p) / f64::from(k)),
        Method::NominalClassification | Method::CostSensitive => {
            let mut logits = vec![0.0; k as usize + 1];
            logits[p as usize] = SATURATION;
            HeadOutput::Logits(logits)
        }
        Method::BinaryDecomposition => HeadOutput::PairLogits(
            cumulative(p, k)
                .into_iter()
                .map(|yes| {
                    if yes {
                        [SATURATION, 0.0]
                    } else {
                        [0.0, SATURATION]
                    }
                })
                .collect(),
        ),
        Method::ThresholdModel => HeadOutput::Logits(
            cumulative(p, k)
                .into_iter()
                .map(|yes| if yes { SATURATION } else { -SATURATION })
                .collect(),
        ),
    })
}

/// `K · clamp(o, 0, 1)`, snapped to the nearest integer when within a few
/// ulps of it. `p / K` has no f64 representation whose product with K is
/// exactly `p` for some ranks (e.g. p = 7, K = 100).
fn regression_value(o: f64, ranks: f64) -> f64 {
    let v = ranks * o.clamp(0.0, 1.0);
    let r = v.round();
    if (v - r).abs() <= 4.0 * f64::EPSILON * ranks {
        r
    } else {
        v
    }
}
