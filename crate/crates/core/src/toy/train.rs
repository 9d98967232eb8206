use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::head::{Head, Standardizer};
use crate::codec::{
    compute_loss, decode, encode_target, DecodeMode, Method, OrdinalTarget, ProgressionConfig,
    Reduction,
};
use crate::error::{Error, Result};
use crate::eval::mae;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    /// Width of the tanh hidden layer; 0 trains a linear head.
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Samples per step; 0 means full batch.
    pub batch_size: usize,
    pub decode_mode: DecodeMode,
    pub reduction: Reduction,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Regression,
            hidden: 16,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 80,
            batch_size: 16,
            decode_mode: DecodeMode::Expectation,
            reduction: Reduction::Sum,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn progression_config(&self, ranks: u32) -> Result<ProgressionConfig> {
        Ok(ProgressionConfig::new(ranks, self.method)?
            .with_decode_mode(self.decode_mode)
            .with_reduction(self.reduction))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub head: Head,
    /// Mean training loss, entry 0 before the first epoch.
    pub loss_curve: Vec<f64>,
    /// Validation MAE (scaled to 100), entry 0 before the first epoch.
    pub mae_curve: Vec<f64>,
}

impl TrainOutcome {
    pub fn final_mae(&self) -> f64 {
        *self
            .mae_curve
            .last()
            .expect("curve holds the initial entry")
    }
}

/// Decoded progression of every row.
pub fn predict(head: &Head, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    features
        .iter()
        .map(|x| decode(&head.forward(x)?, head.config()))
        .collect()
}

/// Validation MAE of `head`, scaled to 100.
pub fn evaluate(head: &Head, data: &Dataset) -> Result<f64> {
    let pred = predict(head, &data.features)?;
    let labels: Vec<f64> = data.labels.iter().map(|&p| f64::from(p)).collect();
    mae(&pred, &labels, data.ranks)
}

fn check_dataset(data: &Dataset, what: &str) -> Result<usize> {
    let dim = data
        .features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::input(format!("{what} set is empty")))?;
    if data.features.len() != data.labels.len() {
        return Err(Error::LengthMismatch {
            left: data.features.len(),
            right: data.labels.len(),
        });
    }
    Ok(dim)
}

fn mean_loss(head: &Head, data: &Dataset, targets: &[OrdinalTarget]) -> Result<f64> {
    let mut total = 0.0;
    for (x, t) in data.features.iter().zip(targets) {
        total += compute_loss(&head.forward(x)?, t, head.config())?.loss;
    }
    Ok(total / data.len() as f64)
}

/// Gradient descent with momentum on the mean per-sample loss.
pub fn train(train: &Dataset, valid: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let dim = check_dataset(train, "training")?;
    check_dataset(valid, "validation")?;
    if valid.ranks != train.ranks {
        return Err(Error::input("training and validation K differ"));
    }
    let pc = config.progression_config(train.ranks)?;
    let targets = train
        .labels
        .iter()
        .map(|&p| encode_target(pc.label(p)?, &pc))
        .collect::<Result<Vec<_>>>()?;

    let mut init_rng = rng_from_seed(derive_seed(config.seed, 0));
    let mut head = Head::new(pc, dim, config.hidden, &mut init_rng)?;
    head.set_standardizer(Standardizer::fit(&train.features)?)?;

    let mut loss_curve = vec![mean_loss(&head, train, &targets)?];
    let mut mae_curve = vec![evaluate(&head, valid)?];

    let n = train.len();
    let batch = if config.batch_size == 0 {
        n
    } else {
        config.batch_size.min(n)
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng_from_seed(derive_seed(config.seed, 1));
    let mut velocity = vec![0.0; head.num_params()];
    let mut grad = vec![0.0; head.num_params()];

    for epoch in 1..=config.epochs {
        if batch < n {
            order.shuffle(&mut shuffle_rng);
        }
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (out, cache) = head.forward_cached(&train.features[i])?;
                let lo = compute_loss(&out, &targets[i], &pc)?;
                head.backward(&cache, &lo.gradient, scale, &mut grad);
            }
            for ((w, v), g) in head.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g;
                *w += *v;
            }
            if head.params().iter().any(|w| !w.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
        }
        let loss = mean_loss(&head, train, &targets)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_curve.push(loss);
        mae_curve.push(evaluate(&head, valid)?);
    }
    Ok(TrainOutcome {
        head,
        loss_curve,
        mae_curve,
    })
}
