use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Stand-in for backbone features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticFeatureSpec {
    pub dim: usize,
    pub embed_seed: u64,
    pub noise_sigma: f64,
}

impl Default for SyntheticFeatureSpec {
    fn default() -> Self {
        Self {
            dim: 16,
            embed_seed: 0,
            noise_sigma: 0.0,
        }
    }
}

/// Fixed random affine map of `(p / K, one-hot class)` into `dim`
/// dimensions, plus isotropic Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEmbedding {
    spec: SyntheticFeatureSpec,
    ranks: u32,
    num_classes: usize,
    /// Column 0 multiplies `p / K`; column `1 + c` is the class-`c` offset.
    columns: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl FeatureEmbedding {
    pub fn new(spec: SyntheticFeatureSpec, ranks: u32, num_classes: usize) -> Result<Self> {
        if spec.dim < 2 {
            return Err(Error::config("feature dimension must be at least 2"));
        }
        if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
            return Err(Error::config(
                "feature noise must be finite and non-negative",
            ));
        }
        if ranks < 1 || num_classes < 1 {
            return Err(Error::config("need K >= 1 and at least one class"));
        }
        let mut rng = rng_from_seed(spec.embed_seed);
        let mut gaussian = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let mut columns = Vec::with_capacity(num_classes + 1);
        // progression direction: unit norm times sqrt(dim), never zero
        let mut dir = gaussian(spec.dim);
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = (spec.dim as f64).sqrt() / norm.max(f64::MIN_POSITIVE);
        dir.iter_mut().for_each(|v| *v *= scale);
        columns.push(dir);
        for _ in 0..num_classes {
            columns.push(gaussian(spec.dim).into_iter().map(|v| 0.5 * v).collect());
        }
        let bias = gaussian(spec.dim);
        Ok(Self {
            spec,
            ranks,
            num_classes,
            columns,
            bias,
        })
    }

    pub fn spec(&self) -> &SyntheticFeatureSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Feature vector of a frame at progression `p` (any real in `[0, K]`)
    /// of class `class`. `rng` only supplies the noise.
    pub fn embed(&self, p: f64, class: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let k = f64::from(self.ranks);
        if !(0.0..=k).contains(&p) {
            return Err(Error::input(format!("progression {p} outside [0, {k}]")));
        }
        if class >= self.num_classes {
            return Err(Error::input(format!("class {class} out of range")));
        }
        let x = p / k;
        Ok((0..self.spec.dim)
            .map(|d| {
                let clean = self.bias[d] + self.columns[0][d] * x + self.columns[1 + class][d];
                if self.spec.noise_sigma > 0.0 {
                    clean + self.spec.noise_sigma * rng.sample::<f64, _>(StandardNormal)
                } else {
                    clean
                }
            })
            .collect())
    }
}

/// One-shot [`FeatureEmbedding::embed`].
pub fn make_features(
    p: u32,
    class: usize,
    ranks: u32,
    num_classes: usize,
    spec: &SyntheticFeatureSpec,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    FeatureEmbedding::new(*spec, ranks, num_classes)?.embed(f64::from(p), class, rng)
}

/// Labelled action frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ranks: u32,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub classes: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `count` frames with labels and classes drawn uniformly.
    pub fn sample(embedding: &FeatureEmbedding, count: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut features = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        let mut classes = Vec::with_capacity(count);
        for _ in 0..count {
            let p = rng.gen_range(0..=embedding.ranks);
            let c = rng.gen_range(0..embedding.num_classes);
            features.push(embedding.embed(f64::from(p), c, &mut rng)?);
            labels.push(p);
            classes.push(c);
        }
        Ok(Self {
            ranks: embedding.ranks,
            features,
            labels,
            classes,
        })
    }
}
