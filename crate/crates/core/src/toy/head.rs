use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{HeadOutput, Method, ProgressionConfig};
use crate::error::{Error, Result};

/// Per-feature affine normalization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::input("no training rows"))?;
        let dim = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            if r.len() != dim {
                return Err(Error::shape(dim, r.len()));
            }
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            var.iter_mut()
                .zip(r.iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m) / n);
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-24 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) * s)
            .collect()
    }
}

/// Parameter layout of a [`Head`], all in one flat vector.
///
/// Hidden layer (if any): `w1` is `hidden × input` row-major, then `b1`.
/// Output layer: dense `w2` (`outputs × width`) then `b2`, or for the
/// threshold model one shared weight row of `width` then `K` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Layout {
    input: usize,
    hidden: usize,
    outputs: usize,
    shared: bool,
}

impl Layout {
    fn width(&self) -> usize {
        if self.hidden > 0 {
            self.hidden
        } else {
            self.input
        }
    }

    fn w1_len(&self) -> usize {
        self.hidden * self.input
    }

    fn out_offset(&self) -> usize {
        self.w1_len() + self.hidden
    }

    fn out_rows(&self) -> usize {
        if self.shared {
            1
        } else {
            self.outputs
        }
    }

    fn bias_offset(&self) -> usize {
        self.out_offset() + self.out_rows() * self.width()
    }

    fn len(&self) -> usize {
        self.bias_offset() + self.outputs
    }
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct Cache {
    input: Vec<f64>,
    hidden: Vec<f64>,
}

/// A linear or one-hidden-layer (tanh) progression head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    config: ProgressionConfig,
    layout: Layout,
    standardizer: Standardizer,
    params: Vec<f64>,
}

impl Head {
    /// Weights uniform in `±1/sqrt(fan_in)` and biases zero. The regression
    /// output starts at mid-range with weights scaled down by 10, inside
    /// the unclamped region.
    pub fn new(
        config: ProgressionConfig,
        input: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        config.validate()?;
        if input == 0 {
            return Err(Error::config("input dimension must be positive"));
        }
        let layout = Layout {
            input,
            hidden,
            outputs: config.output_len(),
            shared: config.method == Method::ThresholdModel,
        };
        let mut params = vec![0.0; layout.len()];
        let a1 = 1.0 / (input as f64).sqrt();
        for w in &mut params[..layout.w1_len()] {
            *w = rng.gen_range(-a1..=a1);
        }
        let mut a2 = 1.0 / (layout.width() as f64).sqrt();
        if config.method == Method::Regression {
            a2 *= 0.1;
        }
        for w in &mut params[layout.out_offset()..layout.bias_offset()] {
            *w = rng.gen_range(-a2..=a2);
        }
        if config.method == Method::Regression {
            params[layout.bias_offset()] = 0.5;
        }
        Ok(Self {
            config,
            layout,
            standardizer: Standardizer::identity(input),
            params,
        })
    }

    pub fn config(&self) -> &ProgressionConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn set_standardizer(&mut self, s: Standardizer) -> Result<()> {
        if s.mean.len() != self.layout.input || s.scale.len() != self.layout.input {
            return Err(Error::shape(self.layout.input, s.mean.len()));
        }
        self.standardizer = s;
        Ok(())
    }

    /// Raw head output for one (unstandardized) feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<HeadOutput> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(HeadOutput, Cache)> {
        let l = self.layout;
        if x.len() != l.input {
            return Err(Error::shape(l.input, x.len()));
        }
        let input = self.standardizer.apply(x);
        let hidden: Vec<f64> = (0..l.hidden)
            .map(|h| {
                let row = &self.params[h * l.input..(h + 1) * l.input];
                let pre = self.params[l.w1_len() + h] + dot(row, &input);
                pre.tanh()
            })
            .collect();
        let act = if l.hidden > 0 { &hidden } else { &input };
        let w = l.width();
        let out = &self.params[l.out_offset()..l.bias_offset()];
        let bias = &self.params[l.bias_offset()..];
        let flat: Vec<f64> = if l.shared {
            let s = dot(out, act);
            bias.iter().map(|b| s + b).collect()
        } else {
            (0..l.outputs)
                .map(|o| bias[o] + dot(&out[o * w..(o + 1) * w], act))
                .collect()
        };
        let output = HeadOutput::from_flat(&self.config, &flat)?;
        Ok((output, Cache { input, hidden }))
    }

    /// Accumulate `scale · ∂loss/∂params` into `grad`, given the loss
    /// gradient with respect to the head output.
    pub fn backward(&self, cache: &Cache, grad_out: &HeadOutput, scale: f64, grad: &mut [f64]) {
        let l = self.layout;
        let g = grad_out.as_slice();
        let w = l.width();
        let act = if l.hidden > 0 {
            &cache.hidden
        } else {
            &cache.input
        };
        let out_off = l.out_offset();
        let bias_off = l.bias_offset();
        let mut g_act = vec![0.0; w];
        if l.shared {
            let gs: f64 = g.iter().sum::<f64>() * scale;
            for i in 0..w {
                grad[out_off + i] += gs * act[i];
                g_act[i] = gs * self.params[out_off + i];
            }
        } else {
            for (o, &go) in g.iter().enumerate() {
                let go = go * scale;
                if go == 0.0 {
                    continue;
                }
                let row = out_off + o * w;
                for i in 0..w {
                    grad[row + i] += go * act[i];
                    g_act[i] += go * self.params[row + i];
                }
            }
        }
        for (o, &go) in g.iter().enumerate() {
            grad[bias_off + o] += go * scale;
        }
        if l.hidden == 0 {
            return;
        }
        for h in 0..l.hidden {
            let gp = g_act[h] * (1.0 - cache.hidden[h] * cache.hidden[h]);
            if gp == 0.0 {
                continue;
            }
            let row = h * l.input;
            for i in 0..l.input {
                grad[row + i] += gp * cache.input[i];
            }
            grad[l.w1_len() + h] += gp;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{compute_loss, encode_target, ProgressionLabel};
    use crate::seed::rng_from_seed;

    fn loss_at(head: &Head, x: &[f64], p: u32) -> f64 {
        let cfg = head.config();
        let t = encode_target(ProgressionLabel::new(p, cfg.ranks).unwrap(), cfg).unwrap();
        compute_loss(&head.forward(x).unwrap(), &t, cfg)
            .unwrap()
            .loss
    }

    #[test]
    fn parameter_gradient_matches_differences() {
        for method in Method::ALL {
            for hidden in [0, 5] {
                let cfg = ProgressionConfig::new(7, method).unwrap();
                let mut rng = rng_from_seed(11);
                let mut head = Head::new(cfg, 4, hidden, &mut rng).unwrap();
                for w in head.params_mut() {
                    *w += rng.gen_range(-0.3..0.3);
                }
                let x = [0.3, -1.2, 0.8, 0.1];
                let p = 3;
                let (out, cache) = head.forward_cached(&x).unwrap();
                let t = encode_target(ProgressionLabel::new(p, 7).unwrap(), &cfg).unwrap();
                let lo = compute_loss(&out, &t, &cfg).unwrap();
                let mut grad = vec![0.0; head.num_params()];
                head.backward(&cache, &lo.gradient, 1.0, &mut grad);
                let h = 1e-6;
                for (i, &g) in grad.iter().enumerate() {
                    let orig = head.params()[i];
                    head.params_mut()[i] = orig + h;
                    let up = loss_at(&head, &x, p);
                    head.params_mut()[i] = orig - h;
                    let down = loss_at(&head, &x, p);
                    head.params_mut()[i] = orig;
                    let fd = (up - down) / (2.0 * h);
                    assert!(
                        (fd - g).abs() <= 1e-5 * (1.0 + fd.abs()),
                        "{method} hidden={hidden} param {i}: {fd} vs {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn threshold_head_shares_weights() {
        let cfg = ProgressionConfig::new(5, Method::ThresholdModel).unwrap();
        let head = Head::new(cfg, 3, 0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(head.num_params(), 3 + 5);
        let dense = ProgressionConfig::new(5, Method::NominalClassification).unwrap();
        let head = Head::new(dense, 3, 2, &mut rng_from_seed(0)).unwrap();
        assert_eq!(head.num_params(), 2 * 3 + 2 + 6 * 2 + 6);
    }

    #[test]
    fn standardizer_fits_unit_variance() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 0.0]);
        assert_eq!(s.apply(&[3.0, 5.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_wrong_input_length() {
        let cfg = ProgressionConfig::new(5, Method::NominalClassification).unwrap();
        let head = Head::new(cfg, 3, 0, &mut rng_from_seed(0)).unwrap();
        assert!(head.forward(&[1.0, 2.0]).is_err());
    }
}
