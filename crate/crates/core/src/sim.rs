//! Synthetic untrimmed videos: a ground-truth layout plus the progression
//! sequence and class scores a trained network would be expected to emit.
//!
//! Each part of an instance draws from its own stream derived from the
//! master seed (layout, progression noise, background, class scores). Two
//! configurations that differ only in noise level or K therefore share the
//! same layout and the same underlying random draws.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detect::{make_template, ClassScoreMatrix, ProgressionSequence};
use crate::error::{Error, Result};
use crate::math::softmax;
use crate::seed::{derive_seed, rng_from_seed};
use crate::segment::ActionSegment;

const STREAM_LAYOUT: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_BACKGROUND: u64 = 2;
const STREAM_CLASSES: u64 = 3;

const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Progression emitted on frames outside every action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundModel {
    /// Independent uniform draws on `[0, K]`.
    #[default]
    UniformRandom,
    /// Constant `K / 2`.
    ConstantMid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub num_frames: usize,
    pub ranks: u32,
    pub num_classes: usize,
    /// Actions planted per video, complete and incomplete together.
    pub num_actions: usize,
    /// Share of the planted actions that stop before completion.
    pub incomplete_fraction: f64,
    /// Fraction of the evolution an incomplete action reaches, drawn
    /// uniformly from this range.
    pub truncation_range: (f64, f64),
    /// Standard deviation of the Gaussian progression noise, in ranks.
    pub progression_noise_sigma: f64,
    pub background: BackgroundModel,
    pub class_score_temperature: f64,
    /// Standard deviation of the Gaussian noise added to class logits.
    pub class_score_noise: f64,
    pub min_action_len: usize,
    pub max_action_len: usize,
    /// Background frames required between neighbouring actions.
    pub min_gap: usize,
    /// Round every progression to an integer rank, as counting decoders do.
    pub quantize: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_frames: 2000,
            ranks: 100,
            num_classes: 3,
            num_actions: 6,
            incomplete_fraction: 0.0,
            truncation_range: (0.5, 0.7),
            progression_noise_sigma: 0.0,
            background: BackgroundModel::UniformRandom,
            class_score_temperature: 0.5,
            class_score_noise: 0.3,
            min_action_len: 80,
            max_action_len: 200,
            min_gap: 0,
            quantize: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn num_incomplete(&self) -> usize {
        (self.num_actions as f64 * self.incomplete_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(msg.to_string()));
        if self.ranks < 1 {
            return bad("K must be at least 1");
        }
        if self.num_classes < 1 {
            return bad("need at least one class");
        }
        if self.num_frames < 1 {
            return bad("need at least one frame");
        }
        if !(0.0..=1.0).contains(&self.incomplete_fraction) {
            return bad("incomplete_fraction must lie in [0, 1]");
        }
        let (lo, hi) = self.truncation_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return bad("truncation_range must satisfy 0 < lo <= hi < 1");
        }
        if !(self.progression_noise_sigma >= 0.0 && self.progression_noise_sigma.is_finite()) {
            return bad("progression noise sigma must be finite and non-negative");
        }
        if !(self.class_score_noise >= 0.0 && self.class_score_noise.is_finite()) {
            return bad("class score noise must be finite and non-negative");
        }
        if !(self.class_score_temperature > 0.0 && self.class_score_temperature.is_finite()) {
            return bad("class score temperature must be positive");
        }
        if self.min_action_len < 2 || self.min_action_len > self.max_action_len {
            return bad("action lengths must satisfy 2 <= min <= max");
        }
        Ok(())
    }
}

/// One synthetic video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimInstance {
    pub config: SimConfig,
    /// Planted actions sorted by start frame.
    pub ground_truth: Vec<ActionSegment>,
    pub seq: ProgressionSequence,
    pub scores: ClassScoreMatrix,
    /// Progression before noise and quantization.
    pub clean: Vec<f64>,
}

impl SimInstance {
    pub fn complete_segments(&self) -> impl Iterator<Item = &ActionSegment> {
        self.ground_truth.iter().filter(|s| s.complete)
    }

    pub fn incomplete_segments(&self) -> impl Iterator<Item = &ActionSegment> {
        self.ground_truth.iter().filter(|s| !s.complete)
    }
}

fn place_actions(config: &SimConfig, rng: &mut impl Rng) -> Result<Vec<(ActionSegment, f64)>> {
    let t = config.num_frames;
    let gap = config.min_gap;
    let min_total =
        config.num_actions * config.min_action_len + config.num_actions.saturating_sub(1) * gap;
    if min_total > t {
        return Err(Error::LayoutInfeasible(format!(
            "{} actions of at least {} frames with gaps of {gap} do not fit in {t} frames",
            config.num_actions, config.min_action_len
        )));
    }
    let max_len = config.max_action_len.min(t);
    let incomplete = config.num_incomplete();
    let (lo, hi) = config.truncation_range;
    let mut placed: Vec<(ActionSegment, f64)> = Vec::with_capacity(config.num_actions);

    for i in 0..config.num_actions {
        let complete = i >= incomplete;
        let class = rng.gen_range(0..config.num_classes);
        let reach = if complete {
            1.0
        } else {
            rng.gen_range(lo..=hi)
        };
        let mut found = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let len = rng.gen_range(config.min_action_len..=max_len);
            let start = rng.gen_range(0..=t - len);
            let seg = ActionSegment::new(start, start + len - 1, class, complete);
            if placed
                .iter()
                .all(|(p, _)| p.end + gap < seg.start || seg.end + gap < p.start)
            {
                found = Some(seg);
                break;
            }
        }
        let seg = found.ok_or_else(|| {
            Error::LayoutInfeasible(format!(
                "could not place action {} of {} in {t} frames",
                i + 1,
                config.num_actions
            ))
        })?;
        placed.push((seg, reach));
    }
    placed.sort_by_key(|(s, _)| s.start);
    Ok(placed)
}

/// Generate one video. Deterministic in `config`.
pub fn simulate(config: &SimConfig) -> Result<SimInstance> {
    config.validate()?;
    let t = config.num_frames;
    let k = f64::from(config.ranks);
    let mut layout_rng = rng_from_seed(derive_seed(config.seed, STREAM_LAYOUT));
    let mut noise_rng = rng_from_seed(derive_seed(config.seed, STREAM_NOISE));
    let mut background_rng = rng_from_seed(derive_seed(config.seed, STREAM_BACKGROUND));
    let mut class_rng = rng_from_seed(derive_seed(config.seed, STREAM_CLASSES));

    let placed = place_actions(config, &mut layout_rng)?;

    // Every frame consumes one draw from each stream whether or not it is
    // used, so the draws at a frame never depend on the layout.
    let unit: Vec<f64> = (0..t).map(|_| background_rng.gen::<f64>()).collect();
    let noise: Vec<f64> = (0..t).map(|_| noise_rng.sample(StandardNormal)).collect();

    let mut clean: Vec<f64> = match config.background {
        BackgroundModel::UniformRandom => unit.iter().map(|u| u * k).collect(),
        BackgroundModel::ConstantMid => vec![k / 2.0; t],
    };
    let mut in_action = vec![false; t];
    let mut frame_class: Vec<Option<usize>> = vec![None; t];
    for (seg, reach) in &placed {
        let len = seg.end - seg.start + 1;
        let ramp = make_template(len, config.ranks)?;
        for (i, r) in ramp.into_iter().enumerate() {
            clean[seg.start + i] = if seg.complete { r } else { reach * r };
            in_action[seg.start + i] = true;
            frame_class[seg.start + i] = Some(seg.class);
        }
    }

    let values: Vec<f64> = (0..t)
        .map(|i| {
            let mut v = clean[i];
            if in_action[i] {
                v = (v + config.progression_noise_sigma * noise[i]).clamp(0.0, k);
            }
            if config.quantize {
                v = v.round();
            }
            v
        })
        .collect();

    let c = config.num_classes;
    let mut scores = Vec::with_capacity(t * c);
    let mut logits = vec![0.0; c];
    for class in &frame_class {
        for (j, l) in logits.iter_mut().enumerate() {
            let base = if Some(j) == *class {
                1.0 / config.class_score_temperature
            } else {
                0.0
            };
            let n: f64 = class_rng.sample(StandardNormal);
            *l = base + config.class_score_noise * n;
        }
        scores.extend(softmax(&logits));
    }

    Ok(SimInstance {
        config: config.clone(),
        ground_truth: placed.into_iter().map(|(s, _)| s).collect(),
        seq: ProgressionSequence::new(values, config.ranks)?,
        scores: ClassScoreMatrix::new(scores, c)?,
        clean,
    })
}

/// Configuration of video `index` in a dataset seeded by `config.seed`.
pub fn video_config(config: &SimConfig, index: usize) -> SimConfig {
    SimConfig {
        seed: derive_seed(config.seed, 1 << 32 | index as u64),
        ..config.clone()
    }
}

/// `count` videos with per-video derived seeds. Generation order does not
/// affect the result.
pub fn simulate_dataset(config: &SimConfig, count: usize) -> Result<Vec<SimInstance>> {
    let configs: Vec<SimConfig> = (0..count).map(|i| video_config(config, i)).collect();
    simulate_all(&configs)
}

/// [`simulate`] every configuration, in parallel when enabled.
pub fn simulate_all(configs: &[SimConfig]) -> Result<Vec<SimInstance>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        configs.par_iter().map(simulate).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        configs.iter().map(simulate).collect()
    }
}

/// Axes of a simulation sweep. The grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub base: SimConfig,
    pub ranks: Vec<u32>,
    pub noise_sigmas: Vec<f64>,
    pub replicates: usize,
}

impl SweepGrid {
    /// A single-cell grid around `base`.
    pub fn singleton(base: SimConfig) -> Self {
        Self {
            ranks: vec![base.ranks],
            noise_sigmas: vec![base.progression_noise_sigma],
            replicates: 1,
            base,
        }
    }

    /// Cell configurations in `ranks`-major order. Cell 0 keeps the base
    /// seed; cell `i > 0` uses `derive_seed(base.seed, i)`.
    pub fn cells(&self) -> Result<Vec<SimConfig>> {
        if self.ranks.is_empty() || self.noise_sigmas.is_empty() || self.replicates == 0 {
            return Err(Error::config("sweep grid has an empty axis"));
        }
        let mut cells = Vec::new();
        for &ranks in &self.ranks {
            for &sigma in &self.noise_sigmas {
                for _ in 0..self.replicates {
                    let i = cells.len() as u64;
                    cells.push(SimConfig {
                        ranks,
                        progression_noise_sigma: sigma,
                        seed: if i == 0 {
                            self.base.seed
                        } else {
                            derive_seed(self.base.seed, i)
                        },
                        ..self.base.clone()
                    });
                }
            }
        }
        Ok(cells)
    }
}

/// Lazily simulate every cell of `grid`.
pub fn sweep(grid: &SweepGrid) -> Result<impl Iterator<Item = Result<SimInstance>>> {
    Ok(grid.cells()?.into_iter().map(|c| simulate(&c)))
}
