use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{Dataset, FeatureEmbedding, SyntheticFeatureSpec};
use super::head::Head;
use super::train::{evaluate, train, TrainConfig, TrainOutcome};
use crate::codec::{decode, Method};
use crate::detect::{detect, DetectorParams, ProgressionSequence};
use crate::error::{Error, Result};
use crate::eval::{class_detections, mean_average_precision};
use crate::seed::{derive_seed, rng_from_seed};
use crate::sim::{simulate_dataset, SimConfig, SimInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub ranks: u32,
    pub num_classes: usize,
    pub features: SyntheticFeatureSpec,
    pub train_samples: usize,
    /// Size of both the selection and the held-out test set.
    pub eval_samples: usize,
    /// Shared settings; `method` and `learning_rate` are overridden.
    pub train: TrainConfig,
    pub methods: Vec<Method>,
    /// Each method keeps the rate with the lowest selection-set MAE.
    pub learning_rates: Vec<f64>,
    /// Videos for the detection column; `ranks` and `num_classes` are
    /// overridden. Zero videos skips detection.
    pub sim: SimConfig,
    pub num_videos: usize,
    pub detector: DetectorParams,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            ranks: 100,
            num_classes: 3,
            features: SyntheticFeatureSpec {
                dim: 16,
                embed_seed: 0,
                noise_sigma: 0.2,
            },
            train_samples: 200,
            eval_samples: 500,
            train: TrainConfig::default(),
            methods: Method::ALL.to_vec(),
            learning_rates: vec![0.003, 0.01, 0.03, 0.1],
            sim: SimConfig::default(),
            num_videos: 2,
            detector: DetectorParams::thumos14(100),
            seed: 0,
        }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("no methods to compare"));
        }
        if self.train_samples == 0 || self.eval_samples == 0 {
            return Err(Error::config("sample counts must be positive"));
        }
        for &lr in &self.learning_rates {
            TrainConfig {
                learning_rate: lr,
                ..self.train
            }
            .validate()?;
        }
        self.train.validate()?;
        self.detector.validate(self.ranks)
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig {
            ranks: self.ranks,
            num_classes: self.num_classes,
            seed: derive_seed(self.seed, 3),
            ..self.sim.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub learning_rate: f64,
    /// Held-out MAE, scaled to 100.
    pub mae: f64,
    /// Detection mAP@0.5 on simulated videos, absent when no videos ran.
    pub map: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ranks: u32,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, method: Method) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<22} {:>10} {:>8} {:>8}\n",
            "method", "lr", "MAE", "mAP@0.5"
        );
        for r in &self.rows {
            let map = r
                .map
                .map_or_else(|| "-".to_string(), |m| format!("{:.2}", 100.0 * m));
            let _ = writeln!(
                out,
                "{:<22} {:>10} {:>8.2} {:>8}",
                r.method.name(),
                r.learning_rate,
                r.mae,
                map
            );
        }
        out
    }
}

/// Progression sequence a trained head would produce on a simulated video.
/// Action frames are embedded at their clean progression and class;
/// background frames at a random progression and class.
pub fn head_sequence(
    head: &Head,
    embedding: &FeatureEmbedding,
    video: &SimInstance,
    seed: u64,
) -> Result<ProgressionSequence> {
    let k = video.config.ranks;
    let t = video.seq.len();
    let mut owner: Vec<Option<usize>> = vec![None; t];
    for seg in &video.ground_truth {
        for slot in &mut owner[seg.start..=seg.end.min(t - 1)] {
            *slot = Some(seg.class);
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(t);
    for (frame, class) in owner.iter().enumerate() {
        let (p, c) = match class {
            Some(c) => (video.clean[frame], *c),
            None => (
                rng.gen_range(0.0..=f64::from(k)),
                rng.gen_range(0..video.config.num_classes),
            ),
        };
        let x = embedding.embed(p, c, &mut rng)?;
        let v = decode(&head.forward(&x)?, head.config())?;
        values.push(v.clamp(0.0, f64::from(k)));
    }
    ProgressionSequence::new(values, k)
}

struct Fitted {
    method: Method,
    learning_rate: f64,
    selection_mae: f64,
    outcome: TrainOutcome,
}

fn fit_all(
    config: &CompareConfig,
    train_set: &Dataset,
    select_set: &Dataset,
) -> Result<Vec<Fitted>> {
    let rates = if config.learning_rates.is_empty() {
        vec![config.train.learning_rate]
    } else {
        config.learning_rates.clone()
    };
    let jobs: Vec<(Method, f64)> = config
        .methods
        .iter()
        .flat_map(|&m| rates.iter().map(move |&lr| (m, lr)))
        .collect();
    let run = |&(method, learning_rate): &(Method, f64)| -> Result<Option<Fitted>> {
        let tc = TrainConfig {
            method,
            learning_rate,
            seed: derive_seed(config.seed, 5),
            ..config.train
        };
        match train(train_set, select_set, &tc) {
            Ok(outcome) => Ok(Some(Fitted {
                method,
                learning_rate,
                selection_mae: outcome.final_mae(),
                outcome,
            })),
            Err(Error::Diverged { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    #[cfg(feature = "parallel")]
    let fitted: Vec<Option<Fitted>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let fitted: Vec<Option<Fitted>> = jobs.iter().map(run).collect::<Result<_>>()?;

    let mut best: Vec<Fitted> = Vec::with_capacity(config.methods.len());
    for f in fitted.into_iter().flatten() {
        match best.iter_mut().find(|b| b.method == f.method) {
            Some(b) if f.selection_mae < b.selection_mae => *b = f,
            Some(_) => {}
            None => best.push(f),
        }
    }
    for &m in &config.methods {
        if !best.iter().any(|b| b.method == m) {
            return Err(Error::input(format!("{m} diverged at every learning rate")));
        }
    }
    best.sort_by_key(|b| config.methods.iter().position(|&m| m == b.method));
    Ok(best)
}

/// Train every method on the same synthetic data, pick each method's
/// learning rate on a selection set, then report held-out MAE and
/// detection mAP@0.5 on simulated videos.
pub fn compare_methods(config: &CompareConfig) -> Result<Comparison> {
    config.validate()?;
    let embedding = FeatureEmbedding::new(config.features, config.ranks, config.num_classes)?;
    let train_set = Dataset::sample(
        &embedding,
        config.train_samples,
        derive_seed(config.seed, 0),
    )?;
    let select_set = Dataset::sample(&embedding, config.eval_samples, derive_seed(config.seed, 1))?;
    let test_set = Dataset::sample(&embedding, config.eval_samples, derive_seed(config.seed, 2))?;
    let best = fit_all(config, &train_set, &select_set)?;

    let videos = if config.num_videos > 0 {
        simulate_dataset(&config.sim_config(), config.num_videos)?
    } else {
        Vec::new()
    };
    let frame_seed = derive_seed(config.seed, 4);
    let mut rows = Vec::with_capacity(best.len());
    for f in best {
        let head = &f.outcome.head;
        let map = if videos.is_empty() {
            None
        } else {
            let mut dets = Vec::with_capacity(videos.len());
            for (i, v) in videos.iter().enumerate() {
                let seq = head_sequence(head, &embedding, v, derive_seed(frame_seed, i as u64))?;
                dets.push(class_detections(&detect(
                    &seq,
                    &v.scores,
                    &config.detector,
                )?));
            }
            let gt: Vec<_> = videos.iter().map(|v| v.ground_truth.clone()).collect();
            Some(mean_average_precision(&dets, &gt, &[0.5])?[0].map)
        };
        rows.push(ComparisonRow {
            method: f.method,
            learning_rate: f.learning_rate,
            mae: evaluate(head, &test_set)?,
            map,
        });
    }
    Ok(Comparison {
        ranks: config.ranks,
        rows,
    })
}
