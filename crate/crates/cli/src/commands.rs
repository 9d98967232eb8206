use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use progression_core::codec::generate_labels;
use progression_core::detect::{detect, detect_sampled, to_proposals, Detection};
use progression_core::eval::{
    average_recall, class_detections, incomplete_detection_rate, mae, mean_average_precision,
    EvalReport, DETECTION_IOUS,
};
use progression_core::formats::{
    read_json, read_labels, read_predictions, write_atomic, write_json, write_labels,
    write_predictions, AnnotationFile, DetectionFile, FrameValue, ProposalFile, SequenceFile,
    VideoAnnotation, VideoSequence,
};
use progression_core::seed::derive_seed;
use progression_core::segment::ActionSegment;
use progression_core::sim::{simulate_dataset, BackgroundModel};
use progression_core::toy::{
    compare_methods, predict, train, Dataset, FeatureEmbedding, SyntheticFeatureSpec,
};
use serde::Serialize;

use crate::args::*;
use crate::config::{DetectorSection, FileConfig};

/// A command-line mistake rather than bad data; exits with status 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

pub struct Ctx {
    pub seed: u64,
    pub ranks: u32,
    pub out: PathBuf,
    pub file: FileConfig,
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        ranks: cli.ranks.or(file.ranks).unwrap_or(100),
        out: cli.out.clone(),
        file,
    };
    if ctx.ranks == 0 {
        return usage("--k must be at least 1");
    }
    match &cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Label(a) => label(&ctx, a),
        Command::TrainToy(a) => train_toy(&ctx, a),
        Command::CompareMethods(a) => compare(&ctx, a),
        Command::Detect(a) => run_detector(&ctx, a, Output::Detections),
        Command::Propose(a) => run_detector(&ctx, a, Output::Proposals),
        Command::EvalDet(a) => eval_det(&ctx, a),
        Command::EvalProp(a) => eval_prop(&ctx, a),
        Command::EvalMae(a) => eval_mae(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn for_each_video<T, F>(items: &[T], f: F) -> Result<()>
where
    T: Sync,
    F: Fn(&T) -> Result<()> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().try_for_each(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().try_for_each(f)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("cannot write {}", path.display()))
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value).with_context(|| format!("cannot write {}", path.display()))
}

fn video_id(index: usize) -> String {
    format!("video_{index:04}")
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let mut cfg = ctx.file.sim.clone().unwrap_or_default();
    cfg.seed = ctx.seed;
    cfg.ranks = ctx.ranks;
    if let Some(v) = a.frames {
        cfg.num_frames = v;
    }
    if let Some(v) = a.actions {
        cfg.num_actions = v;
    }
    if let Some(v) = a.classes {
        cfg.num_classes = v;
    }
    if let Some(v) = a.noise {
        cfg.progression_noise_sigma = v;
    }
    if let Some(v) = a.incomplete {
        cfg.incomplete_fraction = v;
    }
    if let Some(b) = a.background {
        cfg.background = match b {
            Background::Uniform => BackgroundModel::UniformRandom,
            Background::Mid => BackgroundModel::ConstantMid,
        };
    }
    if a.videos == 0 {
        return usage("--videos must be at least 1");
    }
    let instances = simulate_dataset(&cfg, a.videos)?;
    let annotations = AnnotationFile {
        num_classes: cfg.num_classes,
        videos: instances
            .iter()
            .enumerate()
            .map(|(i, inst)| VideoAnnotation {
                id: video_id(i),
                num_frames: inst.seq.len(),
                frame_rate: None,
                segments: inst.ground_truth.clone(),
            })
            .collect(),
    };
    annotations.write(&ctx.out.join("annotations.json"))?;
    save_json(&ctx.out.join("sim_config.json"), &cfg)?;
    let indexed: Vec<(usize, _)> = instances.into_iter().enumerate().collect();
    for_each_video(&indexed, |(i, inst)| {
        let file = SequenceFile {
            videos: vec![VideoSequence::new(
                video_id(*i),
                inst.seq.clone(),
                inst.scores.clone(),
            )?],
        };
        let path = ctx
            .out
            .join("sequences")
            .join(format!("{}.seq", video_id(*i)));
        file.write(&path)
            .with_context(|| format!("cannot write {}", path.display()))
    })?;
    println!(
        "simulated {} videos into {}",
        indexed.len(),
        ctx.out.display()
    );
    Ok(())
}

fn label(ctx: &Ctx, a: &LabelArgs) -> Result<()> {
    let ann = AnnotationFile::read(&a.annotations)?;
    let mut rows = Vec::new();
    for v in &ann.videos {
        for seg in v.segments.iter().filter(|s| s.complete) {
            for (frame, p) in generate_labels(seg, ctx.ranks)? {
                rows.push(FrameValue {
                    video: v.id.clone(),
                    frame,
                    value: f64::from(p.value()),
                });
            }
        }
    }
    write_labels(&ctx.out.join("labels.csv"), &rows)?;
    println!("wrote {} labels", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct TrainingLog<'a> {
    config: &'a progression_core::toy::TrainConfig,
    features: &'a SyntheticFeatureSpec,
    train_samples: usize,
    eval_samples: usize,
    loss_curve: &'a [f64],
    mae_curve: &'a [f64],
    final_mae: f64,
}

fn train_toy(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let mut tc = ctx.file.train.unwrap_or_default();
    tc.seed = ctx.seed;
    if let Some(m) = a.method {
        tc.method = m;
    }
    if let Some(v) = a.epochs {
        tc.epochs = v;
    }
    if let Some(v) = a.lr {
        tc.learning_rate = v;
    }
    if let Some(v) = a.hidden {
        tc.hidden = v;
    }
    if let Some(v) = a.batch_size {
        tc.batch_size = v;
    }
    let mut spec = ctx.file.features.unwrap_or_default();
    spec.embed_seed = derive_seed(ctx.seed, 2);
    if let Some(v) = a.noise {
        spec.noise_sigma = v;
    }
    let mut toy = ctx.file.toy;
    if let Some(v) = a.train_samples {
        toy.train_samples = v;
    }
    if let Some(v) = a.eval_samples {
        toy.eval_samples = v;
    }
    if toy.train_samples == 0 || toy.eval_samples == 0 {
        return usage("sample counts must be positive");
    }
    let emb = FeatureEmbedding::new(spec, ctx.ranks, toy.num_classes)?;
    let train_set = Dataset::sample(&emb, toy.train_samples, derive_seed(ctx.seed, 0))?;
    let eval_set = Dataset::sample(&emb, toy.eval_samples, derive_seed(ctx.seed, 1))?;
    let outcome = train(&train_set, &eval_set, &tc)?;

    save_json(&ctx.out.join("model.json"), &outcome.head)?;
    save_json(
        &ctx.out.join("training.json"),
        &TrainingLog {
            config: &tc,
            features: &spec,
            train_samples: toy.train_samples,
            eval_samples: toy.eval_samples,
            loss_curve: &outcome.loss_curve,
            mae_curve: &outcome.mae_curve,
            final_mae: outcome.final_mae(),
        },
    )?;
    let predictions = predict(&outcome.head, &eval_set.features)?;
    let rows = |values: Vec<f64>| -> Vec<FrameValue> {
        values
            .into_iter()
            .enumerate()
            .map(|(frame, value)| FrameValue {
                video: "toy".into(),
                frame,
                value,
            })
            .collect()
    };
    write_predictions(&ctx.out.join("toy_predictions.csv"), &rows(predictions))?;
    let labels = eval_set.labels.iter().map(|&p| f64::from(p)).collect();
    write_labels(&ctx.out.join("toy_labels.csv"), &rows(labels))?;
    println!("{}: final MAE {:.2}", tc.method, outcome.final_mae());
    Ok(())
}

fn compare(ctx: &Ctx, a: &CompareArgs) -> Result<()> {
    let mut cfg = ctx.file.compare.clone().unwrap_or_default();
    cfg.seed = ctx.seed;
    cfg.ranks = ctx.ranks;
    cfg.detector = ctx.file.detector.resolve(ctx.ranks);
    if let Some(v) = a.videos {
        cfg.num_videos = v;
    }
    if let Some(v) = a.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = a.train_samples {
        cfg.train_samples = v;
    }
    let table = compare_methods(&cfg)?;
    save_json(&ctx.out.join("comparison.json"), &table)?;
    let text = table.to_table();
    write_text(&ctx.out.join("comparison.txt"), &text)?;
    print!("{text}");
    Ok(())
}

/// Files named on the command line; directories contribute their entries
/// with extension `ext`, sorted by name.
fn collect_inputs(inputs: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|f| f.is_file() && f.extension().is_some_and(|e| e == ext));
            found.sort();
            files.extend(found);
        } else if p.exists() {
            files.push(p.clone());
        } else {
            bail!("{}: no such file or directory", p.display());
        }
    }
    if files.is_empty() {
        return usage(format!("no .{ext} inputs found"));
    }
    Ok(files)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Output {
    Detections,
    Proposals,
}

fn detector_section(ctx: &Ctx, a: &DetectArgs) -> DetectorSection {
    let mut s = ctx.file.detector.clone();
    if let Some(p) = a.preset {
        s.preset = Some(p.into());
    }
    s.min_len = a.min_len.or(s.min_len);
    s.start_max = a.start_max.or(s.start_max);
    s.end_min = a.end_min.or(s.end_min);
    s.iou_threshold = a.iou_threshold.or(s.iou_threshold);
    s.max_candidates = a.max_candidates.or(s.max_candidates);
    s
}

fn read_sequences(inputs: &[PathBuf]) -> Result<Vec<VideoSequence>> {
    let mut videos: Vec<VideoSequence> = Vec::new();
    let mut seen = HashSet::new();
    for path in collect_inputs(inputs, "seq")? {
        let file = SequenceFile::read(&path)?;
        for v in file.videos {
            if !seen.insert(v.id.clone()) {
                bail!(
                    "{}: video {:?} appears in more than one input",
                    path.display(),
                    v.id
                );
            }
            videos.push(v);
        }
    }
    Ok(videos)
}

fn run_detector(ctx: &Ctx, a: &DetectArgs, output: Output) -> Result<()> {
    let section = detector_section(ctx, a);
    let videos = read_sequences(&a.inputs)?;
    let dir = ctx.out.join(match output {
        Output::Detections => "detections",
        Output::Proposals => "proposals",
    });
    for_each_video(&videos, |v| {
        let params = section.resolve(v.seq.ranks());
        let found: Vec<Detection> = match a.sample {
            Some(n) => detect_sampled(&v.seq, &v.scores, &params, n),
            None => detect(&v.seq, &v.scores, &params),
        }
        .with_context(|| format!("video {}", v.id))?;
        let path = dir.join(format!("{}.json", v.id));
        match output {
            Output::Detections => DetectionFile {
                video: v.id.clone(),
                num_frames: v.seq.len(),
                num_classes: v.scores.num_classes(),
                detections: found,
            }
            .write(&path),
            Output::Proposals => ProposalFile {
                video: v.id.clone(),
                num_frames: v.seq.len(),
                proposals: to_proposals(&found),
            }
            .write(&path),
        }
        .with_context(|| format!("cannot write {}", path.display()))
    })?;
    println!("processed {} videos into {}", videos.len(), dir.display());
    Ok(())
}

/// Per-video results and ground truth, both in annotation order.
type Aligned<T> = (Vec<Vec<T>>, Vec<Vec<ActionSegment>>);

/// Align per-video results with the annotation order. Videos without a
/// result file get an empty list.
fn align<T: Clone>(
    ann: &AnnotationFile,
    results: Vec<(PathBuf, String, usize, Vec<T>)>,
) -> Result<Aligned<T>> {
    let index: HashMap<&str, usize> = ann
        .videos
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.as_str(), i))
        .collect();
    let mut aligned: Vec<Option<Vec<T>>> = vec![None; ann.videos.len()];
    for (path, video, frames, items) in results {
        let Some(&i) = index.get(video.as_str()) else {
            bail!(
                "{}: video {video:?} is not in the annotations",
                path.display()
            );
        };
        if frames != ann.videos[i].num_frames {
            bail!(
                "{}: video {video:?} has {frames} frames, annotations say {}",
                path.display(),
                ann.videos[i].num_frames
            );
        }
        if aligned[i].replace(items).is_some() {
            bail!(
                "{}: video {video:?} appears in more than one input",
                path.display()
            );
        }
    }
    let gt = ann.videos.iter().map(|v| v.segments.clone()).collect();
    Ok((
        aligned.into_iter().map(Option::unwrap_or_default).collect(),
        gt,
    ))
}

fn finish_report(ctx: &Ctx, name: &str, report: &EvalReport) -> Result<()> {
    save_json(&ctx.out.join(name), report)?;
    print!("{}", report.to_table());
    Ok(())
}

fn eval_det(ctx: &Ctx, a: &EvalDetArgs) -> Result<()> {
    let ann = AnnotationFile::read(&a.annotations)?;
    let mut results = Vec::new();
    for path in collect_inputs(&a.inputs, "json")? {
        let f = DetectionFile::read(&path)?;
        if f.num_classes != ann.num_classes {
            bail!(
                "{}: {} classes, annotations have {}",
                path.display(),
                f.num_classes,
                ann.num_classes
            );
        }
        results.push((path, f.video, f.num_frames, f.detections));
    }
    let (dets, gt) = align(&ann, results)?;
    let ious = if a.iou.is_empty() {
        DETECTION_IOUS.to_vec()
    } else {
        a.iou.clone()
    };
    let scored: Vec<_> = dets.iter().map(|d| class_detections(d)).collect();
    let maps = mean_average_precision(&scored, &gt, &ious)?;
    let mut report = EvalReport::default().with_map(&maps);
    if gt.iter().flatten().any(|s| !s.complete) {
        let (found, total) = incomplete_detection_rate(&dets, &gt, 0.5)?;
        report.incomplete_detected = Some([found, total]);
    }
    finish_report(ctx, "eval_det.json", &report)
}

const DEFAULT_AN: [f64; 5] = [50.0, 100.0, 200.0, 500.0, 1000.0];

fn eval_prop(ctx: &Ctx, a: &EvalPropArgs) -> Result<()> {
    let ann = AnnotationFile::read(&a.annotations)?;
    let mut results = Vec::new();
    for path in collect_inputs(&a.inputs, "json")? {
        let f = ProposalFile::read(&path)?;
        results.push((path, f.video, f.num_frames, f.proposals));
    }
    let (props, gt) = align(&ann, results)?;
    let ans = if a.an.is_empty() {
        DEFAULT_AN.to_vec()
    } else {
        a.an.clone()
    };
    let recall = average_recall(&props, &gt, &ans)?;
    finish_report(
        ctx,
        "eval_prop.json",
        &EvalReport::default().with_recall(&recall),
    )
}

fn eval_mae(ctx: &Ctx, a: &EvalMaeArgs) -> Result<()> {
    let labels = read_labels(&a.labels)?;
    let predictions = read_predictions(&a.predictions)?;
    let lookup: HashMap<(&str, usize), f64> = predictions
        .iter()
        .map(|r| ((r.video.as_str(), r.frame), r.value))
        .collect();
    let mut pred = Vec::with_capacity(labels.len());
    let mut truth = Vec::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        let Some(&p) = lookup.get(&(l.video.as_str(), l.frame)) else {
            bail!(
                "{}: record {}: no prediction for frame {} of {}",
                a.labels.display(),
                i + 2,
                l.frame,
                l.video
            );
        };
        pred.push(p);
        truth.push(l.value);
    }
    if truth.is_empty() {
        bail!("{}: no labels", a.labels.display());
    }
    let report = EvalReport {
        mae: Some(mae(&pred, &truth, ctx.ranks)?),
        ..EvalReport::default()
    };
    finish_report(ctx, "eval_mae.json", &report)
}

fn report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let mut merged = EvalReport::default();
    for path in &a.inputs {
        let r: EvalReport = read_json(path)?;
        merged.merge(r);
    }
    save_json(&ctx.out.join("report.json"), &merged)?;
    let text = merged.to_table();
    write_text(&ctx.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_sort_in_order() {
        assert!(video_id(9) < video_id(10));
        assert_eq!(video_id(3), "video_0003");
    }

    #[test]
    fn default_budgets_are_ascending() {
        assert!(DEFAULT_AN.windows(2).all(|w| w[0] < w[1]));
    }
}
