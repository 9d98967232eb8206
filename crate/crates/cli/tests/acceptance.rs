//! Acceptance criteria. Prints one PASS/FAIL line per criterion and fails
//! when any criterion fails or overruns its time budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use progression_core::codec::*;
use progression_core::detect::*;
use progression_core::eval::*;
use progression_core::seed::{derive_seed, rng_from_seed};
use progression_core::sim::*;
use progression_core::toy::{compare_methods, CompareConfig, SyntheticFeatureSpec};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn map05(videos: &[SimInstance], dets: &[Vec<Detection>]) -> f64 {
    let scored: Vec<_> = dets.iter().map(|d| class_detections(d)).collect();
    let gt: Vec<_> = videos.iter().map(|v| v.ground_truth.clone()).collect();
    mean_average_precision(&scored, &gt, &[0.5]).unwrap()[0].map
}

fn mae_baselines() -> Outcome {
    let k = 100.0;
    let n = 100_000;
    let mut rng = rng_from_seed(1);
    let labels: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=k)).collect();
    let random: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=k)).collect();
    let constant = mae(&vec![k / 2.0; n], &labels, 100).unwrap();
    let guess = mae(&random, &labels, 100).unwrap();
    check(
        (constant - 25.0).abs() <= 0.5 && (guess - 100.0 / 3.0).abs() <= 0.5,
        format!("constant K/2 {constant:.3}, random {guess:.3}"),
    )
}

fn grading_calibration() -> Outcome {
    let norm = grade_normalizer(100);
    let mut rng = rng_from_seed(2);
    let trials = 100_000;
    let mut total = 0.0;
    for _ in 0..trials {
        let len = rng.gen_range(2..=200);
        let a: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=100.0)).collect();
        let b: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=100.0)).collect();
        total += grade(&a, &b, 100).unwrap();
    }
    let mean = total / trials as f64;
    check(
        (norm - 5000.0 / 3.0).abs() < 1e-9 && mean.abs() <= 0.03,
        format!("normalizer {norm:.2}, mean random-pair grade {mean:.4}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut mismatches = 0;
    let mut detections = 0;
    for i in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(3, i));
        let frames = rng.gen_range(60..=500);
        let cfg = SimConfig {
            num_frames: frames,
            num_actions: rng.gen_range(0..=frames / 120),
            min_action_len: 30,
            max_action_len: 120,
            progression_noise_sigma: rng.gen_range(0.0..20.0),
            seed: i,
            ..SimConfig::default()
        };
        let inst = simulate(&cfg).unwrap();
        let params = DetectorParams {
            min_len: rng.gen_range(0..40),
            ..DetectorParams::thumos14(100)
        };
        let fast = detect(&inst.seq, &inst.scores, &params).unwrap();
        let brute = detect_bruteforce(&inst.seq, &inst.scores, &params).unwrap();
        detections += brute.len();
        if fast != brute {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} of 100 instances differ ({detections} detections compared)"),
    )
}

fn gradient_checks() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = rng_from_seed(4);
    for method in Method::ALL {
        for _ in 0..50 {
            let k = rng.gen_range(1..=100u32);
            let cfg = ProgressionConfig::new(k, method).unwrap();
            let p = rng.gen_range(0..=k);
            let target = encode_target(cfg.label(p).unwrap(), &cfg).unwrap();
            let raw: Vec<f64> = loop {
                let raw: Vec<f64> = if method == Method::Regression {
                    vec![rng.gen_range(-0.2..1.2)]
                } else {
                    (0..cfg.output_len())
                        .map(|_| rng.gen_range(-4.0..4.0))
                        .collect()
                };
                let o = raw[0];
                let smooth = method != Method::Regression
                    || ((o - f64::from(p) / f64::from(k)).abs() > 1e-3
                        && o.abs() > 1e-3
                        && (o - 1.0).abs() > 1e-3);
                if smooth {
                    break raw;
                }
            };
            let loss = |v: &[f64]| {
                compute_loss(&HeadOutput::from_flat(&cfg, v).unwrap(), &target, &cfg)
                    .unwrap()
                    .loss
            };
            let analytic = compute_loss(&HeadOutput::from_flat(&cfg, &raw).unwrap(), &target, &cfg)
                .unwrap()
                .gradient;
            let h = 1e-6;
            let mut diff = 0.0;
            let mut scale = 0.0f64;
            for (i, &a) in analytic.as_slice().iter().enumerate() {
                let mut up = raw.clone();
                up[i] += h;
                let mut down = raw.clone();
                down[i] -= h;
                let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
                diff += (a - numeric).powi(2);
                scale = scale.max(a.abs()).max(numeric.abs());
            }
            worst = worst.max(diff.sqrt() / scale.max(1.0));
        }
    }
    check(
        worst < 1e-4,
        format!("worst relative error {worst:.2e} over 250 cases"),
    )
}

fn round_trip() -> Outcome {
    let mut failures = Vec::new();
    for method in Method::ALL {
        let cfg = ProgressionConfig::new(100, method).unwrap();
        for p in 0..=100 {
            let out = ideal_output(cfg.label(p).unwrap(), &cfg).unwrap();
            if decode(&out, &cfg).unwrap() != f64::from(p) {
                failures.push(format!("{method}:{p}"));
            }
        }
    }
    check(
        failures.is_empty(),
        format!("{} mismatches {failures:?}", failures.len()),
    )
}

fn noiseless_end_to_end() -> Outcome {
    let cfg = SimConfig {
        seed: 6,
        ..SimConfig::default()
    };
    let videos = simulate_dataset(&cfg, 10).unwrap();
    let params = DetectorParams::thumos14(100);
    let dets: Vec<Vec<Detection>> = videos
        .iter()
        .map(|v| detect(&v.seq, &v.scores, &params).unwrap())
        .collect();
    let mut missed = 0;
    let mut planted = 0;
    for (v, d) in videos.iter().zip(&dets) {
        for g in v.complete_segments() {
            planted += 1;
            let found = d.iter().any(|x| {
                x.start.abs_diff(g.start) <= 1 && x.end.abs_diff(g.end) <= 1 && x.grade >= 0.999
            });
            if !found {
                missed += 1;
            }
        }
    }
    let m = map05(&videos, &dets);
    check(
        missed == 0 && m == 1.0,
        format!(
            "{} of {planted} actions recovered within 1 frame, mAP@0.5 = {m}",
            planted - missed
        ),
    )
}

fn incomplete_filtering() -> Outcome {
    let cfg = SimConfig {
        num_frames: 4000,
        num_actions: 6,
        incomplete_fraction: 0.5,
        truncation_range: (0.6, 0.6),
        progression_noise_sigma: 2.0,
        background: BackgroundModel::ConstantMid,
        min_gap: 200,
        seed: 7,
        ..SimConfig::default()
    };
    let videos = simulate_dataset(&cfg, 40).unwrap();
    let params = DetectorParams::from_fractions(100, 0.2, 0.8, 40, 0.4);
    let dets: Vec<Vec<Detection>> = videos
        .iter()
        .map(|v| detect(&v.seq, &v.scores, &params).unwrap())
        .collect();
    let gt: Vec<_> = videos.iter().map(|v| v.ground_truth.clone()).collect();
    let (found, total) = incomplete_detection_rate(&dets, &gt, 0.5).unwrap();
    check(
        found == 0 && total >= 100,
        format!("{found} of {total} incomplete actions detected"),
    )
}

fn non_decreasing(values: &[f64], tolerance: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - tolerance)
}

fn rank_sweep() -> Outcome {
    let ranks = [10u32, 25, 100];
    let seeds = 20u64;
    let mut means = Vec::new();
    for &k in &ranks {
        let mut total = 0.0;
        for seed in 0..seeds {
            let cfg = SimConfig {
                ranks: k,
                progression_noise_sigma: 10.0 * f64::from(k) / 100.0,
                quantize: true,
                seed,
                ..SimConfig::default()
            };
            let videos = simulate_dataset(&cfg, 5).unwrap();
            let params = DetectorParams::thumos14(k);
            let dets: Vec<_> = videos
                .iter()
                .map(|v| detect(&v.seq, &v.scores, &params).unwrap())
                .collect();
            total += map05(&videos, &dets);
        }
        means.push(total / seeds as f64);
    }
    check(
        non_decreasing(&means, 0.01),
        format!("mean mAP@0.5 for K = {ranks:?}: {means:.4?}"),
    )
}

fn sampling_sweep() -> Outcome {
    let counts = [100usize, 200, 500, 1000];
    let seeds = 10u64;
    let mut means = vec![0.0; counts.len()];
    for seed in 0..seeds {
        let cfg = SimConfig {
            num_frames: 5000,
            num_actions: 10,
            min_action_len: 150,
            max_action_len: 400,
            progression_noise_sigma: 10.0,
            seed,
            ..SimConfig::default()
        };
        let videos = simulate_dataset(&cfg, 3).unwrap();
        let params = DetectorParams::thumos14(100);
        for (m, &n) in means.iter_mut().zip(&counts) {
            let dets: Vec<_> = videos
                .iter()
                .map(|v| detect_sampled(&v.seq, &v.scores, &params, n).unwrap())
                .collect();
            *m += map05(&videos, &dets) / seeds as f64;
        }
    }
    check(
        non_decreasing(&means, 0.01),
        format!("mAP@0.5 for sampled frames {counts:?}: {means:.4?}"),
    )
}

fn method_comparison() -> Outcome {
    let ordinal: Vec<Method> = Method::ALL.into_iter().filter(|m| m.is_ordinal()).collect();
    let mut wins = vec![0usize; ordinal.len()];
    let mut nominal_maes = Vec::new();
    for seed in 0..5u64 {
        let base = CompareConfig::default();
        let cfg = CompareConfig {
            seed,
            features: SyntheticFeatureSpec {
                embed_seed: seed,
                ..base.features
            },
            ..base
        };
        let table = compare_methods(&cfg).unwrap();
        let nominal = table.row(Method::NominalClassification).unwrap().mae;
        nominal_maes.push(nominal);
        for (w, m) in wins.iter_mut().zip(&ordinal) {
            if table.row(*m).unwrap().mae <= nominal {
                *w += 1;
            }
        }
    }
    let summary: Vec<String> = ordinal
        .iter()
        .zip(&wins)
        .map(|(m, w)| format!("{m} {w}/5"))
        .collect();
    check(
        wins.iter().all(|&w| w >= 4),
        format!("seeds where MAE <= nominal: {}", summary.join(", ")),
    )
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn pipeline(out: &Path, jobs: &str) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_progression");
    let o = out.to_str().unwrap();
    let steps: Vec<Vec<&str>> = vec![
        vec![
            "simulate",
            "--videos",
            "3",
            "--incomplete",
            "0.3",
            "--noise",
            "5",
        ],
        vec!["detect", "SEQ"],
        vec!["propose", "SEQ"],
        vec!["eval-det", "--annotations", "ANN", "DET"],
        vec![
            "eval-prop",
            "--annotations",
            "ANN",
            "PROP",
            "--an",
            "1,5,10",
        ],
        vec!["label", "--annotations", "ANN"],
        vec![
            "train-toy",
            "--epochs",
            "5",
            "--train-samples",
            "100",
            "--eval-samples",
            "50",
        ],
        vec!["eval-mae", "--labels", "TL", "--predictions", "TP"],
        vec![
            "compare-methods",
            "--videos",
            "1",
            "--epochs",
            "3",
            "--train-samples",
            "60",
        ],
        vec!["report", "EVD", "EVP", "EVM"],
    ];
    let sub = |s: &str| -> String {
        let p = |rel: &str| out.join(rel).to_str().unwrap().to_string();
        match s {
            "SEQ" => p("sequences"),
            "ANN" => p("annotations.json"),
            "DET" => p("detections"),
            "PROP" => p("proposals"),
            "TL" => p("toy_labels.csv"),
            "TP" => p("toy_predictions.csv"),
            "EVD" => p("eval_det.json"),
            "EVP" => p("eval_prop.json"),
            "EVM" => p("eval_mae.json"),
            other => other.to_string(),
        }
    };
    for step in steps {
        let args: Vec<String> = step.iter().map(|s| sub(s)).collect();
        let status = Command::new(bin)
            .args(["--seed", "7", "--jobs", jobs, "--out", o])
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "{} failed: {}",
                step[0],
                String::from_utf8_lossy(&status.stderr)
            ));
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "4")?;
    pipeline(b.path(), "1")?;
    let fa = files_under(a.path());
    let fb = files_under(b.path());
    if fa != fb {
        return Err(format!("file sets differ: {fa:?} vs {fb:?}"));
    }
    let differing: Vec<_> = fa
        .iter()
        .filter(|f| {
            std::fs::read(a.path().join(f)).unwrap() != std::fs::read(b.path().join(f)).unwrap()
        })
        .collect();
    check(
        differing.is_empty(),
        format!(
            "{} files compared, {} differ {differing:?}",
            fa.len(),
            differing.len()
        ),
    )
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "MAE baselines",
            budget: Duration::from_secs(1),
            run: mae_baselines,
        },
        Criterion {
            id: 2,
            name: "grading calibration",
            budget: Duration::from_secs(5),
            run: grading_calibration,
        },
        Criterion {
            id: 3,
            name: "oracle equivalence",
            budget: Duration::from_secs(60),
            run: oracle_equivalence,
        },
        Criterion {
            id: 4,
            name: "gradient checks",
            budget: Duration::from_secs(10),
            run: gradient_checks,
        },
        Criterion {
            id: 5,
            name: "decode-encode round trip",
            budget: Duration::from_secs(1),
            run: round_trip,
        },
        Criterion {
            id: 6,
            name: "noiseless end-to-end",
            budget: Duration::from_secs(10),
            run: noiseless_end_to_end,
        },
        Criterion {
            id: 7,
            name: "incomplete-action filtering",
            budget: Duration::from_secs(30),
            run: incomplete_filtering,
        },
        Criterion {
            id: 8,
            name: "rank-count sweep",
            budget: Duration::from_secs(300),
            run: rank_sweep,
        },
        Criterion {
            id: 9,
            name: "sampling sweep",
            budget: Duration::from_secs(300),
            run: sampling_sweep,
        },
        Criterion {
            id: 10,
            name: "method comparison",
            budget: Duration::from_secs(600),
            run: method_comparison,
        },
        Criterion {
            id: 11,
            name: "determinism",
            budget: Duration::from_secs(600),
            run: determinism,
        },
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result =
            catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {:?}", c.budget)),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {:<28} {:>8.2}s  {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
