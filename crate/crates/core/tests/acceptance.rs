//! Acceptance criteria. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fser::audio_io::AudioClip;
use fser::augment::{apply_params, generate, hflip, AugmentConfig, AugmentParams};
use fser::config::PipelineConfig;
use fser::dataset::{
    class_distribution, split_dataset, synthetic_manifest, Corpus, EmotionLabel, Split, TABLE1_COUNTS,
};
use fser::dsp::{fft_radix2, mel_spectrogram};
use fser::imaging::{encode_ppm, render, Colormap, SpectroImage};
use fser::metrics::{
    confusion_matrix, emotion_class_names, precision_recall_f1, render_report, report_from_csv, roc_auc_ovr,
    ClassMetrics, ClassificationReport,
};
use fser::nn::gradcheck::{check_cross_entropy, check_layer};
use fser::nn::{
    build_fser_network, decode, encode, evaluate, load_checkpoint, save_checkpoint, LabeledSet, LayerKind, TrainConfig,
    Trainer, FSER_INPUT_SHAPE,
};
use fser::pipeline::{augmentation_plan, Pipeline};

type Verdict = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Status);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

// 1

fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    // reduce the phase index first so large k·t stays exact
                    let angle = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                    v * Complex64::new(angle.cos(), angle.sin())
                })
                .sum()
        })
        .collect()
}

fn fft_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut max_abs, mut max_parseval) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let x: Vec<Complex64> = (0..512)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        let fast = fft_radix2(&x, false).map_err(|e| e.to_string())?.bins;
        let slow = naive_dft(&x);
        for (a, b) in fast.iter().zip(&slow) {
            max_abs = max_abs.max((a - b).norm());
        }
        let time_energy: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let freq_energy: f64 = fast.iter().map(|v| v.norm_sqr()).sum::<f64>() / 512.0;
        max_parseval = max_parseval.max((time_energy - freq_energy).abs() / time_energy);
    }
    let elapsed = start.elapsed();
    ensure(max_abs <= 1e-9, || format!("max bin error {max_abs:e}"))?;
    ensure(max_parseval <= 1e-6, || format!("Parseval error {max_parseval:e}"))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "max |FFT-DFT| {max_abs:.2e}, Parseval rel {max_parseval:.2e}, {elapsed:.2?}"
    ))
}

// 2

fn gradient_suite() -> Verdict {
    let start = Instant::now();
    let cases: [(&str, LayerKind, &[usize]); 5] = [
        (
            "conv2d",
            LayerKind::Conv2d {
                out_channels: 3,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            &[2, 2, 5, 5],
        ),
        ("dense", LayerKind::Dense { out_features: 5 }, &[3, 7]),
        ("maxpool", LayerKind::MaxPool2d { window: 2, stride: 2 }, &[2, 3, 4, 6]),
        ("relu", LayerKind::Relu, &[2, 3, 4, 4]),
        ("dropout", LayerKind::Dropout { rate: 0.5 }, &[2, 3, 4, 4]),
    ];
    let mut worst = BTreeMap::new();
    for (name, kind, shape) in cases {
        let mut w = 0.0f64;
        for seed in 0..20 {
            w = w.max(check_layer(kind, shape, seed).map_err(|e| e.to_string())?.max_rel_error);
        }
        worst.insert(name, w);
    }
    let mut w = 0.0f64;
    for seed in 0..20 {
        w = w.max(
            check_cross_entropy(4, 8, seed)
                .map_err(|e| e.to_string())?
                .max_rel_error,
        );
    }
    worst.insert("softmax_ce", w);
    let elapsed = start.elapsed();
    let summary: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    for (k, v) in &worst {
        ensure(*v < 1e-4, || format!("{k} max relative error {v:e}"))?;
    }
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("{}; {elapsed:.2?}", summary.join(", ")))
}

// 3

fn split_arithmetic() -> Verdict {
    let mut manifest = synthetic_manifest(&TABLE1_COUNTS);
    ensure(manifest.records.len() == 3043, || {
        format!("{} records", manifest.records.len())
    })?;
    split_dataset(&mut manifest, 0).map_err(|e| e.to_string())?;
    let (test, train, val) = (
        manifest.count(Split::Test),
        manifest.count(Split::Train),
        manifest.count(Split::Val),
    );
    ensure((test, train, val) == (609, 1947, 487), || {
        format!("test/train/val = {test}/{train}/{val}")
    })?;
    let dist = class_distribution(&manifest);
    let anger = dist.percentage(EmotionLabel::Anger);
    let calm = dist.percentage(EmotionLabel::Calm);
    ensure(format!("{anger:.2}") == "15.22", || format!("anger {anger:.2}%"))?;
    ensure(format!("{calm:.2}") == "8.97", || format!("calm {calm:.2}%"))?;
    Ok(format!(
        "test {test}, train {train}, val {val}; anger {anger:.2}%, calm {calm:.2}%"
    ))
}

// 4

fn random_image(rng: &mut ChaCha8Rng) -> SpectroImage {
    let mut img = SpectroImage::black();
    for v in img.pixels.iter_mut() {
        *v = rng.random();
    }
    img
}

fn augmentation_count() -> Verdict {
    let mut manifest = synthetic_manifest(&TABLE1_COUNTS);
    split_dataset(&mut manifest, 0).map_err(|e| e.to_string())?;
    let cfg = AugmentConfig::default();
    let plan = augmentation_plan(&manifest, "images", cfg.variants_per_image);
    manifest.records.extend(plan);
    let train_rows = manifest.count(Split::Train);
    ensure(train_rows == 40887, || format!("{train_rows} train rows"))?;
    manifest.validate().map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..20 {
        let img = random_image(&mut rng);
        ensure(hflip(&hflip(&img)) == img, || {
            "hflip∘hflip differs from identity".into()
        })?;
        let identity = AugmentParams {
            dx: 0,
            dy: 0,
            zoom: 1.0,
            flip: false,
        };
        ensure(apply_params(&img, &identity) == img, || {
            "zero shift, unit zoom is not identity".into()
        })?;
        let variants = generate(&img, i, &cfg).map_err(|e| e.to_string())?;
        ensure(variants.len() == 20, || format!("{} variants", variants.len()))?;
    }
    Ok(format!(
        "1947 train + 1947×20 variants = {train_rows} rows; identities bit-exact"
    ))
}

// 5

/// Eight images per class; class k has a bright horizontal band over rows
/// 8k..8k+8 on a dark background, with uniform pixel noise.
fn overfit_set() -> Result<LabeledSet, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut set = LabeledSet::new(&FSER_INPUT_SHAPE);
    for take in 0..64 {
        let class = take % EmotionLabel::COUNT;
        let mut img = SpectroImage::black();
        for row in 0..64 {
            for col in 0..64 {
                for ch in 0..3 {
                    let base = if row / 8 == class { 0.9 } else { 0.1 };
                    img.set(row, col, ch, base + rng.random_range(-0.05..0.05));
                }
            }
        }
        set.push(&img.to_chw(), class);
    }
    Ok(set)
}

fn overfit_smoke() -> Verdict {
    let start = Instant::now();
    let set = overfit_set()?;
    let cfg = TrainConfig {
        batch_size: 64,
        learning_rate: 0.001,
        epochs: 200,
        seed: 5,
        shuffle: true,
    };
    let mut trainer = Trainer::new(build_fser_network(5), cfg).map_err(|e| e.to_string())?;
    let empty = LabeledSet::new(&FSER_INPUT_SHAPE);
    let mut best = 0.0f64;
    for _ in 0..200 {
        trainer.run_epoch(&set, &empty).map_err(|e| e.to_string())?;
        // accuracy of the current weights on the training images, dropout off
        let (loss, acc) = evaluate(&trainer.net, &set, 64).map_err(|e| e.to_string())?;
        best = best.max(acc);
        if acc >= 0.95 {
            let elapsed = start.elapsed();
            within(elapsed, Duration::from_secs(600))?;
            return Ok(format!(
                "train accuracy {:.1}% (loss {loss:.4}) at epoch {}; {elapsed:.1?}",
                acc * 100.0,
                trainer.epoch()
            ));
        }
    }
    Err(format!("best train accuracy {:.1}% after 200 epochs", best * 100.0))
}

// 6

struct OracleCounts {
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
}

fn counting_oracle(expected: &[usize], predicted: &[usize], n: usize) -> OracleCounts {
    let mut out = OracleCounts {
        precision: vec![],
        recall: vec![],
        f1: vec![],
    };
    for c in 0..n {
        let tp = expected
            .iter()
            .zip(predicted)
            .filter(|&(&e, &p)| e == c && p == c)
            .count() as f64;
        let predicted_c = predicted.iter().filter(|&&p| p == c).count() as f64;
        let actual_c = expected.iter().filter(|&&e| e == c).count() as f64;
        let p = if predicted_c > 0.0 { tp / predicted_c } else { 0.0 };
        let r = if actual_c > 0.0 { tp / actual_c } else { 0.0 };
        out.precision.push(p);
        out.recall.push(r);
        out.f1.push(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
    }
    out
}

fn pair_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &pi) in positive.iter().enumerate() {
        for (j, &pj) in positive.iter().enumerate() {
            if pi && !pj {
                pairs += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).expect("finite scores") {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

fn metrics_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = EmotionLabel::COUNT;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.random_range(2..=50);
        let expected: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
        let predicted: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
        // coarse scores produce ties on purpose
        let scores: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..n).map(|_| rng.random_range(0..6) as f64 / 5.0).collect())
            .collect();
        let cm = confusion_matrix(&expected, &predicted, n).map_err(|e| e.to_string())?;
        let report = precision_recall_f1(&cm, emotion_class_names());
        let oracle = counting_oracle(&expected, &predicted, n);
        let auc = roc_auc_ovr(&scores, &expected, n).map_err(|e| e.to_string())?;
        for c in 0..n {
            let m = &report.classes[c];
            worst = worst
                .max((m.precision - oracle.precision[c]).abs())
                .max((m.recall - oracle.recall[c]).abs())
                .max((m.f1 - oracle.f1[c]).abs());
            let col: Vec<f64> = scores.iter().map(|s| s[c]).collect();
            let pos: Vec<bool> = expected.iter().map(|&e| e == c).collect();
            match (auc.per_class[c], pair_auc(&col, &pos)) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                (a, b) => return Err(format!("AUC definedness differs for class {c}: {a:?} vs {b:?}")),
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;

    let table2 = [
        (96.0, 96.0, 96.0, 91),
        (94.0, 97.0, 95.0, 80),
        (93.0, 97.0, 95.0, 54),
        (97.0, 92.0, 94.0, 77),
        (95.0, 93.0, 94.0, 83),
        (94.0, 94.0, 94.0, 77),
        (95.0, 94.0, 94.0, 78),
        (94.0, 95.0, 94.0, 69),
    ];
    let classes = table2
        .iter()
        .map(|&(p, r, f, s)| ClassMetrics {
            precision: p / 100.0,
            recall: r / 100.0,
            f1: f / 100.0,
            support: s,
            auc: None,
        })
        .collect();
    let report = ClassificationReport::from_classes(emotion_class_names(), classes, 0.9505);
    let text = render_report(&report);
    let macro_line = text
        .lines()
        .find(|l| l.trim_start().starts_with("macro avg"))
        .ok_or("no macro avg row")?;
    let cells: Vec<&str> = macro_line.split_whitespace().collect();
    ensure(cells.get(4) == Some(&"95"), || {
        format!("macro row rendered as {macro_line:?}")
    })?;
    Ok(format!(
        "max deviation {worst:.1e} over 100 instances; macro F1 {:.4} renders \"95\"",
        report.macro_avg.f1
    ))
}

// 7

fn tree_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn determinism() -> Verdict {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_a = common::run_full_pipeline(a.path());
    let out_b = common::run_full_pipeline(b.path());
    ensure(out_a == out_b, || "stdout differs between runs".into())?;
    let (files_a, files_b) = (tree_files(a.path()), tree_files(b.path()));
    ensure(files_a.keys().eq(files_b.keys()), || {
        "runs produced different file sets".into()
    })?;
    for (path, bytes) in &files_a {
        ensure(files_b[path] == *bytes, || format!("{} differs", path.display()))?;
    }
    for required in [
        "manifest.csv",
        "model.fser",
        "train_log.csv",
        "reports/report.csv",
        "reports/confusion.csv",
    ] {
        ensure(files_a.contains_key(Path::new(required)), || {
            format!("{required} missing")
        })?;
    }
    let confusion = String::from_utf8_lossy(&files_a[Path::new("reports/confusion.csv")]).into_owned();
    ensure(confusion.lines().count() == 9, || "confusion matrix is not 8×8".into())?;
    Ok(format!(
        "{} files and 7 stdouts byte-identical across two runs",
        files_a.len()
    ))
}

// 8

fn mel_contracts() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples: Vec<f64> = (0..144_000).map(|_| rng.random_range(-0.5..0.5)).collect();
    let clip = AudioClip::new(samples, 48_000);
    let mel = mel_spectrogram(&clip, 512, 512, 64).map_err(|e| e.to_string())?;
    ensure(mel.n_frames == 281, || format!("{} frames", mel.n_frames))?;
    let max = mel.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = mel.values.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(max == 0.0, || format!("dB max {max}"))?;
    ensure(min >= -80.0, || format!("dB min {min}"))?;

    let map = Colormap::spectro();
    let mut worst = 0u8;
    for (i, label) in EmotionLabel::ALL.iter().enumerate() {
        let base = common::class_tone(*label, i as u64, 48_000);
        let reference = encode_ppm(&render(
            &mel_spectrogram(&AudioClip::new(base.clone(), 48_000), 512, 512, 64).map_err(|e| e.to_string())?,
            &map,
        ));
        for scale in [0.25, 0.3, 0.5, 2.0, 3.7] {
            let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
            let img = encode_ppm(&render(
                &mel_spectrogram(&AudioClip::new(scaled, 48_000), 512, 512, 64).map_err(|e| e.to_string())?,
                &map,
            ));
            for (a, b) in reference.iter().zip(&img) {
                worst = worst.max(a.abs_diff(*b));
            }
        }
    }
    ensure(worst <= 1, || {
        format!("scaled images differ by {worst} quantization steps")
    })?;
    Ok(format!(
        "281 frames; dB range [{min:.2}, {max}]; scaled renders within {worst} step"
    ))
}

// 9

fn checkpoint_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut set = LabeledSet::new(&FSER_INPUT_SHAPE);
    for i in 0..8 {
        let img = random_image(&mut rng);
        set.push(&img.to_chw(), i % EmotionLabel::COUNT);
    }
    let cfg = TrainConfig {
        batch_size: 4,
        epochs: 1,
        seed: 9,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(build_fser_network(9), cfg).map_err(|e| e.to_string())?;
    trainer.run_epoch(&set, &set).map_err(|e| e.to_string())?;
    let ckpt = trainer.checkpoint();

    let bytes = encode(&ckpt);
    let decoded = decode(&bytes).map_err(|e| e.to_string())?;
    ensure(encode(&decoded) == bytes, || "encode∘decode∘encode differs".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (p1, p2) = (dir.path().join("a.fser"), dir.path().join("b.fser"));
    save_checkpoint(&ckpt, &p1).map_err(|e| e.to_string())?;
    let loaded = load_checkpoint(&p1).map_err(|e| e.to_string())?;
    save_checkpoint(&loaded, &p2).map_err(|e| e.to_string())?;
    let (b1, b2) = (
        fs::read(&p1).map_err(|e| e.to_string())?,
        fs::read(&p2).map_err(|e| e.to_string())?,
    );
    ensure(b1 == b2, || "save→load→save bytes differ".into())?;

    let batch = set.batch(&[0, 1, 2, 3, 4, 5, 6, 7]);
    let before = ckpt.network.predict(&batch).map_err(|e| e.to_string())?;
    let after = loaded.network.predict(&batch).map_err(|e| e.to_string())?;
    ensure(before == after, || "predictions changed after reload".into())?;
    Ok(format!("{} bytes byte-identical; 8 predictions identical", b1.len()))
}

// 10

fn corpus_run() -> Result<Option<String>, String> {
    let (Ok(dir), Ok(name)) = (std::env::var("FSER_CORPUS_DIR"), std::env::var("FSER_CORPUS")) else {
        return Ok(None);
    };
    let corpus: Corpus = name.parse().map_err(|e: fser::dataset::DatasetError| e.to_string())?;
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        epochs: 50,
        ..PipelineConfig::default()
    };
    let pipeline = Pipeline::new(work.path().join("manifest.csv"), cfg, false).map_err(|e| e.to_string())?;
    let dir = fs::canonicalize(dir).map_err(|e| e.to_string())?;
    for (stage, outcome) in [
        ("index", pipeline.index(corpus, &dir)),
        ("featurize", pipeline.featurize()),
        ("split", pipeline.split()),
        ("augment", pipeline.augment()),
        ("train", pipeline.train()),
        ("evaluate", pipeline.evaluate()),
    ] {
        let outcome = outcome.map_err(|e| format!("{stage}: {e}"))?;
        if !outcome.succeeded() {
            eprintln!("{stage}: {}", outcome.failure_summary());
        }
    }
    let reports = work.path().join("reports");
    let report_text = fs::read_to_string(reports.join("report.csv")).map_err(|e| e.to_string())?;
    let report = report_from_csv(&report_text).map_err(|e| e.to_string())?;
    ensure(report.classes.len() == 8, || "report lacks 8 classes".into())?;
    let confusion = fs::read_to_string(reports.join("confusion.csv")).map_err(|e| e.to_string())?;
    for (row, metrics) in confusion.lines().skip(1).zip(&report.classes) {
        if metrics.support == 0 {
            continue;
        }
        let sum: f64 = row
            .split(',')
            .skip(1)
            .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
            .sum();
        ensure((sum - 100.0).abs() <= 0.01, || {
            format!("confusion row {row:?} sums to {sum}")
        })?;
    }
    Ok(Some(format!(
        "{name}: accuracy {:.2}% over {} test clips",
        report.accuracy * 100.0,
        report.total
    )))
}

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn guarded(f: impl FnOnce() -> Verdict) -> Status {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(detail)) => Status::Pass(detail),
        Ok(Err(detail)) => Status::Fail(detail),
        Err(p) => Status::Fail(format!(
            "panicked: {}",
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        )),
    }
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 10] = [
        (1, "FFT oracle", || guarded(fft_oracle)),
        (2, "gradient suite", || guarded(gradient_suite)),
        (3, "split arithmetic", || guarded(split_arithmetic)),
        (4, "augmentation count", || guarded(augmentation_count)),
        (5, "overfit smoke test", || guarded(overfit_smoke)),
        (6, "metrics oracle", || guarded(metrics_oracle)),
        (7, "CLI determinism", || guarded(determinism)),
        (8, "mel contracts", || guarded(mel_contracts)),
        (9, "checkpoint round-trip", || guarded(checkpoint_round_trip)),
        (10, "corpus run (conditional)", || {
            match panic::catch_unwind(corpus_run) {
                Ok(Ok(Some(d))) => Status::Pass(d),
                Ok(Ok(None)) => Status::Skip("set FSER_CORPUS_DIR and FSER_CORPUS to run".into()),
                Ok(Err(e)) => Status::Fail(e),
                Err(_) => Status::Fail("panicked".into()),
            }
        }),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let line = match run() {
            Status::Pass(d) => format!("PASS  criterion {n:>2} {name}: {d}"),
            Status::Fail(d) => {
                failed += 1;
                format!("FAIL  criterion {n:>2} {name}: {d}")
            }
            Status::Skip(d) => format!("SKIP  criterion {n:>2} {name}: {d}"),
        };
        println!("{line}");
    }
    if failed > 0 {
        eprintln!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
