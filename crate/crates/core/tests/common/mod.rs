#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fser::audio_io::{write_wav, AudioClip};
use fser::dataset::EmotionLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SR: u32 = 48_000;

/// Harmonic tone whose pitch and tremolo depend on the class, plus seeded noise.
pub fn class_tone(label: EmotionLabel, take: u64, len: usize) -> Vec<f64> {
    let k = label.ordinal() as f64;
    let f0 = 180.0 * (k + 1.0);
    let tremolo = 2.0 + k;
    let mut rng = ChaCha8Rng::seed_from_u64(label.ordinal() as u64 * 1000 + take);
    (0..len)
        .map(|i| {
            let t = i as f64 / SR as f64;
            let env = 0.6 + 0.4 * (2.0 * std::f64::consts::PI * tremolo * t).sin();
            let tone = (2.0 * std::f64::consts::PI * f0 * t).sin() + 0.5 * (4.0 * std::f64::consts::PI * f0 * t).sin();
            0.4 * env * tone + 0.01 * rng.random_range(-1.0..1.0)
        })
        .collect()
}

/// Writes `per_class` clips of `seconds` for every emotion as `<label>_<take>.wav`.
pub fn write_corpus(dir: &Path, per_class: u64, seconds: f64) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    let len = (seconds * SR as f64) as usize;
    let mut paths = Vec::new();
    for label in EmotionLabel::ALL {
        for take in 0..per_class {
            let path = dir.join(format!("{}_{take:02}.wav", label.name()));
            write_wav(&AudioClip::new(class_tone(label, take, len), SR), &path).unwrap();
            paths.push(path);
        }
    }
    paths
}

pub fn fser(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fser"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub const SMALL_CONFIG: &str = "\
# short run for tests
epochs = 2
batch_size = 16
variants_per_image = 2
seed = 11
";

/// Runs every stage on a fresh 24-file corpus in `root`; returns the stdout of each.
pub fn run_full_pipeline(root: &Path) -> Vec<String> {
    write_corpus(&root.join("corpus"), 3, 0.5);
    std::fs::write(root.join("run.cfg"), SMALL_CONFIG).unwrap();
    let mut outputs = Vec::new();
    let stages: [&[&str]; 7] = [
        &["index", "--corpus", "other", "corpus"],
        &["featurize"],
        &["split"],
        &["augment"],
        &["train"],
        &["evaluate"],
        &["predict", "corpus/anger_00.wav", "corpus/sadness_01.wav"],
    ];
    for args in stages {
        let mut full = vec!["--config", "run.cfg"];
        full.extend_from_slice(args);
        let o = fser(root, &full);
        assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
        outputs.push(stdout(&o));
    }
    outputs
}
