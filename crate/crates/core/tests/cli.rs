mod common;

use std::fs;

use common::*;
use fser::dataset::{DatasetManifest, LabelMap, Split};

#[test]
fn full_pipeline_on_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let out = run_full_pipeline(root);

    let manifest = DatasetManifest::load(root.join("manifest.csv"), &LabelMap::builtin()).unwrap();
    assert_eq!(manifest.originals().count(), 24);
    let (train, val, test) = (
        manifest.originals().filter(|r| r.split == Split::Train).count(),
        manifest.count(Split::Val),
        manifest.count(Split::Test),
    );
    assert_eq!(train + val + test, 24);
    assert_eq!(manifest.count(Split::Train), train * 3);
    assert!(root.join("images/corpus__anger_00.ppm").exists());
    assert!(
        root.join("images/corpus__anger_00_aug1.ppm").exists()
            || manifest
                .in_split(Split::Train)
                .all(|r| !r.audio_path.ends_with("anger_00.wav"))
    );

    let log = fs::read_to_string(root.join("train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3, "{log}");
    assert!(root.join("model.fser").exists());

    let confusion = fs::read_to_string(root.join("reports/confusion.csv")).unwrap();
    let rows: Vec<&str> = confusion.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').count() == 9), "{confusion}");
    assert!(root.join("reports/report.csv").exists());
    assert!(root.join("reports/roc.csv").exists());
    assert!(out[5].contains("accuracy"), "{}", out[5]);

    let predict = &out[6];
    assert!(predict.contains("corpus/anger_00.wav: "), "{predict}");
    assert_eq!(predict.lines().count(), 18);
}

#[test]
fn featurize_is_idempotent_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_corpus(&root.join("corpus"), 1, 0.2);
    assert!(fser(root, &["index", "--corpus", "other", "corpus"]).status.success());
    assert!(fser(root, &["featurize"]).status.success());
    let img = root.join("images/corpus__calm_00.ppm");
    let before = fs::metadata(&img).unwrap().modified().unwrap();
    let bytes = fs::read(&img).unwrap();

    let again = fser(root, &["featurize"]);
    assert!(again.status.success());
    assert!(
        stdout(&again).contains("0 rendered, 8 already present"),
        "{}",
        stdout(&again)
    );
    assert_eq!(fs::metadata(&img).unwrap().modified().unwrap(), before);

    let forced = fser(root, &["featurize", "--force"]);
    assert!(stdout(&forced).contains("8 rendered"));
    assert_eq!(fs::read(&img).unwrap(), bytes);

    fs::write(root.join("corpus/anger_00.wav"), b"not a wav").unwrap();
    let failed = fser(root, &["featurize", "--force"]);
    assert_eq!(failed.status.code(), Some(1));
    assert!(stderr(&failed).contains("corpus/anger_00.wav"), "{}", stderr(&failed));
}

#[test]
fn stages_require_their_predecessors() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_corpus(&root.join("corpus"), 1, 0.2);
    assert!(fser(root, &["index", "--corpus", "other", "corpus"]).status.success());

    let split = fser(root, &["split"]);
    assert_eq!(split.status.code(), Some(2));
    assert!(stderr(&split).contains("needs `featurize`"), "{}", stderr(&split));

    assert!(fser(root, &["featurize"]).status.success());
    let train = fser(root, &["train"]);
    assert_eq!(train.status.code(), Some(2));
    assert!(stderr(&train).contains("needs `split`"), "{}", stderr(&train));

    let eval = fser(root, &["evaluate"]);
    assert!(stderr(&eval).contains("needs `split`"), "{}", stderr(&eval));

    let predict = fser(root, &["predict", "corpus/anger_00.wav"]);
    assert!(stderr(&predict).contains("needs `train`"), "{}", stderr(&predict));
}

#[test]
fn predict_reports_short_clip_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_corpus(&root.join("corpus"), 1, 0.2);
    fs::write(root.join("cfg"), "epochs = 0\n").unwrap();
    for args in [
        &["index", "--corpus", "other", "corpus"][..],
        &["featurize"],
        &["split"],
        &["--config", "cfg", "train"],
    ] {
        let o = fser(root, args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    let short = root.join("short.wav");
    fser::audio_io::write_wav(&fser::audio_io::AudioClip::new(vec![0.1; 300], SR), &short).unwrap();
    let o = fser(root, &["--config", "cfg", "predict", "short.wav", "corpus/calm_00.wav"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("short.wav") && err.contains("300"), "{err}");
    assert!(stdout(&o).contains("corpus/calm_00.wav: "));
}

#[test]
fn config_precedence_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("a.cfg"), "seed = 5\nepochs = 7\n").unwrap();
    let o = fser(
        root,
        &["--config", "a.cfg", "--seed", "9", "--set", "n_mels=32", "config"],
    );
    let text = stdout(&o);
    assert!(
        text.contains("seed = 9\n") && text.contains("epochs = 7\n") && text.contains("n_mels = 32\n"),
        "{text}"
    );

    fs::write(root.join("bad.cfg"), "learning_rat = 0.1\n").unwrap();
    let o = fser(root, &["--config", "bad.cfg", "config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rat"));
}

#[test]
fn index_refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_corpus(&root.join("corpus"), 1, 0.1);
    fs::write(root.join("corpus/mystery.wav"), b"").unwrap();
    let first = fser(root, &["index", "--corpus", "other", "corpus"]);
    // the unlabeled file is reported but the rest is indexed
    assert_eq!(first.status.code(), Some(1));
    assert!(stderr(&first).contains("mystery.wav"));
    assert!(stdout(&first).contains("indexed 8 file(s)"));
    assert_eq!(
        fser(root, &["index", "--corpus", "other", "corpus"]).status.code(),
        Some(2)
    );
    assert!(
        fser(root, &["index", "--corpus", "other", "corpus", "--force"])
            .status
            .code()
            == Some(1)
    );
}

#[test]
fn resumed_training_matches_uninterrupted() {
    let run = |epoch_steps: &[&str]| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write_corpus(&root.join("corpus"), 2, 0.2);
        for args in [&["index", "--corpus", "other", "corpus"][..], &["featurize"], &["split"]] {
            assert!(fser(root, args).status.success());
        }
        for epochs in epoch_steps {
            let set = format!("epochs={epochs}");
            let o = fser(root, &["--set", &set, "--set", "batch_size=4", "train"]);
            assert!(o.status.success(), "{}", stderr(&o));
        }
        (
            fs::read(root.join("model.fser")).unwrap(),
            fs::read_to_string(root.join("train_log.csv")).unwrap(),
        )
    };
    let straight = run(&["2"]);
    let resumed = run(&["1", "2"]);
    assert_eq!(straight.1, resumed.1);
    assert!(straight.0 == resumed.0, "checkpoints differ");
}
