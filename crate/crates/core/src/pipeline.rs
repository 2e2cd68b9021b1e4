//! Stage commands over a manifest. Every path stored in the manifest or the
//! config is relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::audio_io::{self, AudioClip, WavError};
use crate::augment::{self, AugmentConfigError};
use crate::config::{ConfigError, PipelineConfig};
use crate::dataset::{
    class_distribution, split_dataset, Corpus, DatasetError, DatasetManifest, EmotionLabel, LabelMap, SampleRecord,
    Split,
};
use crate::dsp::{build_mel_filterbank, mel_spectrogram_with, DspError, MelFilterbank, MelSpectrogram};
use crate::imaging::{self, Colormap, ImageError, SpectroImage, CHANNELS, IMAGE_SIZE};
use crate::metrics::{self, MetricsError};
use crate::nn::{
    self, build_fser_network, load_checkpoint, save_checkpoint, CheckpointError, LabeledSet, NnError, Trainer,
    EPOCH_LOG_HEADER, FSER_INPUT_SHAPE,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{command} needs `{stage}` to run first: {detail}")]
    MissingStage {
        command: &'static str,
        stage: &'static str,
        detail: String,
    },
    #[error("{path}: {source}")]
    Dsp {
        path: String,
        #[source]
        source: DspError,
    },
    #[error("{0} already exists; pass --force to overwrite")]
    Exists(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Augment(#[from] AugmentConfigError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// A command that processes many items reports per-item failures instead of
/// stopping at the first one.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub failures: Vec<(String, String)>,
}

impl Outcome {
    fn line(&mut self, text: impl AsRef<str>) {
        self.stdout.push_str(text.as_ref());
        self.stdout.push('\n');
    }

    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failure_summary(&self) -> String {
        let mut out = format!("{} item(s) failed:\n", self.failures.len());
        for (path, reason) in &self.failures {
            let _ = writeln!(out, "  {path}: {reason}");
        }
        out
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Flattens a manifest audio path into a file stem: `a/b/c.wav` → `a__b__c`.
pub fn image_stem(audio_path: &str) -> String {
    let no_ext = match audio_path.rsplit_once('.') {
        Some((s, ext)) if !ext.contains(['/', '\\']) => s,
        _ => audio_path,
    };
    no_ext
        .trim_start_matches(['/', '\\'])
        .replace(['/', '\\'], "__")
        .replace(':', "_")
}

/// Audio → mel-spectrogram → 64×64 image, following the pipeline config.
pub struct Featurizer {
    cfg: PipelineConfig,
    filterbank: MelFilterbank,
    colormap: Colormap,
}

impl Featurizer {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        let filterbank = build_mel_filterbank(
            cfg.sample_rate,
            cfg.n_fft,
            cfg.n_mels,
            0.0,
            cfg.sample_rate as f64 / 2.0,
        )
        .map_err(|source| PipelineError::Dsp {
            path: "<config>".into(),
            source,
        })?;
        Ok(Self {
            cfg: cfg.clone(),
            filterbank,
            colormap: Colormap::spectro(),
        })
    }

    pub fn mel(&self, clip: &AudioClip) -> Result<MelSpectrogram> {
        let mut clip = if clip.sample_rate == self.cfg.sample_rate {
            clip.clone()
        } else {
            audio_io::resample(clip, self.cfg.sample_rate)
        };
        if self.cfg.peak_normalize {
            clip = audio_io::peak_normalize(&clip);
        }
        mel_spectrogram_with(&clip, &self.filterbank, self.cfg.hop_length).map_err(|source| PipelineError::Dsp {
            path: clip.source_path.clone(),
            source,
        })
    }

    pub fn image(&self, mel: &MelSpectrogram) -> SpectroImage {
        imaging::render(mel, &self.colormap)
    }

    /// The image as the network sees it after a PPM round trip.
    pub fn quantized(&self, clip: &AudioClip) -> Result<SpectroImage> {
        let img = self.image(&self.mel(clip)?);
        Ok(imaging::decode_ppm(
            &imaging::encode_ppm(&img),
            Path::new(&clip.source_path),
        )?)
    }
}

pub struct Pipeline {
    pub manifest_path: PathBuf,
    pub root: PathBuf,
    pub cfg: PipelineConfig,
    pub force: bool,
    pub dump_mel: bool,
    labels: LabelMap,
}

impl Pipeline {
    pub fn new(manifest_path: impl Into<PathBuf>, cfg: PipelineConfig, force: bool) -> Result<Self> {
        let manifest_path = manifest_path.into();
        let root = match manifest_path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let labels = if cfg.label_map.is_empty() {
            LabelMap::builtin()
        } else {
            LabelMap::load(root.join(&cfg.label_map))?
        };
        Ok(Self {
            manifest_path,
            root,
            cfg,
            force,
            dump_mel: false,
            labels,
        })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn load_manifest(&self) -> Result<DatasetManifest> {
        Ok(DatasetManifest::load(&self.manifest_path, &self.labels)?)
    }

    fn save_manifest(&self, manifest: &DatasetManifest) -> Result<()> {
        Ok(manifest.save(&self.manifest_path)?)
    }

    fn image_rel(&self, stem: &str) -> String {
        format!("{}/{stem}.ppm", self.cfg.image_dir.trim_end_matches('/'))
    }

    /// Builds a manifest from the WAV files under `dir`, labelled by the
    /// corpus's file naming scheme.
    pub fn index(&self, corpus: Corpus, dir: &Path) -> Result<Outcome> {
        if self.manifest_path.exists() && !self.force {
            return Err(PipelineError::Exists(self.manifest_path.display().to_string()));
        }
        let mut files = Vec::new();
        collect_wavs(dir, &mut files)?;
        files.sort();
        let mut out = Outcome::default();
        let mut records = Vec::new();
        let root = fs::canonicalize(&self.root).map_err(io_err(&self.root))?;
        for file in files {
            let shown = file.display().to_string();
            let abs = fs::canonicalize(&file).map_err(io_err(&file))?;
            let rel = abs.strip_prefix(&root).unwrap_or(&abs);
            let audio_path = rel.to_string_lossy().replace('\\', "/");
            let name = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let Some(raw) = corpus.raw_label_from_file_name(&name) else {
                out.failures.push((shown, "file name carries no emotion code".into()));
                continue;
            };
            match self.labels.map_source_label(corpus, &raw) {
                Ok(label) => records.push(SampleRecord::new(audio_path, corpus, raw, label)),
                Err(e) => out.failures.push((shown, e.to_string())),
            }
        }
        let manifest = DatasetManifest::new(records);
        self.save_manifest(&manifest)?;
        out.line(format!("indexed {} file(s) from {}", manifest.records.len(), corpus));
        out.line(class_distribution(&manifest).render().trim_end());
        Ok(out)
    }

    pub fn featurize(&self) -> Result<Outcome> {
        let mut manifest = self.load_manifest()?;
        let featurizer = Featurizer::new(&self.cfg)?;
        let mut out = Outcome::default();
        let (mut rendered, mut skipped) = (0, 0);
        for record in manifest.records.iter_mut().filter(|r| !r.is_augmented) {
            let stem = image_stem(&record.audio_path);
            let rel = self.image_rel(&stem);
            let target = self.resolve(&rel);
            if target.exists() && !self.force {
                record.image_path = Some(rel);
                skipped += 1;
                continue;
            }
            let result = (|| -> Result<()> {
                let clip = audio_io::load_wav(self.resolve(&record.audio_path))?;
                let mel = featurizer.mel(&clip)?;
                if self.dump_mel {
                    let mel_path = self.resolve(&format!("{}/{stem}.mel.csv", self.cfg.image_dir));
                    write_atomic(&mel_path, mel.to_csv().as_bytes())?;
                }
                write_atomic(&target, &imaging::encode_ppm(&featurizer.image(&mel)))
            })();
            match result {
                Ok(()) => {
                    record.image_path = Some(rel);
                    rendered += 1;
                }
                Err(e) => out.failures.push((record.audio_path.clone(), e.to_string())),
            }
        }
        self.save_manifest(&manifest)?;
        out.line(format!("featurize: {rendered} rendered, {skipped} already present"));
        Ok(out)
    }

    pub fn split(&self) -> Result<Outcome> {
        let mut manifest = self.load_manifest()?;
        if let Some(r) = manifest.originals().find(|r| r.image_path.is_none()) {
            return Err(PipelineError::MissingStage {
                command: "split",
                stage: "featurize",
                detail: format!("{} has no image", r.audio_path),
            });
        }
        let mut out = Outcome::default();
        let assigned = manifest.records.iter().any(|r| r.split != Split::Unassigned);
        if assigned && !self.force {
            out.line("split: manifest already split; pass --force to redo");
        } else {
            manifest.records.retain(|r| !r.is_augmented);
            for r in &mut manifest.records {
                r.split = Split::Unassigned;
            }
            let report = split_dataset(&mut manifest, self.cfg.seed)?;
            for w in report.warnings {
                out.line(format!("warning: {w}"));
            }
            self.save_manifest(&manifest)?;
        }
        out.line(format!(
            "split: {} train, {} val, {} test",
            manifest.count(Split::Train),
            manifest.count(Split::Val),
            manifest.count(Split::Test)
        ));
        out.line(class_distribution(&manifest).render().trim_end());
        Ok(out)
    }

    fn require_split(&self, manifest: &DatasetManifest, command: &'static str) -> Result<()> {
        match manifest.originals().find(|r| r.split == Split::Unassigned) {
            Some(r) => Err(PipelineError::MissingStage {
                command,
                stage: "split",
                detail: format!("{} has no split", r.audio_path),
            }),
            None if manifest.records.is_empty() => Err(PipelineError::MissingStage {
                command,
                stage: "index",
                detail: "manifest is empty".into(),
            }),
            None => Ok(()),
        }
    }

    pub fn augment(&self) -> Result<Outcome> {
        let mut manifest = self.load_manifest()?;
        self.require_split(&manifest, "augment")?;
        let aug = self.cfg.augment_config();
        aug.validate()?;
        let mut out = Outcome::default();
        if manifest.records.iter().any(|r| r.is_augmented) {
            if !self.force {
                out.line(format!(
                    "augment: already augmented; {} train rows (pass --force to redo)",
                    manifest.count(Split::Train)
                ));
                return Ok(out);
            }
            manifest.records.retain(|r| !r.is_augmented);
        }
        let sources: Vec<SampleRecord> = manifest.in_split(Split::Train).cloned().collect();
        let plan = augmentation_plan(&manifest, &self.cfg.image_dir, aug.variants_per_image);
        let per = aug.variants_per_image.max(1);
        let mut added = Vec::new();
        for (index, (record, rows)) in sources.iter().zip(plan.chunks(per)).enumerate() {
            let Some(image) = &record.image_path else {
                return Err(PipelineError::MissingStage {
                    command: "augment",
                    stage: "featurize",
                    detail: format!("{} has no image", record.audio_path),
                });
            };
            let result = (|| -> Result<()> {
                let img = imaging::read_ppm(self.resolve(image))?;
                for (variant, row) in augment::generate(&img, index as u64, &aug)?.iter().zip(rows) {
                    let rel = row.image_path.as_deref().expect("planned rows carry an image path");
                    write_atomic(&self.resolve(rel), &imaging::encode_ppm(variant))?;
                }
                Ok(())
            })();
            match result {
                Ok(()) => added.extend_from_slice(rows),
                Err(e) => out.failures.push((image.clone(), e.to_string())),
            }
        }
        let n_added = added.len();
        manifest.records.extend(added);
        self.save_manifest(&manifest)?;
        out.line(format!(
            "augment: {n_added} variants added; {} train rows",
            manifest.count(Split::Train)
        ));
        Ok(out)
    }

    fn load_set<'a>(
        &self,
        records: impl Iterator<Item = &'a SampleRecord>,
        command: &'static str,
    ) -> Result<LabeledSet> {
        let mut set = LabeledSet::new(&FSER_INPUT_SHAPE);
        for r in records {
            let image = r.image_path.as_ref().ok_or_else(|| PipelineError::MissingStage {
                command,
                stage: "featurize",
                detail: format!("{} has no image", r.audio_path),
            })?;
            set.push(&imaging::read_ppm(self.resolve(image))?.to_chw(), r.label.ordinal());
        }
        Ok(set)
    }

    /// Trains from scratch, or resumes from an existing checkpoint unless forced.
    pub fn train(&self) -> Result<Outcome> {
        let manifest = self.load_manifest()?;
        self.require_split(&manifest, "train")?;
        let train = self.load_set(manifest.in_split(Split::Train), "train")?;
        let val = self.load_set(manifest.in_split(Split::Val), "train")?;
        let ckpt_path = self.resolve(&self.cfg.checkpoint);
        let log_path = self.resolve(&self.cfg.train_log);
        let tcfg = self.cfg.train_config();

        let (mut trainer, mut log_text) = if ckpt_path.exists() && !self.force {
            let ckpt = load_checkpoint(&ckpt_path)?;
            let text = fs::read_to_string(&log_path).unwrap_or_else(|_| format!("{EPOCH_LOG_HEADER}\n"));
            (Trainer::resume(ckpt, tcfg)?, text)
        } else {
            (
                Trainer::new(build_fser_network(self.cfg.seed), tcfg)?,
                format!("{EPOCH_LOG_HEADER}\n"),
            )
        };
        let mut out = Outcome::default();
        let start = trainer.epoch();
        if start >= self.cfg.epochs as u64 && ckpt_path.exists() {
            out.line(format!("train: checkpoint already at epoch {start}"));
            return Ok(out);
        }
        while trainer.epoch() < self.cfg.epochs as u64 {
            let entry = trainer.run_epoch(&train, &val)?;
            let line = nn::epoch_log_csv(&[entry]);
            log_text.push_str(line.lines().nth(1).unwrap_or_default());
            log_text.push('\n');
            save_checkpoint(&trainer.checkpoint(), &ckpt_path)?;
            write_atomic(&log_path, log_text.as_bytes())?;
        }
        if self.cfg.epochs == 0 {
            save_checkpoint(&trainer.checkpoint(), &ckpt_path)?;
            write_atomic(&log_path, log_text.as_bytes())?;
        }
        out.line(format!(
            "train: epochs {}..{} on {} train / {} val images",
            start,
            trainer.epoch(),
            train.len(),
            val.len()
        ));
        if let Some(last) = trainer.log().last() {
            out.line(format!(
                "train: final train_loss {:.6} train_acc {:.6} val_loss {:.6} val_acc {:.6}",
                last.train_loss, last.train_acc, last.val_loss, last.val_acc
            ));
        }
        Ok(out)
    }

    fn require_checkpoint(&self, command: &'static str) -> Result<nn::Network> {
        let path = self.resolve(&self.cfg.checkpoint);
        if !path.exists() {
            return Err(PipelineError::MissingStage {
                command,
                stage: "train",
                detail: format!("no checkpoint at {}", path.display()),
            });
        }
        Ok(load_checkpoint(&path)?.network)
    }

    pub fn evaluate(&self) -> Result<Outcome> {
        let manifest = self.load_manifest()?;
        self.require_split(&manifest, "evaluate")?;
        let net = self.require_checkpoint("evaluate")?;
        let test_records: Vec<&SampleRecord> = manifest.in_split(Split::Test).collect();
        if test_records.is_empty() {
            return Err(PipelineError::MissingStage {
                command: "evaluate",
                stage: "split",
                detail: "test split is empty".into(),
            });
        }
        let set = self.load_set(test_records.iter().copied(), "evaluate")?;
        let indices: Vec<usize> = (0..set.len()).collect();
        let mut scores = Vec::with_capacity(set.len());
        for chunk in indices.chunks(self.cfg.batch_size.max(1)) {
            scores.extend(net.predict(&set.batch(chunk))?);
        }
        let expected = set.labels().to_vec();
        let predicted: Vec<usize> = scores.iter().map(|p| p.class).collect();
        let probs: Vec<Vec<f64>> = scores.into_iter().map(|p| p.probabilities).collect();
        let n = EmotionLabel::COUNT;
        let cm = metrics::confusion_matrix(&expected, &predicted, n)?;
        let auc = metrics::roc_auc_ovr(&probs, &expected, n)?;
        let report = metrics::precision_recall_f1(&cm, metrics::emotion_class_names()).with_auc(&auc);
        let names: Vec<&str> = EmotionLabel::ALL.iter().map(|l| l.name()).collect();
        let normalized = metrics::normalize_rows(&cm);

        let dir = self.resolve(&self.cfg.report_dir);
        write_atomic(&dir.join("report.csv"), metrics::report_to_csv(&report).as_bytes())?;
        write_atomic(&dir.join("confusion.csv"), normalized.to_csv(&names).as_bytes())?;
        write_atomic(&dir.join("roc.csv"), roc_csv(&probs, &expected).as_bytes())?;
        let mut pred_csv = String::from("image_path,expected,predicted");
        for name in &names {
            let _ = write!(pred_csv, ",p_{name}");
        }
        pred_csv.push('\n');
        for ((r, p), (&e, &c)) in test_records.iter().zip(&probs).zip(expected.iter().zip(&predicted)) {
            let _ = write!(
                pred_csv,
                "{},{},{}",
                r.image_path.as_deref().unwrap_or(""),
                names[e],
                names[c]
            );
            for v in p {
                let _ = write!(pred_csv, ",{v}");
            }
            pred_csv.push('\n');
        }
        write_atomic(&dir.join("predictions.csv"), pred_csv.as_bytes())?;

        let mut out = Outcome::default();
        out.line(metrics::render_report(&report).trim_end());
        out.line("");
        out.line("confusion matrix (row-normalized %, rows = expected):");
        out.line(normalized.to_csv(&names).trim_end());
        Ok(out)
    }

    /// Class distribution and argmax for each WAV file; paths are taken as given.
    pub fn predict(&self, wavs: &[PathBuf]) -> Result<Outcome> {
        let net = self.require_checkpoint("predict")?;
        let featurizer = Featurizer::new(&self.cfg)?;
        let mut out = Outcome::default();
        for path in wavs {
            let result = (|| -> Result<nn::Prediction> {
                let clip = audio_io::load_wav(path)?;
                let img = featurizer.quantized(&clip)?;
                let x = nn::Tensor::from_vec(&[1, CHANNELS, IMAGE_SIZE, IMAGE_SIZE], img.to_chw())?;
                Ok(net.predict(&x)?.remove(0))
            })();
            match result {
                Ok(p) => {
                    let label = p.label().map_or("?", EmotionLabel::name);
                    out.line(format!("{}: {label}", path.display()));
                    for (l, v) in EmotionLabel::ALL.iter().zip(&p.probabilities) {
                        out.line(format!("  {:<10} {v:.6}", l.name()));
                    }
                }
                Err(e) => out.failures.push((path.display().to_string(), e.to_string())),
            }
        }
        Ok(out)
    }
}

/// Rows `augment` appends: `variants` per train record, in manifest order,
/// named `<stem>_aug<k>.ppm` under `image_dir`.
pub fn augmentation_plan(manifest: &DatasetManifest, image_dir: &str, variants: usize) -> Vec<SampleRecord> {
    let dir = image_dir.trim_end_matches('/');
    manifest
        .in_split(Split::Train)
        .filter(|r| !r.is_augmented)
        .flat_map(|r| {
            let stem = image_stem(&r.audio_path);
            (0..variants).map(move |k| SampleRecord {
                image_path: Some(format!("{dir}/{stem}_aug{k}.ppm")),
                is_augmented: true,
                ..r.clone()
            })
        })
        .collect()
}

fn collect_wavs(dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_dir() {
            collect_wavs(&path, files)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            files.push(path);
        }
    }
    Ok(())
}

/// One-vs-rest ROC points for every class as `class,fpr,tpr` rows.
fn roc_csv(probs: &[Vec<f64>], expected: &[usize]) -> String {
    let mut out = String::from("class,fpr,tpr\n");
    for label in EmotionLabel::ALL {
        let c = label.ordinal();
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let positive: Vec<bool> = expected.iter().map(|&e| e == c).collect();
        for (fpr, tpr) in metrics::roc_curve(&scores, &positive) {
            let _ = writeln!(out, "{},{fpr},{tpr}", label.name());
        }
    }
    out
}
