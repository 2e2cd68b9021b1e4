//! Emotion taxonomy, corpus label mapping, manifest CSV and stratified splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// The shipped mapping table, `corpus,raw_label,emotion` per line.
pub const DEFAULT_LABEL_MAP: &str = include_str!("../data/label_map.csv");

pub const MANIFEST_HEADER: &str = "audio_path,image_path,corpus,raw_label,label,split,is_augmented";

/// Classes with fewer records than this are reported when splitting.
pub const MIN_STRATIFIABLE: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no mapping for label {raw:?} in corpus {corpus}")]
    UnknownLabel { corpus: Corpus, raw: String },
    #[error("unknown emotion {0:?}")]
    UnknownEmotion(String),
    #[error("unknown corpus {0:?}")]
    UnknownCorpus(String),
    #[error("unknown split {0:?}")]
    UnknownSplit(String),
    #[error("class {label} has only {count} records; stratification is best-effort")]
    ClassTooSmall { label: EmotionLabel, count: usize },
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
    #[error("duplicate audio path {0}")]
    DuplicateAudioPath(String),
    #[error("{0}")]
    InvalidState(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmotionLabel {
    Anger,
    Anxiety,
    Calm,
    Disgust,
    Happiness,
    Neutral,
    Sadness,
    Surprise,
}

impl EmotionLabel {
    pub const COUNT: usize = 8;
    pub const ALL: [EmotionLabel; 8] = [
        EmotionLabel::Anger,
        EmotionLabel::Anxiety,
        EmotionLabel::Calm,
        EmotionLabel::Disgust,
        EmotionLabel::Happiness,
        EmotionLabel::Neutral,
        EmotionLabel::Sadness,
        EmotionLabel::Surprise,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "anger",
            EmotionLabel::Anxiety => "anxiety",
            EmotionLabel::Calm => "calm",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Happiness => "happiness",
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Surprise => "surprise",
        }
    }

    /// Capitalized name as used in reports.
    pub fn title(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "Anger",
            EmotionLabel::Anxiety => "Anxiety",
            EmotionLabel::Calm => "Calm",
            EmotionLabel::Disgust => "Disgust",
            EmotionLabel::Happiness => "Happiness",
            EmotionLabel::Neutral => "Neutral",
            EmotionLabel::Sadness => "Sadness",
            EmotionLabel::Surprise => "Surprise",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|l| l.name() == lower)
            .ok_or_else(|| DatasetError::UnknownEmotion(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Corpus {
    Emodb,
    Emovo,
    Savee,
    Ravdess,
    Other,
}

impl Corpus {
    pub const ALL: [Corpus; 5] = [
        Corpus::Emodb,
        Corpus::Emovo,
        Corpus::Savee,
        Corpus::Ravdess,
        Corpus::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Corpus::Emodb => "emodb",
            Corpus::Emovo => "emovo",
            Corpus::Savee => "savee",
            Corpus::Ravdess => "ravdess",
            Corpus::Other => "other",
        }
    }

    /// Extracts the raw emotion code from a file name following the corpus's naming scheme.
    pub fn raw_label_from_file_name(self, file_name: &str) -> Option<String> {
        let stem = file_name.rsplit_once('.').map_or(file_name, |(s, _)| s);
        match self {
            // 03a01Fa
            Corpus::Emodb => stem.chars().nth(5).map(|c| c.to_string()),
            // dis-f1-b1
            Corpus::Emovo => stem.split('-').next().map(str::to_ascii_lowercase),
            // DC_sa03 or sa03
            Corpus::Savee => {
                let tail = stem.rsplit('_').next()?;
                let letters: String = tail.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
                (!letters.is_empty()).then(|| letters.to_ascii_lowercase())
            }
            // 03-01-05-01-02-01-12
            Corpus::Ravdess => stem.split('-').nth(2).map(str::to_string),
            // anger_0001
            Corpus::Other => {
                let head = stem.split('_').next()?;
                (!head.is_empty()).then(|| head.to_ascii_lowercase())
            }
        }
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Corpus {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|c| c.name() == lower)
            .ok_or_else(|| DatasetError::UnknownCorpus(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Split {
    #[default]
    Unassigned,
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Unassigned => "unassigned",
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "" | "unassigned" => Ok(Split::Unassigned),
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(DatasetError::UnknownSplit(other.to_string())),
        }
    }
}

/// Source-label to emotion table.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    table: BTreeMap<(Corpus, String), EmotionLabel>,
}

impl LabelMap {
    pub fn parse(text: &str, origin: &str) -> Result<Self, DatasetError> {
        let mut table = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |reason: String| DatasetError::Parse {
                path: origin.to_string(),
                line: i + 1,
                reason,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [corpus, raw, emotion] = fields[..] else {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            };
            let corpus: Corpus = corpus.parse().map_err(|e: DatasetError| parse_err(e.to_string()))?;
            let emotion: EmotionLabel = emotion.parse().map_err(|e: DatasetError| parse_err(e.to_string()))?;
            table.insert((corpus, raw.to_ascii_lowercase()), emotion);
        }
        Ok(Self { table })
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_LABEL_MAP, "label_map.csv").expect("shipped label map parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Case-insensitive lookup. Unknown labels are an error, never a guess.
    pub fn map_source_label(&self, corpus: Corpus, raw: &str) -> Result<EmotionLabel, DatasetError> {
        self.table
            .get(&(corpus, raw.trim().to_ascii_lowercase()))
            .copied()
            .ok_or_else(|| DatasetError::UnknownLabel {
                corpus,
                raw: raw.to_string(),
            })
    }

    pub fn raw_labels(&self, corpus: Corpus) -> impl Iterator<Item = &str> {
        self.table
            .keys()
            .filter(move |(c, _)| *c == corpus)
            .map(|(_, raw)| raw.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub audio_path: String,
    pub image_path: Option<String>,
    pub corpus: Corpus,
    pub raw_label: String,
    pub label: EmotionLabel,
    pub split: Split,
    pub is_augmented: bool,
}

impl SampleRecord {
    pub fn new(
        audio_path: impl Into<String>,
        corpus: Corpus,
        raw_label: impl Into<String>,
        label: EmotionLabel,
    ) -> Self {
        Self {
            audio_path: audio_path.into(),
            image_path: None,
            corpus,
            raw_label: raw_label.into(),
            label,
            split: Split::Unassigned,
            is_augmented: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub records: Vec<SampleRecord>,
    pub seed: u64,
}

impl DatasetManifest {
    pub fn new(records: Vec<SampleRecord>) -> Self {
        Self { records, seed: 0 }
    }

    /// Parses manifest CSV. An empty `label` column is filled in from `labels`.
    pub fn parse(text: &str, origin: &str, labels: &LabelMap) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
            _ => {
                return Err(DatasetError::Parse {
                    path: origin.to_string(),
                    line: 1,
                    reason: format!("expected header {MANIFEST_HEADER:?}"),
                })
            }
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| DatasetError::Parse {
                path: origin.to_string(),
                line: i + 1,
                reason,
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(err(format!("expected 7 fields, found {}", f.len())));
            }
            let wrap = |e: DatasetError| err(e.to_string());
            let corpus: Corpus = f[2].parse().map_err(wrap)?;
            let mapped = labels.map_source_label(corpus, f[3]).map_err(wrap)?;
            let label = if f[4].is_empty() {
                mapped
            } else {
                let given: EmotionLabel = f[4].parse().map_err(wrap)?;
                if given != mapped {
                    return Err(err(format!(
                        "label {given} disagrees with mapping of {:?} ({mapped})",
                        f[3]
                    )));
                }
                given
            };
            let is_augmented = match f[6] {
                "" | "false" | "0" => false,
                "true" | "1" => true,
                other => return Err(err(format!("bad is_augmented value {other:?}"))),
            };
            records.push(SampleRecord {
                audio_path: f[0].to_string(),
                image_path: (!f[1].is_empty()).then(|| f[1].to_string()),
                corpus,
                raw_label: f[3].to_string(),
                label,
                split: f[5].parse().map_err(wrap)?,
                is_augmented,
            });
        }
        let manifest = Self { records, seed: 0 };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.audio_path,
                r.image_path.as_deref().unwrap_or(""),
                r.corpus,
                r.raw_label,
                r.label,
                r.split,
                r.is_augmented
            ));
        }
        out
    }

    pub fn load(path: impl AsRef<Path>, labels: &LabelMap) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string(), labels)
    }

    /// Writes via a temporary sibling and rename so readers never see a partial file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        self.validate()?;
        let io_err = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, self.to_csv()).map_err(io_err)?;
        fs::rename(&tmp, path).map_err(io_err)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for r in &self.records {
            for field in [
                Some(r.audio_path.as_str()),
                r.image_path.as_deref(),
                Some(r.raw_label.as_str()),
            ]
            .into_iter()
            .flatten()
            {
                if field.contains(',') || field.contains('\n') {
                    return Err(DatasetError::InvalidState(format!(
                        "field {field:?} contains a comma or newline"
                    )));
                }
            }
            if r.is_augmented && r.split != Split::Train {
                return Err(DatasetError::InvalidState(format!(
                    "augmented record {} is in split {}",
                    r.image_path.as_deref().unwrap_or(&r.audio_path),
                    r.split
                )));
            }
            if !r.is_augmented && !seen.insert(r.audio_path.as_str()) {
                return Err(DatasetError::DuplicateAudioPath(r.audio_path.clone()));
            }
        }
        Ok(())
    }

    pub fn originals(&self) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(|r| !r.is_augmented)
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.in_split(split).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub counts: [usize; EmotionLabel::COUNT],
    pub total: usize,
}

impl ClassDistribution {
    /// `100·count/total`, rounded half-up to 2 decimals; 0 for an empty manifest.
    pub fn percentage(&self, label: EmotionLabel) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        // integer arithmetic keeps the half-up rounding exact
        let hundredths =
            (self.counts[label.ordinal()] as u128 * 20_000 + self.total as u128) / (2 * self.total as u128);
        hundredths as f64 / 100.0
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<10} {:>16}\n", "Emotion", "Amount (%)");
        for label in EmotionLabel::ALL {
            out.push_str(&format!(
                "{:<10} {:>7} ({:>6.2}%)\n",
                label.title(),
                self.counts[label.ordinal()],
                self.percentage(label)
            ));
        }
        out.push_str(&format!("{:<10} {:>7} (100%)\n", "Total", self.total));
        out
    }
}

/// Per-class counts over non-augmented records.
pub fn class_distribution(manifest: &DatasetManifest) -> ClassDistribution {
    let mut counts = [0; EmotionLabel::COUNT];
    for r in manifest.originals() {
        counts[r.label.ordinal()] += 1;
    }
    ClassDistribution {
        counts,
        total: counts.iter().sum(),
    }
}

/// `round(n / 5)` with halves rounded up.
fn fifth_rounded(n: usize) -> usize {
    (2 * n + 5) / 10
}

/// Largest-remainder allocation of `round(total/5)` slots across classes of the
/// given sizes. Each class gets `floor(n/5)` or one more; ties in the
/// remainder go to the lower class ordinal.
pub fn allocate_fifth(sizes: &[usize]) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = fifth_rounded(total);
    let mut quota: Vec<usize> = sizes.iter().map(|n| n / 5).collect();
    let mut residual = target - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // remainder n % 5 is the fractional part in fifths
    order.sort_by(|&a, &b| (sizes[b] % 5).cmp(&(sizes[a] % 5)).then(a.cmp(&b)));
    for &c in &order {
        if residual == 0 {
            break;
        }
        if !sizes[c].is_multiple_of(5) {
            quota[c] += 1;
            residual -= 1;
        }
    }
    quota
}

#[derive(Debug, Default)]
pub struct SplitReport {
    /// Classes below [`MIN_STRATIFIABLE`].
    pub warnings: Vec<DatasetError>,
}

/// Stratified test/val/train assignment: a fifth of each class goes to test,
/// a fifth of each remaining pool to val, the rest to train.
pub fn split_dataset(manifest: &mut DatasetManifest, seed: u64) -> Result<SplitReport, DatasetError> {
    if manifest
        .records
        .iter()
        .any(|r| r.is_augmented || r.split != Split::Unassigned)
    {
        return Err(DatasetError::InvalidState(
            "split requires only unassigned, non-augmented records".into(),
        ));
    }
    manifest.seed = seed;

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); EmotionLabel::COUNT];
    for (i, r) in manifest.records.iter().enumerate() {
        by_class[r.label.ordinal()].push(i);
    }

    let mut report = SplitReport::default();
    for label in EmotionLabel::ALL {
        let count = by_class[label.ordinal()].len();
        if count > 0 && count < MIN_STRATIFIABLE {
            let w = DatasetError::ClassTooSmall { label, count };
            log::warn!("{w}");
            report.warnings.push(w);
        }
    }

    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let test_quota = allocate_fifth(&sizes);
    let pools: Vec<usize> = sizes.iter().zip(&test_quota).map(|(n, t)| n - t).collect();
    let val_quota = allocate_fifth(&pools);

    for (c, members) in by_class.iter_mut().enumerate() {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(c as u64).to_le_bytes());
        members.shuffle(&mut ChaCha8Rng::from_seed(key));
        for (rank, &idx) in members.iter().enumerate() {
            manifest.records[idx].split = if rank < test_quota[c] {
                Split::Test
            } else if rank < test_quota[c] + val_quota[c] {
                Split::Val
            } else {
                Split::Train
            };
        }
    }
    Ok(report)
}

/// Paper corpus class sizes, by class ordinal.
pub const TABLE1_COUNTS: [usize; 8] = [463, 405, 273, 382, 407, 379, 398, 336];

/// A manifest of synthetic records with the given per-class counts.
pub fn synthetic_manifest(counts: &[usize; EmotionLabel::COUNT]) -> DatasetManifest {
    let mut records = Vec::new();
    for label in EmotionLabel::ALL {
        for i in 0..counts[label.ordinal()] {
            records.push(SampleRecord::new(
                format!("synthetic/{}_{i:04}.wav", label.name()),
                Corpus::Other,
                label.name(),
                label,
            ));
        }
    }
    DatasetManifest::new(records)
}
