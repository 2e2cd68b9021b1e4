//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::audio_io::CANONICAL_SAMPLE_RATE;
use crate::augment::AugmentConfig;
use crate::dsp::{DEFAULT_HOP, DEFAULT_N_FFT, DEFAULT_N_MELS};
use crate::nn::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}:{line}: {reason}")]
    Syntax {
        origin: String,
        line: usize,
        reason: String,
    },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop_length: usize,
    pub n_mels: usize,
    pub peak_normalize: bool,
    pub width_shift: f64,
    pub height_shift: f64,
    pub zoom_min: f64,
    pub zoom_max: f64,
    pub horizontal_flip: bool,
    pub variants_per_image: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub shuffle: bool,
    pub seed: u64,
    /// Paths below are relative to the manifest's directory.
    pub image_dir: String,
    pub checkpoint: String,
    pub train_log: String,
    pub report_dir: String,
    /// Empty means the built-in table.
    pub label_map: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let aug = AugmentConfig::default();
        let train = TrainConfig::default();
        Self {
            sample_rate: CANONICAL_SAMPLE_RATE,
            n_fft: DEFAULT_N_FFT,
            hop_length: DEFAULT_HOP,
            n_mels: DEFAULT_N_MELS,
            peak_normalize: true,
            width_shift: aug.width_shift_frac,
            height_shift: aug.height_shift_frac,
            zoom_min: aug.zoom_range.0,
            zoom_max: aug.zoom_range.1,
            horizontal_flip: aug.allow_hflip,
            variants_per_image: aug.variants_per_image,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            shuffle: train.shuffle,
            seed: 0,
            image_dir: "images".into(),
            checkpoint: "model.fser".into(),
            train_log: "train_log.csv".into(),
            report_dir: "reports".into(),
            label_map: String::new(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

macro_rules! config_keys {
    ($($field:ident),* $(,)?) => {
        pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

        /// Sets one key from its textual value.
        pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
            match key {
                $(stringify!($field) => self.$field = parse_value(key, value)?,)*
                _ => return Err(ConfigError::UnknownKey(key.into())),
            }
            Ok(())
        }

        /// Every key in declaration order, in the file format `parse` reads.
        pub fn to_text(&self) -> String {
            let mut out = String::new();
            $(let _ = writeln!(out, "{} = {}", stringify!($field), self.$field);)*
            out
        }
    };
}

impl PipelineConfig {
    config_keys!(
        sample_rate,
        n_fft,
        hop_length,
        n_mels,
        peak_normalize,
        width_shift,
        height_shift,
        zoom_min,
        zoom_max,
        horizontal_flip,
        variants_per_image,
        batch_size,
        learning_rate,
        epochs,
        shuffle,
        seed,
        image_dir,
        checkpoint,
        train_log,
        report_dir,
        label_map,
    );

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |reason: String| ConfigError::Syntax {
                origin: origin.into(),
                line: i + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, got {line:?}")))?;
            self.set(key.trim(), value.trim()).map_err(|e| syntax(e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text, origin)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            width_shift_frac: self.width_shift,
            height_shift_frac: self.height_shift,
            zoom_range: (self.zoom_min, self.zoom_max),
            allow_hflip: self.horizontal_flip,
            variants_per_image: self.variants_per_image,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            seed: self.seed,
            shuffle: self.shuffle,
        }
    }
}
