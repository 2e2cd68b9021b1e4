//! RIFF/WAVE ingestion: 16-bit PCM, mono or stereo, decoded to `f64` in [-1, 1].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Sample rate every corpus is brought to before feature extraction.
pub const CANONICAL_SAMPLE_RATE: u32 = 48_000;

const PCM_FORMAT_TAG: u16 = 1;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: malformed WAV header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{path}: unsupported encoding: {reason}")]
    UnsupportedEncoding { path: PathBuf, reason: String },
    #[error("{path}: data chunk is empty")]
    EmptyData { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A decoded mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub source_path: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
            source_path: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits_per_sample: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, WavError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| WavError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut clip = decode_wav(&bytes, path)?;
    clip.source_path = path.display().to_string();
    Ok(clip)
}

/// Decodes an in-memory WAV file. `path` is only used in error messages.
pub fn decode_wav(bytes: &[u8], path: &Path) -> Result<AudioClip, WavError> {
    let malformed = |reason: &str| WavError::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE signature"));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = bytes.len() - body_start;
        match id {
            b"fmt " => {
                if size < 16 || size > available {
                    return Err(malformed("fmt chunk too short"));
                }
                let b = &bytes[body_start..];
                fmt = Some(FmtChunk {
                    format_tag: u16_at(b, 0),
                    channels: u16_at(b, 2),
                    sample_rate: u32_at(b, 4),
                    block_align: u16_at(b, 12),
                    bits_per_sample: u16_at(b, 14),
                });
            }
            b"data" => {
                if size > available {
                    return Err(malformed("data chunk truncated"));
                }
                data = Some(&bytes[body_start..body_start + size]);
                break;
            }
            _ => {
                if size > available {
                    return Err(malformed("chunk extends past end of file"));
                }
            }
        }
        // chunks are word aligned
        pos = body_start + size + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| malformed("missing fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("missing data chunk"))?;

    if fmt.format_tag != PCM_FORMAT_TAG {
        return Err(WavError::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason: format!("format tag {} (only PCM is supported)", fmt.format_tag),
        });
    }
    if fmt.bits_per_sample != 16 {
        return Err(WavError::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason: format!("{} bits per sample (only 16 is supported)", fmt.bits_per_sample),
        });
    }
    if !(1..=2).contains(&fmt.channels) {
        return Err(WavError::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason: format!("{} channels (only mono and stereo are supported)", fmt.channels),
        });
    }
    if fmt.sample_rate == 0 {
        return Err(malformed("sample rate is zero"));
    }
    let channels = fmt.channels as usize;
    let frame_bytes = 2 * channels;
    if fmt.block_align as usize != frame_bytes {
        return Err(malformed("block align does not match channel layout"));
    }
    if data.is_empty() {
        return Err(WavError::EmptyData {
            path: path.to_path_buf(),
        });
    }
    if data.len() % frame_bytes != 0 {
        return Err(malformed("data chunk ends mid-frame"));
    }

    let samples = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0)
                .sum();
            sum / channels as f64
        })
        .collect();

    Ok(AudioClip {
        samples,
        sample_rate: fmt.sample_rate,
        source_path: String::new(),
    })
}

/// Encodes a clip as mono 16-bit PCM.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT_TAG.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &clip.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), WavError> {
    let path = path.as_ref();
    let io_err = |source| WavError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(&encode_wav(clip)).map_err(io_err)
}

/// Linear-interpolation resampler. Output length is `round(len · target / source)`.
pub fn resample(clip: &AudioClip, target_rate: u32) -> AudioClip {
    assert!(target_rate > 0, "target sample rate must be positive");
    if clip.sample_rate == target_rate || clip.samples.is_empty() {
        return AudioClip {
            sample_rate: target_rate,
            ..clip.clone()
        };
    }
    let ratio = clip.sample_rate as f64 / target_rate as f64;
    let out_len = ((clip.samples.len() as f64 / ratio).round() as usize).max(1);
    let last = clip.samples.len() - 1;
    let samples = (0..out_len)
        .map(|j| {
            let pos = j as f64 * ratio;
            let i = (pos.floor() as usize).min(last);
            let next = (i + 1).min(last);
            let t = pos - i as f64;
            let (a, b) = (clip.samples[i], clip.samples[next]);
            if t <= 0.0 || i == next {
                a
            } else {
                a + (b - a) * t
            }
        })
        .collect();
    AudioClip {
        samples,
        sample_rate: target_rate,
        source_path: clip.source_path.clone(),
    }
}

/// Scales the clip so that its largest absolute sample is 1.0. All-zero clips pass through.
pub fn peak_normalize(clip: &AudioClip) -> AudioClip {
    let peak = clip.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak == 0.0 || peak == 1.0 {
        return clip.clone();
    }
    AudioClip {
        samples: clip.samples.iter().map(|s| s / peak).collect(),
        sample_rate: clip.sample_rate,
        source_path: clip.source_path.clone(),
    }
}
