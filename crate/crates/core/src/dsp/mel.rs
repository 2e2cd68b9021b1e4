use super::{stft, DspError, Spectrogram};
use crate::audio_io::AudioClip;

/// Power floor applied before taking logs.
pub const AMIN: f64 = 1e-10;
/// Dynamic range kept below the loudest cell, in dB.
pub const TOP_DB: f64 = 80.0;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters over the one-sided FFT bins, Slaney area-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// Row-major `[n_mels × n_bins]`.
    pub weights: Vec<f64>,
    pub n_mels: usize,
    pub n_bins: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub sample_rate: u32,
    pub n_fft: usize,
    /// `n_mels + 2` band edges in Hz.
    pub edges_hz: Vec<f64>,
    /// Bands whose support contains no FFT bin center.
    pub empty_bands: Vec<usize>,
}

impl MelFilterbank {
    pub fn row(&self, band: usize) -> &[f64] {
        &self.weights[band * self.n_bins..(band + 1) * self.n_bins]
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.edges_hz[band + 1]
    }

    /// Applies the filterbank to one power-spectrum frame.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        assert_eq!(power.len(), self.n_bins);
        (0..self.n_mels)
            .map(|m| self.row(m).iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// Builds the filterbank. Bands that catch no FFT bin are kept as zero rows,
/// listed in `empty_bands` and logged.
pub fn build_mel_filterbank(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterbank, DspError> {
    if n_mels == 0 {
        return Err(DspError::InvalidParameter("n_mels must be at least 1".into()));
    }
    if n_fft < 2 || !n_fft.is_power_of_two() {
        return Err(DspError::NonPowerOfTwoLength(n_fft));
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(0.0 <= f_min && f_min < f_max && f_max <= nyquist) {
        return Err(DspError::InvalidParameter(format!(
            "need 0 <= f_min < f_max <= {nyquist}, got f_min={f_min}, f_max={f_max}"
        )));
    }

    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(f_min);
    let mel_hi = hz_to_mel(f_max);
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * sample_rate as f64 / n_fft as f64)
        .collect();

    let mut weights = vec![0.0; n_mels * n_bins];
    let mut empty_bands = Vec::new();
    for m in 0..n_mels {
        let (lower, center, upper) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
        let norm = 2.0 / (upper - lower);
        let row = &mut weights[m * n_bins..(m + 1) * n_bins];
        for (w, &f) in row.iter_mut().zip(&bin_hz) {
            let rising = (f - lower) / (center - lower);
            let falling = (upper - f) / (upper - center);
            *w = rising.min(falling).max(0.0) * norm;
        }
        if row.iter().all(|&w| w == 0.0) {
            empty_bands.push(m);
        }
    }
    if !empty_bands.is_empty() {
        log::warn!("mel filterbank (sr={sample_rate}, n_fft={n_fft}, n_mels={n_mels}) has empty bands {empty_bands:?}");
    }

    Ok(MelFilterbank {
        weights,
        n_mels,
        n_bins,
        f_min,
        f_max,
        sample_rate,
        n_fft,
        edges_hz,
        empty_bands,
    })
}

/// Like [`build_mel_filterbank`] but fails on the first empty band.
pub fn build_mel_filterbank_strict(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterbank, DspError> {
    let fb = build_mel_filterbank(sample_rate, n_fft, n_mels, f_min, f_max)?;
    match fb.empty_bands.first() {
        Some(&band) => Err(DspError::DegenerateBand { band }),
        None => Ok(fb),
    }
}

/// dB-scaled mel power, stored band-major: `values[band * n_frames + frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Vec<f64>,
    pub n_mels: usize,
    pub n_frames: usize,
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop_length: usize,
}

impl MelSpectrogram {
    pub fn get(&self, band: usize, frame: usize) -> f64 {
        self.values[band * self.n_frames + frame]
    }

    /// Bands as rows, frames as columns, 6 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for m in 0..self.n_mels {
            let row: Vec<String> = (0..self.n_frames).map(|t| format_sig6(self.get(m, t))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format!("{:.5e}", v);
    // shortest faithful rendering of the 6-digit value
    let parsed: f64 = s.parse().unwrap();
    format!("{parsed}")
}

/// `10·log10(max(S, amin) / max(max S, amin))`, floored at `-TOP_DB`.
pub fn power_to_db(power: &[f64]) -> Vec<f64> {
    let reference = power.iter().fold(AMIN, |m, &v| m.max(v));
    let ref_db = 10.0 * reference.log10();
    power
        .iter()
        .map(|&v| (10.0 * v.max(AMIN).log10() - ref_db).max(-TOP_DB))
        .collect()
}

pub fn mel_spectrogram(
    clip: &AudioClip,
    n_fft: usize,
    hop_length: usize,
    n_mels: usize,
) -> Result<MelSpectrogram, DspError> {
    let fb = build_mel_filterbank(clip.sample_rate, n_fft, n_mels, 0.0, clip.sample_rate as f64 / 2.0)?;
    mel_spectrogram_with(clip, &fb, hop_length)
}

/// Mel-spectrogram with a prebuilt (shareable) filterbank.
pub fn mel_spectrogram_with(
    clip: &AudioClip,
    fb: &MelFilterbank,
    hop_length: usize,
) -> Result<MelSpectrogram, DspError> {
    if fb.sample_rate != clip.sample_rate {
        return Err(DspError::InvalidParameter(format!(
            "filterbank built for {} Hz, clip is {} Hz",
            fb.sample_rate, clip.sample_rate
        )));
    }
    let spec: Spectrogram = stft(clip, fb.n_fft, hop_length)?;
    let n_frames = spec.n_frames;
    let mut mel = vec![0.0; fb.n_mels * n_frames];
    for m in 0..fb.n_mels {
        let row = fb.row(m);
        for (k, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let powers = &spec.values[k * n_frames..(k + 1) * n_frames];
            for (acc, p) in mel[m * n_frames..(m + 1) * n_frames].iter_mut().zip(powers) {
                *acc += w * p;
            }
        }
    }
    Ok(MelSpectrogram {
        values: power_to_db(&mel),
        n_mels: fb.n_mels,
        n_frames,
        sample_rate: clip.sample_rate,
        n_fft: fb.n_fft,
        hop_length,
    })
}
