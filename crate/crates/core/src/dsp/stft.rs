use std::f64::consts::PI;

use num_complex::Complex64;

use super::{DspError, Twiddles};
use crate::audio_io::AudioClip;

/// Power spectrogram, stored band-major: `values[bin * n_frames + frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Vec<f64>,
    pub n_freq_bins: usize,
    pub n_frames: usize,
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop_length: usize,
}

impl Spectrogram {
    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.values[bin * self.n_frames + frame]
    }

    pub fn frame(&self, frame: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_freq_bins).map(move |k| self.get(k, frame))
    }
}

/// Symmetric Hann window `0.5·(1 − cos(2πn/(N−1)))`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / denom).cos()))
        .collect()
}

/// Frames that fit entirely inside the signal; no padding, trailing partial frame dropped.
pub fn frame_count(len: usize, n_fft: usize, hop: usize) -> usize {
    if len < n_fft {
        0
    } else {
        1 + (len - n_fft) / hop
    }
}

pub fn stft(clip: &AudioClip, n_fft: usize, hop_length: usize) -> Result<Spectrogram, DspError> {
    if n_fft == 0 || !n_fft.is_power_of_two() {
        return Err(DspError::NonPowerOfTwoLength(n_fft));
    }
    if hop_length == 0 {
        return Err(DspError::InvalidParameter("hop length must be positive".into()));
    }
    let len = clip.samples.len();
    if len < n_fft {
        return Err(DspError::ClipTooShort { len, n_fft });
    }

    let n_frames = frame_count(len, n_fft, hop_length);
    let n_bins = n_fft / 2 + 1;
    let window = hann_window(n_fft);
    let twiddles = Twiddles::new(n_fft);
    let mut values = vec![0.0; n_bins * n_frames];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];

    for t in 0..n_frames {
        let start = t * hop_length;
        for (slot, (x, w)) in buf
            .iter_mut()
            .zip(clip.samples[start..start + n_fft].iter().zip(&window))
        {
            *slot = Complex64::new(x * w, 0.0);
        }
        twiddles.transform(&mut buf, false);
        for (k, bin) in buf.iter().take(n_bins).enumerate() {
            values[k * n_frames + t] = bin.norm_sqr();
        }
    }

    Ok(Spectrogram {
        values,
        n_freq_bins: n_bins,
        n_frames,
        sample_rate: clip.sample_rate,
        n_fft,
        hop_length,
    })
}
