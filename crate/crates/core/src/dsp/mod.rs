//! Waveform to dB-scaled mel-spectrogram.

mod fft;
mod mel;
mod stft;

pub use fft::{fft_in_place, fft_radix2, ComplexSpectrum, Twiddles};
pub use mel::{
    build_mel_filterbank, build_mel_filterbank_strict, hz_to_mel, mel_spectrogram, mel_spectrogram_with, mel_to_hz,
    power_to_db, MelFilterbank, MelSpectrogram, AMIN, TOP_DB,
};
pub use stft::{frame_count, hann_window, stft, Spectrogram};

use thiserror::Error;

pub const DEFAULT_N_FFT: usize = 512;
pub const DEFAULT_HOP: usize = 512;
pub const DEFAULT_N_MELS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("FFT length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
    #[error("clip has {len} samples, fewer than the FFT window of {n_fft}")]
    ClipTooShort { len: usize, n_fft: usize },
    #[error("mel band {band} has no FFT bin inside its support")]
    DegenerateBand { band: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
