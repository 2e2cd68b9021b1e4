//! Speech emotion recognition from mel-spectrogram images.
//!
//! The pipeline decodes WAV files, extracts dB-scaled mel-spectrograms,
//! renders them as 64×64 RGB images, augments the training images and
//! classifies them into eight emotions with a four-block CNN trained by SGD.

pub mod audio_io;
pub mod augment;
pub mod config;
pub mod dataset;
pub mod dsp;
pub mod imaging;
pub mod metrics;
pub mod nn;
pub mod pipeline;
