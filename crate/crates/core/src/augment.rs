//! Shift / zoom / horizontal-flip augmentation of training images.
//!
//! Every variant draws its parameters from a ChaCha stream keyed by
//! `(seed, image index, variant index)`, so the output does not depend on the
//! order in which images are processed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::imaging::{lerp, SpectroImage, CHANNELS, IMAGE_SIZE};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid augmentation config: {0}")]
pub struct AugmentConfigError(String);

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub width_shift_frac: f64,
    pub height_shift_frac: f64,
    pub zoom_range: (f64, f64),
    pub allow_hflip: bool,
    pub variants_per_image: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            width_shift_frac: 0.1,
            height_shift_frac: 0.1,
            zoom_range: (0.9, 1.1),
            allow_hflip: true,
            variants_per_image: 20,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentConfigError> {
        for (name, v) in [
            ("width_shift_frac", self.width_shift_frac),
            ("height_shift_frac", self.height_shift_frac),
        ] {
            if !(0.0..=0.5).contains(&v) {
                return Err(AugmentConfigError(format!("{name} must lie in [0, 0.5], got {v}")));
            }
        }
        let (lo, hi) = self.zoom_range;
        if !(lo > 0.0 && lo <= hi) || lo < 0.5 || hi > 2.0 {
            return Err(AugmentConfigError(format!(
                "zoom range must satisfy 0.5 <= low <= high <= 2.0, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// One draw of transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub dx: i32,
    pub dy: i32,
    pub zoom: f64,
    pub flip: bool,
}

fn variant_rng(seed: u64, image_index: u64, variant: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&image_index.to_le_bytes());
    key[16..24].copy_from_slice(&variant.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn symmetric(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.random_range(-bound..=bound)
    } else {
        0.0
    }
}

pub fn sample_params(cfg: &AugmentConfig, image_index: u64, variant: u64) -> AugmentParams {
    let mut rng = variant_rng(cfg.seed, image_index, variant);
    let size = IMAGE_SIZE as f64;
    let dx = symmetric(&mut rng, cfg.width_shift_frac * size).round() as i32;
    let dy = symmetric(&mut rng, cfg.height_shift_frac * size).round() as i32;
    let (lo, hi) = cfg.zoom_range;
    let zoom = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let coin: bool = rng.random_bool(0.5);
    AugmentParams {
        dx,
        dy,
        zoom,
        flip: cfg.allow_hflip && coin,
    }
}

/// Translates content by `(dx, dy)` pixels, filling vacated pixels from the nearest edge.
pub fn shift(img: &SpectroImage, dx: i32, dy: i32) -> SpectroImage {
    assert!(dx.abs() <= 32 && dy.abs() <= 32, "shift out of range");
    let max = IMAGE_SIZE as i32 - 1;
    let mut out = img.clone();
    for row in 0..IMAGE_SIZE {
        let src_row = (row as i32 - dy).clamp(0, max) as usize;
        for col in 0..IMAGE_SIZE {
            let src_col = (col as i32 - dx).clamp(0, max) as usize;
            let src = (src_row * IMAGE_SIZE + src_col) * CHANNELS;
            let dst = (row * IMAGE_SIZE + col) * CHANNELS;
            out.pixels[dst..dst + CHANNELS].copy_from_slice(&img.pixels[src..src + CHANNELS]);
        }
    }
    out
}

/// Center-anchored rescale; `sx, sy > 1` magnifies. Samples outside the
/// source are clamped to the nearest edge.
pub fn zoom(img: &SpectroImage, sx: f64, sy: f64) -> SpectroImage {
    assert!(
        (0.5..=2.0).contains(&sx) && (0.5..=2.0).contains(&sy),
        "zoom out of range"
    );
    let center = (IMAGE_SIZE as f64 - 1.0) / 2.0;
    let last = IMAGE_SIZE - 1;
    let axis = |i: usize, s: f64| -> (usize, usize, f64) {
        let pos = (center + (i as f64 - center) / s).clamp(0.0, last as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(last);
        (lo, hi, pos - lo as f64)
    };
    let mut out = img.clone();
    for row in 0..IMAGE_SIZE {
        let (r0, r1, ty) = axis(row, sy);
        for col in 0..IMAGE_SIZE {
            let (c0, c1, tx) = axis(col, sx);
            for ch in 0..CHANNELS {
                let top = lerp(img.get(r0, c0, ch), img.get(r0, c1, ch), tx);
                let bottom = lerp(img.get(r1, c0, ch), img.get(r1, c1, ch), tx);
                out.set(row, col, ch, lerp(top, bottom, ty));
            }
        }
    }
    out
}

pub fn hflip(img: &SpectroImage) -> SpectroImage {
    let mut out = img.clone();
    for row in 0..IMAGE_SIZE {
        for col in 0..IMAGE_SIZE {
            let src = (row * IMAGE_SIZE + (IMAGE_SIZE - 1 - col)) * CHANNELS;
            let dst = (row * IMAGE_SIZE + col) * CHANNELS;
            out.pixels[dst..dst + CHANNELS].copy_from_slice(&img.pixels[src..src + CHANNELS]);
        }
    }
    out
}

pub fn apply_params(img: &SpectroImage, p: &AugmentParams) -> SpectroImage {
    let shifted = shift(img, p.dx, p.dy);
    let zoomed = zoom(&shifted, p.zoom, p.zoom);
    if p.flip {
        hflip(&zoomed)
    } else {
        zoomed
    }
}

/// Produces `cfg.variants_per_image` augmented copies of the image at `image_index`.
/// The original is not included.
pub fn generate(
    img: &SpectroImage,
    image_index: u64,
    cfg: &AugmentConfig,
) -> Result<Vec<SpectroImage>, AugmentConfigError> {
    cfg.validate()?;
    Ok((0..cfg.variants_per_image as u64)
        .map(|k| apply_params(img, &sample_params(cfg, image_index, k)))
        .collect())
}
