//! Spectrogram to 64×64 RGB image, plus binary PPM I/O.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::EmotionLabel;
use crate::dsp::{MelSpectrogram, TOP_DB};

pub const IMAGE_SIZE: usize = 64;
pub const CHANNELS: usize = 3;
pub const PIXELS: usize = IMAGE_SIZE * IMAGE_SIZE * CHANNELS;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    DimensionMismatch { path: PathBuf, reason: String },
}

/// A 64×64 RGB image, row-major with interleaved channels; row 0 is the top
/// (highest mel band).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroImage {
    pub pixels: Vec<f64>,
    pub label: Option<EmotionLabel>,
}

impl SpectroImage {
    pub fn filled(rgb: [f64; 3]) -> Self {
        let pixels = (0..IMAGE_SIZE * IMAGE_SIZE).flat_map(|_| rgb).collect();
        Self { pixels, label: None }
    }

    pub fn black() -> Self {
        Self::filled([0.0; 3])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.pixels[(row * IMAGE_SIZE + col) * CHANNELS + ch]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        self.pixels[(row * IMAGE_SIZE + col) * CHANNELS + ch] = v;
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let at = (row * IMAGE_SIZE + col) * CHANNELS;
        [self.pixels[at], self.pixels[at + 1], self.pixels[at + 2]]
    }

    /// Channel-major copy, `[3, 64, 64]`, as consumed by the network.
    pub fn to_chw(&self) -> Vec<f64> {
        let plane = IMAGE_SIZE * IMAGE_SIZE;
        let mut out = vec![0.0; PIXELS];
        for (i, px) in self.pixels.chunks_exact(CHANNELS).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                out[c * plane + i] = v;
            }
        }
        out
    }
}

/// Piecewise-linear color ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct Colormap {
    anchors: Vec<(f64, [f64; 3])>,
}

impl Colormap {
    /// Anchor positions must start at 0, end at 1 and strictly increase.
    pub fn new(anchors: Vec<(f64, [f64; 3])>) -> Option<Self> {
        let ok = anchors.len() >= 2
            && anchors.first().map(|a| a.0) == Some(0.0)
            && anchors.last().map(|a| a.0) == Some(1.0)
            && anchors.windows(2).all(|w| w[0].0 < w[1].0);
        ok.then_some(Self { anchors })
    }

    pub fn anchors(&self) -> &[(f64, [f64; 3])] {
        &self.anchors
    }

    /// Light blue for quiet cells through blue, green, orange to dark red for loud ones.
    pub fn spectro() -> Self {
        Self {
            anchors: vec![
                (0.0, [0.68, 0.85, 0.90]),
                (0.25, [0.0, 0.0, 1.0]),
                (0.5, [0.0, 0.8, 0.0]),
                (0.75, [1.0, 0.55, 0.0]),
                (1.0, [0.55, 0.0, 0.0]),
            ],
        }
    }

    pub fn apply(&self, v: f64) -> [f64; 3] {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        let seg = self
            .anchors
            .windows(2)
            .position(|w| v <= w[1].0)
            .unwrap_or(self.anchors.len() - 2);
        let (p0, c0) = self.anchors[seg];
        let (p1, c1) = self.anchors[seg + 1];
        let t = (v - p0) / (p1 - p0);
        [lerp(c0[0], c1[0], t), lerp(c0[1], c1[1], t), lerp(c0[2], c1[2], t)]
    }
}

impl Default for Colormap {
    fn default() -> Self {
        Self::spectro()
    }
}

/// `a + (b - a)·t`; exact when `a == b` or `t == 0`.
#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Edge-aligned bilinear resize of an interleaved `[h × w × ch]` grid.
pub fn resize_bilinear(src: &[f64], h: usize, w: usize, ch: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    assert_eq!(src.len(), h * w * ch);
    let coord = |i: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        if n_in == 1 || n_out == 1 {
            return (0, 0, 0.0);
        }
        let pos = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
        let lo = (pos.floor() as usize).min(n_in - 1);
        let hi = (lo + 1).min(n_in - 1);
        (lo, hi, pos - lo as f64)
    };
    let mut out = vec![0.0; out_h * out_w * ch];
    for i in 0..out_h {
        let (r0, r1, ty) = coord(i, h, out_h);
        for j in 0..out_w {
            let (c0, c1, tx) = coord(j, w, out_w);
            for c in 0..ch {
                let at = |r: usize, col: usize| src[(r * w + col) * ch + c];
                let top = lerp(at(r0, c0), at(r0, c1), tx);
                let bottom = lerp(at(r1, c0), at(r1, c1), tx);
                out[(i * out_w + j) * ch + c] = lerp(top, bottom, ty);
            }
        }
    }
    out
}

/// Colors the dB grid (mapped from [-80, 0] to [0, 1]) and resizes it to 64×64
/// with the highest band on the top row.
pub fn render(spec: &MelSpectrogram, map: &Colormap) -> SpectroImage {
    assert!(spec.n_mels > 0 && spec.n_frames > 0, "empty spectrogram");
    let (h, w) = (spec.n_mels, spec.n_frames);
    let mut grid = vec![0.0; h * w * CHANNELS];
    for row in 0..h {
        let band = h - 1 - row;
        for col in 0..w {
            let v = (spec.get(band, col) + TOP_DB) / TOP_DB;
            let rgb = map.apply(v);
            grid[(row * w + col) * CHANNELS..][..CHANNELS].copy_from_slice(&rgb);
        }
    }
    let pixels = if h == IMAGE_SIZE && w == IMAGE_SIZE {
        grid
    } else {
        resize_bilinear(&grid, h, w, CHANNELS, IMAGE_SIZE, IMAGE_SIZE)
    };
    SpectroImage { pixels, label: None }
}

const PPM_HEADER: &[u8] = b"P6\n64 64\n255\n";

pub fn encode_ppm(img: &SpectroImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(PPM_HEADER.len() + PIXELS);
    out.extend_from_slice(PPM_HEADER);
    out.extend(img.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_ppm(img: &SpectroImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(img)).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<SpectroImage, ImageError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_ppm(&bytes, path)
}

/// Parses a P6 file. Whitespace and `#` comments between header fields are accepted.
pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<SpectroImage, ImageError> {
    let bad = |reason: String| ImageError::DimensionMismatch {
        path: path.to_path_buf(),
        reason,
    };
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PPM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates maxval from the raster
    pos += 1;

    if fields[0] != "P6" {
        return Err(bad(format!("expected P6 magic, found {:?}", fields[0])));
    }
    let dims: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse().map_err(|_| bad(format!("bad header field {f:?}"))))
        .collect::<Result<_, _>>()?;
    if dims[0] != IMAGE_SIZE || dims[1] != IMAGE_SIZE {
        return Err(bad(format!("expected 64x64, found {}x{}", dims[0], dims[1])));
    }
    if dims[2] != 255 {
        return Err(bad(format!("expected maxval 255, found {}", dims[2])));
    }
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() != PIXELS {
        return Err(bad(format!("expected {PIXELS} raster bytes, found {}", body.len())));
    }
    Ok(SpectroImage {
        pixels: body.iter().map(|&b| b as f64 / 255.0).collect(),
        label: None,
    })
}
