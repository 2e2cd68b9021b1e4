use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ops::{self, Mode};
use super::{NnError, Tensor};
use crate::dataset::EmotionLabel;
use crate::imaging::{CHANNELS, IMAGE_SIZE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerKind {
    Conv2d {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool2d {
        window: usize,
        stride: usize,
    },
    Dropout {
        rate: f64,
    },
    Flatten,
    Dense {
        out_features: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, Default)]
enum Cache {
    #[default]
    Empty,
    Input(Tensor),
    Pool {
        argmax: Vec<usize>,
        input_shape: Vec<usize>,
    },
    Mask(Option<Vec<f64>>),
    Shape(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub kind: LayerKind,
    pub params: Option<Params>,
    pub grads: Option<Params>,
    cache: Cache,
}

impl PartialEq for Layer {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.params == other.params
    }
}

impl Layer {
    pub fn new(kind: LayerKind, params: Option<Params>) -> Self {
        Self {
            kind,
            params,
            grads: None,
            cache: Cache::Empty,
        }
    }

    fn params_ref(&self) -> &Params {
        self.params.as_ref().expect("parametric layer carries weights")
    }

    /// Forward pass without caching.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor, NnError> {
        match self.kind {
            LayerKind::Conv2d { stride, padding, .. } => {
                let p = self.params_ref();
                ops::conv2d_forward(x, &p.weight, &p.bias, stride, padding)
            }
            LayerKind::Relu => Ok(ops::relu_forward(x)),
            LayerKind::MaxPool2d { window, stride } => Ok(ops::maxpool2d_forward(x, window, stride)?.0),
            LayerKind::Dropout { .. } => Ok(x.clone()),
            LayerKind::Flatten => flatten(x),
            LayerKind::Dense { .. } => {
                let p = self.params_ref();
                ops::dense_forward(x, &p.weight, &p.bias)
            }
        }
    }

    /// Forward pass that records what `backward` needs.
    pub fn forward<R: Rng + ?Sized>(&mut self, x: Tensor, mode: Mode, rng: &mut R) -> Result<Tensor, NnError> {
        let y = match self.kind {
            LayerKind::Conv2d { .. } | LayerKind::Dense { .. } | LayerKind::Relu => {
                let y = self.infer(&x)?;
                self.cache = Cache::Input(x);
                y
            }
            LayerKind::MaxPool2d { window, stride } => {
                let (y, argmax) = ops::maxpool2d_forward(&x, window, stride)?;
                self.cache = Cache::Pool {
                    argmax,
                    input_shape: x.shape().to_vec(),
                };
                y
            }
            LayerKind::Dropout { rate } => {
                let (y, mask) = ops::dropout(&x, rate, mode, rng);
                self.cache = Cache::Mask(mask);
                y
            }
            LayerKind::Flatten => {
                self.cache = Cache::Shape(x.shape().to_vec());
                flatten(&x)?
            }
        };
        Ok(y)
    }

    /// Consumes the forward cache, stores parameter gradients and returns dL/dx.
    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor, NnError> {
        let cache = std::mem::take(&mut self.cache);
        match (self.kind, cache) {
            (LayerKind::Conv2d { stride, padding, .. }, Cache::Input(x)) => {
                let g = ops::conv2d_backward(dy, &x, &self.params_ref().weight, stride, padding)?;
                self.grads = Some(Params {
                    weight: g.dw,
                    bias: g.db,
                });
                Ok(g.dx)
            }
            (LayerKind::Dense { .. }, Cache::Input(x)) => {
                let g = ops::dense_backward(dy, &x, &self.params_ref().weight)?;
                self.grads = Some(Params {
                    weight: g.dw,
                    bias: g.db,
                });
                Ok(g.dx)
            }
            (LayerKind::Relu, Cache::Input(x)) => ops::relu_backward(dy, &x),
            (LayerKind::MaxPool2d { .. }, Cache::Pool { argmax, input_shape }) => {
                ops::maxpool2d_backward(dy, &argmax, &input_shape)
            }
            (LayerKind::Dropout { .. }, Cache::Mask(mask)) => Ok(match mask {
                Some(m) => ops::apply_mask(dy, &m),
                None => dy.clone(),
            }),
            (LayerKind::Flatten, Cache::Shape(shape)) => dy.clone().reshape(&shape),
            (kind, _) => Err(NnError::MissingForwardCache(format!("{kind:?}"))),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.as_ref().map_or(0, |p| p.weight.len() + p.bias.len())
    }
}

fn flatten(x: &Tensor) -> Result<Tensor, NnError> {
    let batch = x.batch();
    let per = x.len().checked_div(batch).unwrap_or(0);
    x.clone().reshape(&[batch, per])
}

/// He-uniform weights with bound `sqrt(6 / fan_in)`, zero bias.
fn he_uniform(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Params {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    Params {
        weight: Tensor::from_vec(shape, data).expect("shape matches data"),
        bias: Tensor::zeros(&shape[..1]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    /// `[channels, height, width]` of one input item.
    pub input_shape: [usize; 3],
    pub class_count: usize,
}

impl Network {
    /// Instantiates `kinds` with seeded He-uniform parameters.
    pub fn from_kinds(kinds: &[LayerKind], input_shape: [usize; 3], seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shape = input_shape.to_vec();
        let mut layers = Vec::with_capacity(kinds.len());
        for &kind in kinds {
            let params = match kind {
                LayerKind::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let [c, h, w] = shape[..] else {
                        return Err(NnError::ShapeMismatch(format!("conv after {shape:?}")));
                    };
                    let g = ops::ConvGeometry::new(&[1, c, h, w], &[out_channels, c, kernel, kernel], stride, padding)?;
                    shape = vec![out_channels, g.out_h, g.out_w];
                    Some(he_uniform(
                        &[out_channels, c, kernel, kernel],
                        c * kernel * kernel,
                        &mut rng,
                    ))
                }
                LayerKind::Dense { out_features } => {
                    let [fan_in] = shape[..] else {
                        return Err(NnError::ShapeMismatch(format!("dense after {shape:?}")));
                    };
                    shape = vec![out_features];
                    Some(he_uniform(&[out_features, fan_in], fan_in, &mut rng))
                }
                LayerKind::MaxPool2d { window, stride } => {
                    let [c, h, w] = shape[..] else {
                        return Err(NnError::ShapeMismatch(format!("pooling after {shape:?}")));
                    };
                    if h < window || w < window || (h - window) % stride != 0 || (w - window) % stride != 0 {
                        return Err(NnError::ShapeMismatch(format!("pooling does not tile {h}x{w}")));
                    }
                    shape = vec![c, (h - window) / stride + 1, (w - window) / stride + 1];
                    None
                }
                LayerKind::Flatten => {
                    shape = vec![shape.iter().product()];
                    None
                }
                LayerKind::Relu => None,
                LayerKind::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(NnError::ShapeMismatch(format!("dropout rate {rate} outside [0, 1)")));
                    }
                    None
                }
            };
            layers.push(Layer::new(kind, params));
        }
        let [class_count] = shape[..] else {
            return Err(NnError::ShapeMismatch(format!(
                "network ends in shape {shape:?}, not logits"
            )));
        };
        Ok(Self {
            layers,
            input_shape,
            class_count,
        })
    }

    pub fn kinds(&self) -> Vec<LayerKind> {
        self.layers.iter().map(|l| l.kind).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NnError> {
        if x.rank() != 4 || x.shape()[1..] != self.input_shape {
            return Err(NnError::ShapeMismatch(format!(
                "network expects [N, {:?}], got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        Ok(())
    }

    /// Eval-mode logits; does not touch layer caches.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor, NnError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    pub fn forward<R: Rng + ?Sized>(&mut self, x: Tensor, mode: Mode, rng: &mut R) -> Result<Tensor, NnError> {
        self.check_input(&x)?;
        let mut h = x;
        for layer in &mut self.layers {
            h = layer.forward(h, mode, rng)?;
        }
        Ok(h)
    }

    /// Backpropagates dL/dlogits through every layer; returns dL/dinput.
    pub fn backward(&mut self, dlogits: &Tensor) -> Result<Tensor, NnError> {
        let mut g = dlogits.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    /// Plain SGD: `θ ← θ − lr·∇θ`. Gradients are consumed.
    pub fn sgd_step(&mut self, learning_rate: f64) -> Result<(), NnError> {
        for layer in &mut self.layers {
            let Some(params) = layer.params.as_mut() else { continue };
            let grads = layer
                .grads
                .take()
                .ok_or_else(|| NnError::MissingForwardCache(format!("no gradients for {:?}", layer.kind)))?;
            for (p, g) in [(&mut params.weight, &grads.weight), (&mut params.bias, &grads.bias)] {
                for (v, d) in p.data_mut().iter_mut().zip(g.data()) {
                    *v -= learning_rate * d;
                }
            }
        }
        Ok(())
    }

    /// Class probabilities and argmax per input item, dropout disabled.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<Prediction>, NnError> {
        let probs = ops::softmax(&self.infer(x)?)?;
        Ok(probs
            .data()
            .chunks_exact(self.class_count)
            .map(|p| Prediction {
                probabilities: p.to_vec(),
                class: argmax(p),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub class: usize,
}

impl Prediction {
    pub fn label(&self) -> Option<EmotionLabel> {
        EmotionLabel::from_ordinal(self.class)
    }
}

/// Index of the largest value; first one wins on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Four conv/ReLU/pool/dropout blocks (32, 64, 128, 256 filters), then
/// dense 512 and 256 with ReLU and dropout, then 8 logits.
pub fn fser_layer_kinds() -> Vec<LayerKind> {
    let mut kinds = Vec::new();
    for filters in [32, 64, 128, 256] {
        kinds.extend([
            LayerKind::Conv2d {
                out_channels: filters,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            LayerKind::Relu,
            LayerKind::MaxPool2d { window: 2, stride: 2 },
            LayerKind::Dropout { rate: 0.25 },
        ]);
    }
    kinds.push(LayerKind::Flatten);
    for width in [512, 256] {
        kinds.extend([
            LayerKind::Dense { out_features: width },
            LayerKind::Relu,
            LayerKind::Dropout { rate: 0.5 },
        ]);
    }
    kinds.push(LayerKind::Dense {
        out_features: EmotionLabel::COUNT,
    });
    kinds
}

pub const FSER_INPUT_SHAPE: [usize; 3] = [CHANNELS, IMAGE_SIZE, IMAGE_SIZE];

pub fn build_fser_network(seed: u64) -> Network {
    Network::from_kinds(&fser_layer_kinds(), FSER_INPUT_SHAPE, seed).expect("FSER layer table is consistent")
}
