//! Layer kernels. Convolution has two routes: `conv2d_forward_naive` is the
//! direct six-loop definition, `conv2d_forward` the im2col + GEMM path used
//! for training.

use rand::Rng;

use super::{NnError, Tensor};

/// `c = a·b + beta·c` on strided row-major views.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
        assert!(b.len() > (k - 1) * rsb + (n - 1) * csb);
    }
    assert!(c.len() >= m * n);
    // SAFETY: the asserts above bound every index the kernel touches; c is
    // row-major m×n with row stride n.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn new(x: &[usize; 4], w: &[usize; 4], stride: usize, padding: usize) -> Result<Self, NnError> {
        let [_, c, h, wd] = *x;
        let [_, wc, kh, kw] = *w;
        if c != wc {
            return Err(NnError::ShapeMismatch(format!(
                "input has {c} channels, kernel expects {wc}"
            )));
        }
        if stride == 0 {
            return Err(NnError::ShapeMismatch("stride must be positive".into()));
        }
        let span_h = h + 2 * padding;
        let span_w = wd + 2 * padding;
        if span_h < kh || span_w < kw || !(span_h - kh).is_multiple_of(stride) || !(span_w - kw).is_multiple_of(stride)
        {
            return Err(NnError::ShapeMismatch(format!(
                "{h}x{wd} input with padding {padding} does not tile {kh}x{kw} kernels at stride {stride}"
            )));
        }
        Ok(Self {
            channels: c,
            height: h,
            width: wd,
            kernel_h: kh,
            kernel_w: kw,
            stride,
            padding,
            out_h: (span_h - kh) / stride + 1,
            out_w: (span_w - kw) / stride + 1,
        })
    }

    fn patch_len(&self) -> usize {
        self.channels * self.kernel_h * self.kernel_w
    }

    fn out_len(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Input coordinate for output position `o` and kernel offset `k`, if inside the image.
    #[inline]
    fn source(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        (o * self.stride + k).checked_sub(self.padding).filter(|&i| i < extent)
    }
}

fn check_conv(
    x: &Tensor,
    w: &Tensor,
    b: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<([usize; 4], [usize; 4], ConvGeometry), NnError> {
    let xd = x.dims4()?;
    let wd = w.dims4()?;
    if b.shape() != [wd[0]] {
        return Err(NnError::ShapeMismatch(format!(
            "bias shape {:?} does not match {} filters",
            b.shape(),
            wd[0]
        )));
    }
    let g = ConvGeometry::new(&xd, &wd, stride, padding)?;
    Ok((xd, wd, g))
}

/// Direct cross-correlation, `y[n,f,i,j] = b[f] + Σ x[n,c,i·s+u−p, j·s+v−p]·w[f,c,u,v]`.
pub fn conv2d_forward_naive(
    x: &Tensor,
    w: &Tensor,
    b: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<Tensor, NnError> {
    let (xd, wd, g) = check_conv(x, w, b, stride, padding)?;
    let [batch, c_in, h, wid] = xd;
    let [filters, _, kh, kw] = wd;
    let mut y = Tensor::zeros(&[batch, filters, g.out_h, g.out_w]);
    let (xs, ws, bs) = (x.data(), w.data(), b.data());
    let ys = y.data_mut();
    for n in 0..batch {
        for f in 0..filters {
            for i in 0..g.out_h {
                for j in 0..g.out_w {
                    let mut acc = bs[f];
                    for c in 0..c_in {
                        for u in 0..kh {
                            let Some(r) = g.source(i, u, h) else { continue };
                            for v in 0..kw {
                                let Some(col) = g.source(j, v, wid) else { continue };
                                acc +=
                                    xs[((n * c_in + c) * h + r) * wid + col] * ws[((f * c_in + c) * kh + u) * kw + v];
                            }
                        }
                    }
                    ys[((n * filters + f) * g.out_h + i) * g.out_w + j] = acc;
                }
            }
        }
    }
    Ok(y)
}

/// Unfolds one `[C, H, W]` image into `[C·kh·kw, out_h·out_w]` patch columns.
fn im2col(img: &[f64], g: &ConvGeometry, cols: &mut [f64]) {
    let ol = g.out_len();
    for c in 0..g.channels {
        for u in 0..g.kernel_h {
            for v in 0..g.kernel_w {
                let row = (c * g.kernel_h + u) * g.kernel_w + v;
                let dst = &mut cols[row * ol..(row + 1) * ol];
                for i in 0..g.out_h {
                    let out_row = &mut dst[i * g.out_w..(i + 1) * g.out_w];
                    match g.source(i, u, g.height) {
                        None => out_row.fill(0.0),
                        Some(r) => {
                            let src = &img[(c * g.height + r) * g.width..][..g.width];
                            for (j, slot) in out_row.iter_mut().enumerate() {
                                *slot = g.source(j, v, g.width).map_or(0.0, |col| src[col]);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Inverse scatter of [`im2col`]: accumulates patch columns into an image gradient.
fn col2im(cols: &[f64], g: &ConvGeometry, img: &mut [f64]) {
    let ol = g.out_len();
    for c in 0..g.channels {
        for u in 0..g.kernel_h {
            for v in 0..g.kernel_w {
                let row = (c * g.kernel_h + u) * g.kernel_w + v;
                let src = &cols[row * ol..(row + 1) * ol];
                for i in 0..g.out_h {
                    let Some(r) = g.source(i, u, g.height) else { continue };
                    let dst = &mut img[(c * g.height + r) * g.width..][..g.width];
                    for j in 0..g.out_w {
                        if let Some(col) = g.source(j, v, g.width) {
                            dst[col] += src[i * g.out_w + j];
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, padding: usize) -> Result<Tensor, NnError> {
    let (xd, wd, g) = check_conv(x, w, b, stride, padding)?;
    let [batch, ..] = xd;
    let filters = wd[0];
    let (pl, ol) = (g.patch_len(), g.out_len());
    let mut y = Tensor::zeros(&[batch, filters, g.out_h, g.out_w]);
    let mut cols = vec![0.0; pl * ol];
    for n in 0..batch {
        im2col(x.item(n), &g, &mut cols);
        let out = &mut y.data_mut()[n * filters * ol..(n + 1) * filters * ol];
        for (f, chunk) in out.chunks_exact_mut(ol).enumerate() {
            chunk.fill(b.data()[f]);
        }
        gemm(filters, pl, ol, w.data(), (pl, 1), &cols, (ol, 1), 1.0, out);
    }
    Ok(y)
}

pub struct ConvGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn conv2d_backward(
    dy: &Tensor,
    x: &Tensor,
    w: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<ConvGrads, NnError> {
    let xd = x.dims4()?;
    let wd = w.dims4()?;
    let g = ConvGeometry::new(&xd, &wd, stride, padding)?;
    let [batch, ..] = xd;
    let filters = wd[0];
    if dy.shape() != [batch, filters, g.out_h, g.out_w] {
        return Err(NnError::ShapeMismatch(format!(
            "upstream gradient {:?} does not match conv output",
            dy.shape()
        )));
    }
    let (pl, ol) = (g.patch_len(), g.out_len());
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[filters]);
    let mut cols = vec![0.0; pl * ol];
    let mut dcols = vec![0.0; pl * ol];
    let per_x = x.len() / batch.max(1);
    for n in 0..batch {
        let dy_n = dy.item(n);
        for (f, row) in dy_n.chunks_exact(ol).enumerate() {
            db.data_mut()[f] += row.iter().sum::<f64>();
        }
        im2col(x.item(n), &g, &mut cols);
        // dW += dY_n · colsᵀ
        gemm(filters, ol, pl, dy_n, (ol, 1), &cols, (1, ol), 1.0, dw.data_mut());
        // dcols = Wᵀ · dY_n
        gemm(pl, filters, ol, w.data(), (1, pl), dy_n, (ol, 1), 0.0, &mut dcols);
        col2im(&dcols, &g, &mut dx.data_mut()[n * per_x..(n + 1) * per_x]);
    }
    Ok(ConvGrads { dx, dw, db })
}

/// Max pooling. Returns the output and, per output cell, the flat input index
/// of its maximum (first occurrence in row-major window order on ties).
pub fn maxpool2d_forward(x: &Tensor, window: usize, stride: usize) -> Result<(Tensor, Vec<usize>), NnError> {
    let [batch, ch, h, w] = x.dims4()?;
    if window == 0
        || stride == 0
        || h < window
        || w < window
        || !(h - window).is_multiple_of(stride)
        || !(w - window).is_multiple_of(stride)
    {
        return Err(NnError::ShapeMismatch(format!(
            "{h}x{w} input does not tile {window}x{window} pooling at stride {stride}"
        )));
    }
    let (oh, ow) = ((h - window) / stride + 1, (w - window) / stride + 1);
    let mut y = Tensor::zeros(&[batch, ch, oh, ow]);
    let mut argmax = vec![0usize; y.len()];
    let xs = x.data();
    let mut out_idx = 0;
    for plane in 0..batch * ch {
        let base = plane * h * w;
        for i in 0..oh {
            for j in 0..ow {
                let mut best = base + (i * stride) * w + j * stride;
                for u in 0..window {
                    for v in 0..window {
                        let at = base + (i * stride + u) * w + j * stride + v;
                        if xs[at] > xs[best] {
                            best = at;
                        }
                    }
                }
                y.data_mut()[out_idx] = xs[best];
                argmax[out_idx] = best;
                out_idx += 1;
            }
        }
    }
    Ok((y, argmax))
}

pub fn maxpool2d_backward(dy: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor, NnError> {
    if dy.len() != argmax.len() {
        return Err(NnError::ShapeMismatch(
            "pooling gradient does not match cached argmax".into(),
        ));
    }
    let mut dx = Tensor::zeros(input_shape);
    for (&g, &at) in dy.data().iter().zip(argmax) {
        dx.data_mut()[at] += g;
    }
    Ok(dx)
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v <= 0.0 {
            *v = 0.0;
        }
    }
    y
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward(dy: &Tensor, x: &Tensor) -> Result<Tensor, NnError> {
    if dy.shape() != x.shape() {
        return Err(NnError::ShapeMismatch("relu gradient shape mismatch".into()));
    }
    let data = dy
        .data()
        .iter()
        .zip(x.data())
        .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(dy.shape(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout multipliers: 0 with probability `rate`, else `1/(1−rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

pub fn apply_mask(x: &Tensor, mask: &[f64]) -> Tensor {
    assert_eq!(x.len(), mask.len());
    let mut y = x.clone();
    for (v, m) in y.data_mut().iter_mut().zip(mask) {
        *v *= m;
    }
    y
}

/// Returns the output and the mask used (`None` when the layer is the identity).
pub fn dropout<R: Rng + ?Sized>(x: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> (Tensor, Option<Vec<f64>>) {
    if mode == Mode::Eval || rate == 0.0 {
        return (x.clone(), None);
    }
    let mask = dropout_mask(x.len(), rate, rng);
    (apply_mask(x, &mask), Some(mask))
}

/// `y = x·Wᵀ + b` with `x: [N, in]`, `w: [out, in]`, `b: [out]`.
pub fn dense_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor, NnError> {
    let [batch, fan_in] = x.dims2()?;
    let [out, w_in] = w.dims2()?;
    if w_in != fan_in || b.shape() != [out] {
        return Err(NnError::ShapeMismatch(format!(
            "dense layer {:?}/{:?} cannot take input {:?}",
            w.shape(),
            b.shape(),
            x.shape()
        )));
    }
    let mut y = Tensor::zeros(&[batch, out]);
    for row in y.data_mut().chunks_exact_mut(out) {
        row.copy_from_slice(b.data());
    }
    gemm(
        batch,
        fan_in,
        out,
        x.data(),
        (fan_in, 1),
        w.data(),
        (1, fan_in),
        1.0,
        y.data_mut(),
    );
    Ok(y)
}

pub struct DenseGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn dense_backward(dy: &Tensor, x: &Tensor, w: &Tensor) -> Result<DenseGrads, NnError> {
    let [batch, fan_in] = x.dims2()?;
    let [out, _] = w.dims2()?;
    if dy.shape() != [batch, out] {
        return Err(NnError::ShapeMismatch("dense gradient shape mismatch".into()));
    }
    let mut dx = Tensor::zeros(&[batch, fan_in]);
    let mut dw = Tensor::zeros(&[out, fan_in]);
    let mut db = Tensor::zeros(&[out]);
    gemm(
        batch,
        out,
        fan_in,
        dy.data(),
        (out, 1),
        w.data(),
        (fan_in, 1),
        0.0,
        dx.data_mut(),
    );
    gemm(
        out,
        batch,
        fan_in,
        dy.data(),
        (1, out),
        x.data(),
        (fan_in, 1),
        0.0,
        dw.data_mut(),
    );
    for row in dy.data().chunks_exact(out) {
        for (acc, g) in db.data_mut().iter_mut().zip(row) {
            *acc += g;
        }
    }
    Ok(DenseGrads { dx, dw, db })
}

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: &Tensor) -> Result<Tensor, NnError> {
    let [_, k] = logits.dims2()?;
    let mut p = logits.clone();
    for row in p.data_mut().chunks_exact_mut(k) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(p)
}

/// Mean categorical cross-entropy of softmax(logits) against one-hot targets,
/// and its gradient `(p − y)/N`.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<(f64, Tensor), NnError> {
    let [batch, k] = logits.dims2()?;
    if targets.shape() != logits.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "targets {:?} do not match logits {:?}",
            targets.shape(),
            logits.shape()
        )));
    }
    let mut grad = Tensor::zeros(&[batch, k]);
    let mut loss = 0.0;
    for ((z, y), g) in logits
        .data()
        .chunks_exact(k)
        .zip(targets.data().chunks_exact(k))
        .zip(grad.data_mut().chunks_exact_mut(k))
    {
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        for ((&zi, &yi), gi) in z.iter().zip(y).zip(g.iter_mut()) {
            let log_p = zi - max - log_sum;
            if yi != 0.0 {
                loss -= yi * log_p;
            }
            *gi = (log_p.exp() - yi) / batch as f64;
        }
    }
    Ok((loss / batch as f64, grad))
}

pub fn one_hot(labels: &[usize], classes: usize) -> Tensor {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (row, &l) in t.data_mut().chunks_exact_mut(classes).zip(labels) {
        row[l] = 1.0;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn unit_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(&[2, 3, 5, 4], &mut rng);
        let mut w = Tensor::zeros(&[3, 3, 1, 1]);
        for c in 0..3 {
            w.data_mut()[c * 3 + c] = 1.0;
        }
        let y = conv2d_forward(&x, &w, &Tensor::zeros(&[3]), 1, 0).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn ones_kernel_on_constant_input() {
        let x = Tensor::filled(&[1, 1, 4, 4], 1.0);
        let w = Tensor::filled(&[1, 1, 3, 3], 1.0);
        let y = conv2d_forward(&x, &w, &Tensor::zeros(&[1]), 1, 1).unwrap();
        assert_eq!(y.shape(), &[1, 1, 4, 4]);
        assert_eq!(y.data()[5], 9.0);
        assert_eq!(y.data()[0], 4.0);
        assert_eq!(y.data()[1], 6.0);
    }

    #[test]
    fn im2col_path_matches_naive_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (shape, wshape, stride, pad) in [
            ([2, 3, 7, 6], [4, 3, 3, 3], 1, 1),
            ([1, 2, 8, 8], [3, 2, 2, 2], 2, 0),
            ([3, 1, 5, 9], [2, 1, 3, 1], 2, 1),
            ([1, 4, 6, 6], [5, 4, 1, 1], 1, 0),
        ] {
            let x = random(&shape, &mut rng);
            let w = random(&wshape, &mut rng);
            let b = random(&[wshape[0]], &mut rng);
            let fast = conv2d_forward(&x, &w, &b, stride, pad).unwrap();
            let slow = conv2d_forward_naive(&x, &w, &b, stride, pad).unwrap();
            assert_eq!(fast.shape(), slow.shape());
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_shape_errors() {
        let x = Tensor::zeros(&[1, 3, 5, 5]);
        let w = Tensor::zeros(&[2, 2, 3, 3]);
        assert!(matches!(
            conv2d_forward(&x, &w, &Tensor::zeros(&[2]), 1, 1),
            Err(NnError::ShapeMismatch(_))
        ));
        let w = Tensor::zeros(&[2, 3, 2, 2]);
        assert!(conv2d_forward(&x, &w, &Tensor::zeros(&[2]), 2, 0).is_err());
        assert!(conv2d_forward(&x, &w, &Tensor::zeros(&[3]), 1, 0).is_err());
    }

    #[test]
    fn maxpool_cases() {
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, arg) = maxpool2d_forward(&x, 2, 2).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(arg, vec![3]);
        let dx = maxpool2d_backward(&Tensor::filled(&[1, 1, 1, 1], 1.5), &arg, x.shape()).unwrap();
        assert_eq!(dx.data(), &[0.0, 0.0, 0.0, 1.5]);

        let ramp = Tensor::from_vec(&[1, 1, 4, 4], (0..16).map(f64::from).collect()).unwrap();
        assert_eq!(
            maxpool2d_forward(&ramp, 2, 2).unwrap().0.data(),
            &[5.0, 7.0, 13.0, 15.0]
        );

        let flat = Tensor::filled(&[1, 1, 4, 4], 2.0);
        let (y, arg) = maxpool2d_forward(&flat, 2, 2).unwrap();
        assert!(y.data().iter().all(|&v| v == 2.0));
        assert_eq!(arg, vec![0, 2, 8, 10]);

        assert!(maxpool2d_forward(&Tensor::zeros(&[1, 1, 5, 5]), 2, 2).is_err());
    }

    #[test]
    fn relu_gates() {
        let x = Tensor::from_vec(&[1, 4], vec![-1.0, 0.0, 0.5, 2.0]).unwrap();
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 0.5, 2.0]);
        let g = Tensor::filled(&[1, 4], 3.0);
        assert_eq!(relu_backward(&g, &x).unwrap().data(), &[0.0, 0.0, 3.0, 3.0]);
        let pos = Tensor::from_vec(&[1, 2], vec![0.1, 9.0]).unwrap();
        let g = Tensor::from_vec(&[1, 2], vec![-2.0, 7.0]).unwrap();
        assert_eq!(relu_backward(&g, &pos).unwrap(), g);
    }

    #[test]
    fn dropout_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor::filled(&[10, 10], 1.0);
        assert_eq!(dropout(&x, 0.0, Mode::Train, &mut rng).0, x);
        assert_eq!(dropout(&x, 0.7, Mode::Eval, &mut rng).0, x);

        let big = Tensor::filled(&[1_000_000], 1.0);
        let (y, mask) = dropout(&big, 0.5, Mode::Train, &mut rng);
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((0.99..=1.01).contains(&mean), "mean {mean}");
        assert!(mask.unwrap().iter().all(|&m| m == 0.0 || m == 2.0));
    }

    #[test]
    fn cross_entropy_cases() {
        let logits = Tensor::zeros(&[3, 8]);
        let (loss, _) = softmax_cross_entropy(&logits, &one_hot(&[0, 4, 7], 8)).unwrap();
        assert!((loss - 8f64.ln()).abs() < 1e-12);

        let mut z = Tensor::zeros(&[1, 8]);
        z.data_mut()[2] = 1000.0;
        let (loss, grad) = softmax_cross_entropy(&z, &one_hot(&[2], 8)).unwrap();
        assert!(loss < 1e-6 && loss.is_finite());
        assert!(grad.data().iter().all(|g| g.is_finite()));

        let p = softmax(&z).unwrap();
        assert!((p.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_matches_hand_product() {
        let x = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]).unwrap();
        let w = Tensor::from_vec(&[2, 3], vec![1.0, 0.0, -1.0, 0.5, 0.5, 0.5]).unwrap();
        let b = Tensor::from_vec(&[2], vec![0.1, -0.1]).unwrap();
        let y = dense_forward(&x, &w, &b).unwrap();
        let expected = [1.0 - 3.0 + 0.1, 3.0 - 0.1, -1.0 - 1.0 + 0.1, 0.0 - 0.1];
        for (a, e) in y.data().iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
    }
}
