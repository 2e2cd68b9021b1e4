//! Iterative radix-2 Cooley-Tukey FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::DspError;

/// Output of [`fft_radix2`]; length is always a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub bins: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// Forward transform `X[k] = Σ x[n]·e^{-2πikn/N}`, or the 1/N-scaled inverse.
pub fn fft_radix2(signal: &[Complex64], inverse: bool) -> Result<ComplexSpectrum, DspError> {
    let mut bins = signal.to_vec();
    fft_in_place(&mut bins, inverse)?;
    Ok(ComplexSpectrum { bins })
}

pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) -> Result<(), DspError> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(DspError::NonPowerOfTwoLength(n));
    }
    let twiddles = Twiddles::new(n);
    twiddles.transform(buf, inverse);
    Ok(())
}

/// Precomputed `e^{-2πik/N}` for `k < N/2`, reusable across frames of the same length.
#[derive(Debug, Clone)]
pub struct Twiddles {
    n: usize,
    table: Vec<Complex64>,
}

impl Twiddles {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two());
        // each entry from its own sin/cos so error does not accumulate along the table
        let table = (0..n / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Self { n, table }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n);
        if n == 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                buf.swap(i, j);
            }
        }

        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.table[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }

        if inverse {
            let scale = 1.0 / n as f64;
            for v in buf.iter_mut() {
                *v *= scale;
            }
        }
    }
}
