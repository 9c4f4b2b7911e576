//! Complex FFTs used by the curvelet transform: iterative radix-2 for
//! power-of-two lengths and Bluestein's chirp-z algorithm for everything
//! else, so band grids of arbitrary extent stay O(n log n).
//!
//! Transforms are unnormalized: `inverse(forward(x)) = len * x`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

pub use num_complex::Complex64;

/// Precomputed FFT plan for one length.
pub struct Fft {
    len: usize,
    kind: Kind,
}

enum Kind {
    /// Lengths 0 and 1 are identities.
    Trivial,
    Radix2 {
        // twiddles[i] = exp(-2*pi*i*I / len) for i < len/2
        twiddles: Vec<Complex64>,
    },
    Bluestein {
        // chirp[j] = exp(-pi*I * j^2 / len)
        chirp: Vec<Complex64>,
        // forward FFT of the wrapped conjugate-chirp kernel, length m
        kernel_fft: Vec<Complex64>,
        inner: Box<Fft>,
        m: usize,
    },
}

impl Fft {
    pub fn new(len: usize) -> Self {
        let kind = if len <= 1 {
            Kind::Trivial
        } else if len.is_power_of_two() {
            Kind::Radix2 { twiddles: forward_twiddles(len) }
        } else {
            let m = (2 * len - 1).next_power_of_two();
            let chirp = chirp_table(len);
            let mut kernel = vec![Complex64::ZERO; m];
            kernel[0] = chirp[0].conj();
            for j in 1..len {
                let c = chirp[j].conj();
                kernel[j] = c;
                kernel[m - j] = c;
            }
            let inner = Box::new(Fft::new(m));
            inner.forward(&mut kernel);
            Kind::Bluestein { chirp, kernel_fft: kernel, inner, m }
        };
        Fft { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place unnormalized DFT: `X[k] = sum_j x[j] exp(-2*pi*I*j*k/n)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2 { twiddles } => radix2(twiddles, data),
            Kind::Bluestein { chirp, kernel_fft, inner, m } => {
                let n = self.len;
                let mut buf = vec![Complex64::ZERO; *m];
                for j in 0..n {
                    buf[j] = data[j] * chirp[j];
                }
                inner.forward(&mut buf);
                for (b, k) in buf.iter_mut().zip(kernel_fft) {
                    *b *= k;
                }
                inner.inverse(&mut buf);
                let scale = 1.0 / *m as f64;
                for k in 0..n {
                    data[k] = buf[k] * chirp[k] * scale;
                }
            }
        }
    }

    /// In-place unnormalized inverse DFT (conjugate of [`Fft::forward`]).
    pub fn inverse(&self, data: &mut [Complex64]) {
        for v in data.iter_mut() {
            *v = v.conj();
        }
        self.forward(data);
        for v in data.iter_mut() {
            *v = v.conj();
        }
    }
}

fn forward_twiddles(len: usize) -> Vec<Complex64> {
    let step = -2.0 * core::f64::consts::PI / len as f64;
    (0..len / 2)
        .map(|i| {
            let angle = step * i as f64;
            Complex64::new(libm::cos(angle), libm::sin(angle))
        })
        .collect()
}

fn chirp_table(len: usize) -> Vec<Complex64> {
    // exp(-pi*I*j^2/n) is periodic in j^2 modulo 2n; reduce before the
    // trig call so large j keep full precision.
    let modulus = 2 * len as u64;
    (0..len)
        .map(|j| {
            let sq = (j as u64 * j as u64) % modulus;
            let angle = -core::f64::consts::PI * sq as f64 / len as f64;
            Complex64::new(libm::cos(angle), libm::sin(angle))
        })
        .collect()
}

fn radix2(twiddles: &[Complex64], data: &mut [Complex64]) {
    let n = data.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for chunk in data.chunks_exact_mut(len) {
            for i in 0..half {
                let w = twiddles[i * step];
                let a = chunk[i];
                let b = chunk[i + half] * w;
                chunk[i] = a + b;
                chunk[i + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Unnormalized 2-D DFT of row-major `data` (`height` rows of `width`).
pub fn fft2_forward(data: &mut [Complex64], width: usize, height: usize, row: &Fft, col: &Fft) {
    fft2(data, width, height, row, col, false)
}

/// Unnormalized 2-D inverse DFT; `fft2_inverse(fft2_forward(x)) = width*height*x`.
pub fn fft2_inverse(data: &mut [Complex64], width: usize, height: usize, row: &Fft, col: &Fft) {
    fft2(data, width, height, row, col, true)
}

fn fft2(data: &mut [Complex64], width: usize, height: usize, row: &Fft, col: &Fft, inv: bool) {
    debug_assert_eq!(data.len(), width * height);
    debug_assert_eq!(row.len(), width);
    debug_assert_eq!(col.len(), height);
    for r in data.chunks_exact_mut(width) {
        if inv {
            row.inverse(r);
        } else {
            row.forward(r);
        }
    }
    let mut column = vec![Complex64::ZERO; height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        if inv {
            col.inverse(&mut column);
        } else {
            col.forward(&mut column);
        }
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}
