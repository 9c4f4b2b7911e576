//! Wall-clock comparison of the forward curvelet transform against a single
//! 2-D FFT of the same image, both running on the crate's own FFT kernels.

use std::time::Instant;

use curveface_core::fdct::{build_windows, fdct_forward_array};
use curveface_core::fft::{fft2_forward, Complex64, Fft};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchResult {
    pub size: usize,
    pub runs: usize,
    /// Median wall time of one unnormalized 2-D FFT, in milliseconds.
    pub fft_ms: f64,
    /// Median wall time of the full forward transform, in milliseconds.
    pub transform_ms: f64,
    /// transform_ms / fft_ms.
    pub ratio: f64,
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let mid = samples.len() / 2;
    if samples.len().is_multiple_of(2) {
        0.5 * (samples[mid - 1] + samples[mid])
    } else {
        samples[mid]
    }
}

/// Time `runs` repetitions of both operations on one deterministic random
/// `size x size` image and report medians.
pub fn bench_transform_vs_fft(size: usize, runs: usize) -> Result<BenchResult> {
    let runs = runs.max(1);
    let family = build_windows(size, size, 4, 8)?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xBE7C);
    let pixels: Vec<f64> = (0..size * size).map(|_| rng.random_range(0.0..255.0)).collect();
    let spectrum_input: Vec<Complex64> =
        pixels.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let plan = Fft::new(size);

    let mut fft_times = Vec::with_capacity(runs);
    let mut transform_times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut buf = spectrum_input.clone();
        let t0 = Instant::now();
        fft2_forward(&mut buf, size, size, &plan, &plan);
        fft_times.push(t0.elapsed().as_secs_f64() * 1e3);
        // Fold the result back in so the optimizer cannot drop the FFT.
        std::hint::black_box(&buf);

        let t1 = Instant::now();
        let coeffs = fdct_forward_array(&pixels, size, size, &family)?;
        transform_times.push(t1.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(&coeffs);
    }

    let fft_ms = median(fft_times);
    let transform_ms = median(transform_times);
    Ok(BenchResult { size, runs, fft_ms, transform_ms, ratio: transform_ms / fft_ms })
}
