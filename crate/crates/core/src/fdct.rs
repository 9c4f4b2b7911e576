//! Fast discrete curvelet transform via frequency wrapping.
//!
//! The image's centered 2-D spectrum is covered by a family of smooth
//! windows: one low-pass disc, oriented wedges on dyadic rings at the
//! intermediate scales, and an isotropic finest band. Squared window values
//! sum to one at every frequency sample, which makes the transform a tight
//! frame: analysis followed by the adjoint reconstructs the image and
//! coefficient energy equals pixel energy.
//!
//! Per band, the windowed spectrum is wrapped modulo a rectangle matching
//! the wedge's support box and inverse-transformed, so coefficient grids
//! stay proportional to the wedge size instead of the full image.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{argument_err, dimension_err};
use crate::fft::{fft2_forward, fft2_inverse, Fft};
use crate::image::Image;
use crate::Result;

const FRAC_PI_2: f64 = core::f64::consts::FRAC_PI_2;
const TAU: f64 = core::f64::consts::TAU;

/// Window samples for one (scale, angle) band, stored on the tight bounding
/// box of the band's frequency support in centered coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BandWindow {
    ky_min: isize,
    kx_min: isize,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl BandWindow {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

struct ScaleWindows {
    bands: Vec<BandWindow>,
}

/// Frequency window family plus the FFT plans for every grid size it needs.
/// Immutable once built; one family serves any number of transforms.
pub struct WindowFamily {
    width: usize,
    height: usize,
    num_scales: usize,
    angles_coarse: usize,
    scales: Vec<ScaleWindows>,
    plans: BTreeMap<usize, Fft>,
    forward_count: AtomicUsize,
}

/// Complex coefficient grid for one (scale, angle) band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGrid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
}

/// All bands sharing one dyadic frequency ring.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleBand {
    /// 1-based scale index; 1 is the coarsest.
    pub scale_index: usize,
    pub bands: Vec<BandGrid>,
}

/// Full curvelet decomposition of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveletDecomposition {
    pub scales: Vec<ScaleBand>,
    pub source_width: usize,
    pub source_height: usize,
}

impl CurveletDecomposition {
    /// Total number of stored coefficients across all bands.
    pub fn coefficient_count(&self) -> usize {
        self.scales
            .iter()
            .flat_map(|s| s.bands.iter())
            .map(|b| b.values.len())
            .sum()
    }

    /// Sum of squared coefficient magnitudes.
    pub fn energy(&self) -> f64 {
        self.scales
            .iter()
            .flat_map(|s| s.bands.iter())
            .flat_map(|b| b.values.iter())
            .map(|v| v.norm_sqr())
            .sum()
    }
}

/// Number of wedges at a 1-based scale index: none at the ends, starting at
/// `angles_coarse` and doubling every second scale toward fine.
pub fn num_angles(scale_index: usize, num_scales: usize, angles_coarse: usize) -> usize {
    if scale_index == 1 || scale_index == num_scales {
        1
    } else {
        angles_coarse << ((scale_index - 1) / 2)
    }
}

// Meyer-style smooth step: 0 below 0, 1 above 1, C^3 in between, with
// s(t) + s(1-t) = 1 so paired sin/cos transitions square-sum to one.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * t * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t)
    }
}

fn rise(t: f64) -> f64 {
    libm::sin(FRAC_PI_2 * smooth_step(t))
}

fn fall(t: f64) -> f64 {
    libm::cos(FRAC_PI_2 * smooth_step(t))
}

/// Radial window for a 1-based scale, on the normalized elliptic radius
/// (r = 1 at the Nyquist edge midpoints, sqrt(2) at the grid corners).
/// Transitions around the dyadic boundary `rho` span [2rho/3, 4rho/3].
fn radial_value(scale_index: usize, num_scales: usize, r: f64) -> f64 {
    let rho = |t: usize| libm::exp2(t as f64 - num_scales as f64);
    if scale_index == 1 {
        let (a, b) = transition(rho(1));
        if r <= a {
            1.0
        } else if r < b {
            fall((r - a) / (b - a))
        } else {
            0.0
        }
    } else {
        let (a_in, b_in) = transition(rho(scale_index - 1));
        if r <= a_in {
            return 0.0;
        }
        let inner = if r < b_in { rise((r - a_in) / (b_in - a_in)) } else { 1.0 };
        if scale_index == num_scales {
            return inner;
        }
        let (a_out, b_out) = transition(rho(scale_index));
        if r <= a_out {
            inner
        } else if r < b_out {
            fall((r - a_out) / (b_out - a_out))
        } else {
            0.0
        }
    }
}

fn transition(rho: f64) -> (f64, f64) {
    (2.0 * rho / 3.0, 4.0 * rho / 3.0)
}

/// Angular window for wedge `l` of `angles` equal slots; slot boundaries sit
/// at multiples of 2*pi/angles with transitions of one third of a slot on
/// each side.
fn angular_value(angles: usize, wedge: usize, phi: f64) -> f64 {
    let slot = TAU / angles as f64;
    let w = slot / 3.0;
    let mut d = (phi - wedge as f64 * slot) % TAU;
    if d < 0.0 {
        d += TAU;
    }
    if d <= w {
        rise((d + w) / (2.0 * w))
    } else if d < slot - w {
        1.0
    } else if d < slot + w {
        fall((d - (slot - w)) / (2.0 * w))
    } else if d >= TAU - w {
        rise((d - (TAU - w)) / (2.0 * w))
    } else {
        0.0
    }
}

/// Build the window family for an even `width x height` grid with
/// `num_scales` scales and `angles_coarse` wedges at the coarsest oriented
/// scale. Squared windows sum to one at every frequency sample.
pub fn build_windows(
    width: usize,
    height: usize,
    num_scales: usize,
    angles_coarse: usize,
) -> Result<WindowFamily> {
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(dimension_err!("window grid must have even extents, got {width}x{height}"));
    }
    if num_scales < 2 {
        return Err(argument_err!("at least 2 scales required, got {num_scales}"));
    }
    if angles_coarse < 8 || !angles_coarse.is_multiple_of(4) {
        return Err(argument_err!(
            "angles at the coarsest oriented scale must be a multiple of 4 and at least 8, got {angles_coarse}"
        ));
    }
    let min_dim = width.min(height);
    if min_dim < (1usize << (num_scales + 1)) {
        return Err(argument_err!(
            "{num_scales} scales need a minimum extent of {}, got {min_dim}",
            1usize << (num_scales + 1)
        ));
    }

    let mut scales = Vec::with_capacity(num_scales);
    for scale_index in 1..=num_scales {
        let angles = num_angles(scale_index, num_scales, angles_coarse);
        let mut bands = Vec::with_capacity(angles);
        if scale_index == 1 || scale_index == num_scales {
            bands.push(sample_band(width, height, num_scales, scale_index, None)?);
        } else {
            for wedge in 0..angles {
                bands.push(sample_band(
                    width,
                    height,
                    num_scales,
                    scale_index,
                    Some((angles, wedge)),
                )?);
            }
        }
        scales.push(ScaleWindows { bands });
    }

    let mut plans = BTreeMap::new();
    plans.insert(width, Fft::new(width));
    plans.entry(height).or_insert_with(|| Fft::new(height));
    for scale in &scales {
        for band in &scale.bands {
            plans.entry(band.rows).or_insert_with(|| Fft::new(band.rows));
            plans.entry(band.cols).or_insert_with(|| Fft::new(band.cols));
        }
    }

    Ok(WindowFamily {
        width,
        height,
        num_scales,
        angles_coarse,
        scales,
        plans,
        forward_count: AtomicUsize::new(0),
    })
}

fn sample_band(
    width: usize,
    height: usize,
    num_scales: usize,
    scale_index: usize,
    wedge: Option<(usize, usize)>,
) -> Result<BandWindow> {
    let half_w = (width / 2) as isize;
    let half_h = (height / 2) as isize;

    // Pixel-space bound of the band's radial support.
    let r_hi = if scale_index == num_scales {
        f64::INFINITY
    } else {
        transition(libm::exp2(scale_index as f64 - num_scales as f64)).1
    };
    let bound = |half: isize| -> (isize, isize) {
        if r_hi.is_infinite() {
            (-half, half - 1)
        } else {
            let reach = libm::floor(r_hi * half as f64) as isize;
            ((-reach).max(-half), reach.min(half - 1))
        }
    };
    let (ky0, ky1) = bound(half_h);
    let (kx0, kx1) = bound(half_w);

    let scan_cols = (kx1 - kx0 + 1) as usize;
    let scan_rows = (ky1 - ky0 + 1) as usize;
    let mut scan = vec![0.0f64; scan_rows * scan_cols];
    let (mut ry0, mut ry1, mut rx0, mut rx1) = (isize::MAX, isize::MIN, isize::MAX, isize::MIN);

    for ky in ky0..=ky1 {
        let ny = ky as f64 / half_h as f64;
        for kx in kx0..=kx1 {
            let nx = kx as f64 / half_w as f64;
            let r = libm::hypot(nx, ny);
            let mut v = radial_value(scale_index, num_scales, r);
            if v > 0.0 {
                if let Some((angles, wedge)) = wedge {
                    v *= angular_value(angles, wedge, libm::atan2(ny, nx));
                }
            }
            if v > 0.0 {
                scan[(ky - ky0) as usize * scan_cols + (kx - kx0) as usize] = v;
                ry0 = ry0.min(ky);
                ry1 = ry1.max(ky);
                rx0 = rx0.min(kx);
                rx1 = rx1.max(kx);
            }
        }
    }

    if ry0 > ry1 {
        return Err(argument_err!(
            "band (scale {scale_index}, wedge {wedge:?}) has empty support on a {width}x{height} grid"
        ));
    }

    let rows = (ry1 - ry0 + 1) as usize;
    let cols = (rx1 - rx0 + 1) as usize;
    let mut values = Vec::with_capacity(rows * cols);
    for ky in ry0..=ry1 {
        let row = (ky - ky0) as usize;
        let start = row * scan_cols + (rx0 - kx0) as usize;
        values.extend_from_slice(&scan[start..start + cols]);
    }
    Ok(BandWindow { ky_min: ry0, kx_min: rx0, rows, cols, values })
}

impl WindowFamily {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_scales(&self) -> usize {
        self.num_scales
    }

    pub fn angles_coarse(&self) -> usize {
        self.angles_coarse
    }

    /// Bands per scale, coarse to fine.
    pub fn band_counts(&self) -> Vec<usize> {
        self.scales.iter().map(|s| s.bands.len()).collect()
    }

    pub fn band_windows(&self, scale_index: usize) -> &[BandWindow] {
        &self.scales[scale_index - 1].bands
    }

    /// Number of forward transforms run against this family (diagnostic).
    pub fn forward_transform_count(&self) -> usize {
        self.forward_count.load(Ordering::Relaxed)
    }

    /// Largest deviation of the squared-window sum from one over the whole
    /// frequency grid.
    pub fn partition_deviation(&self) -> f64 {
        let mut sum = vec![0.0f64; self.width * self.height];
        let half_w = (self.width / 2) as isize;
        let half_h = (self.height / 2) as isize;
        for scale in &self.scales {
            for band in &scale.bands {
                for r in 0..band.rows {
                    let y = (band.ky_min + r as isize + half_h) as usize;
                    for c in 0..band.cols {
                        let x = (band.kx_min + c as isize + half_w) as usize;
                        let v = band.values[r * band.cols + c];
                        sum[y * self.width + x] += v * v;
                    }
                }
            }
        }
        sum.iter().map(|&s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    fn plan(&self, len: usize) -> &Fft {
        self.plans.get(&len).expect("plan exists for every stored grid size")
    }
}

/// Forward curvelet transform of raw pixel data (row-major, any finite
/// values). Linear in the input.
pub fn fdct_forward_array(
    pixels: &[f64],
    width: usize,
    height: usize,
    family: &WindowFamily,
) -> Result<CurveletDecomposition> {
    if width != family.width() || height != family.height() {
        return Err(dimension_err!(
            "input {width}x{height} does not match window grid {}x{}",
            family.width(),
            family.height()
        ));
    }
    if pixels.len() != width * height {
        return Err(dimension_err!(
            "pixel count {} does not match {width}x{height}",
            pixels.len()
        ));
    }
    if pixels.iter().any(|v| !v.is_finite()) {
        return Err(argument_err!("pixel values must be finite"));
    }
    family.forward_count.fetch_add(1, Ordering::Relaxed);

    let mut spectrum: Vec<Complex64> =
        pixels.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_forward(&mut spectrum, width, height, family.plan(width), family.plan(height));
    let unit = 1.0 / libm::sqrt((width * height) as f64);
    for v in spectrum.iter_mut() {
        *v *= unit;
    }

    let mut scales = Vec::with_capacity(family.num_scales);
    for (si, scale) in family.scales.iter().enumerate() {
        let mut bands = Vec::with_capacity(scale.bands.len());
        for band in &scale.bands {
            bands.push(forward_band(&spectrum, width, height, band, family));
        }
        scales.push(ScaleBand { scale_index: si + 1, bands });
    }
    Ok(CurveletDecomposition { scales, source_width: width, source_height: height })
}

/// Forward transform of an [`Image`].
pub fn fdct_forward(img: &Image, family: &WindowFamily) -> Result<CurveletDecomposition> {
    fdct_forward_array(img.pixels(), img.width(), img.height(), family)
}

fn forward_band(
    spectrum: &[Complex64],
    width: usize,
    height: usize,
    band: &BandWindow,
    family: &WindowFamily,
) -> BandGrid {
    let (rows, cols) = (band.rows, band.cols);
    let mut wrapped = vec![Complex64::ZERO; rows * cols];
    let col_idx = wrap_indices(band.kx_min, cols, width);
    for r in 0..rows {
        let ky = band.ky_min + r as isize;
        let sy = ky.rem_euclid(height as isize) as usize * width;
        let wy = ky.rem_euclid(rows as isize) as usize * cols;
        let wrow = &band.values[r * cols..(r + 1) * cols];
        for (c, &(sx, wx)) in col_idx.iter().enumerate() {
            wrapped[wy + wx] = spectrum[sy + sx] * wrow[c];
        }
    }
    fft2_inverse(&mut wrapped, cols, rows, family.plan(cols), family.plan(rows));
    let unit = 1.0 / libm::sqrt((rows * cols) as f64);
    for v in wrapped.iter_mut() {
        *v *= unit;
    }
    BandGrid { rows, cols, values: wrapped }
}

// (source index on the standard grid, wrapped index) per window column.
fn wrap_indices(k_min: isize, extent: usize, grid: usize) -> Vec<(usize, usize)> {
    (0..extent)
        .map(|c| {
            let k = k_min + c as isize;
            (k.rem_euclid(grid as isize) as usize, k.rem_euclid(extent as isize) as usize)
        })
        .collect()
}

/// Adjoint of [`fdct_forward`]; with the partition-of-unity windows this
/// reconstructs the pixels exactly (up to roundoff). Returns the row-major
/// real array.
pub fn fdct_inverse(coeffs: &CurveletDecomposition, family: &WindowFamily) -> Result<Vec<f64>> {
    let (width, height) = (family.width(), family.height());
    if coeffs.source_width != width || coeffs.source_height != height {
        return Err(dimension_err!(
            "decomposition source {}x{} does not match window grid {width}x{height}",
            coeffs.source_width,
            coeffs.source_height
        ));
    }
    if coeffs.scales.len() != family.num_scales {
        return Err(dimension_err!(
            "decomposition has {} scales, windows have {}",
            coeffs.scales.len(),
            family.num_scales
        ));
    }
    for (scale, windows) in coeffs.scales.iter().zip(&family.scales) {
        if scale.bands.len() != windows.bands.len() {
            return Err(dimension_err!(
                "scale {} has {} bands, windows have {}",
                scale.scale_index,
                scale.bands.len(),
                windows.bands.len()
            ));
        }
        for (grid, window) in scale.bands.iter().zip(&windows.bands) {
            if grid.rows != window.rows || grid.cols != window.cols {
                return Err(dimension_err!(
                    "band grid {}x{} does not match window support {}x{}",
                    grid.rows,
                    grid.cols,
                    window.rows,
                    window.cols
                ));
            }
            if grid.values.len() != grid.rows * grid.cols {
                return Err(dimension_err!("band grid storage does not match its extents"));
            }
        }
    }

    let mut spectrum = vec![Complex64::ZERO; width * height];
    for (scale, windows) in coeffs.scales.iter().zip(&family.scales) {
        for (grid, band) in scale.bands.iter().zip(&windows.bands) {
            let (rows, cols) = (band.rows, band.cols);
            let mut freq = grid.values.clone();
            fft2_forward(&mut freq, cols, rows, family.plan(cols), family.plan(rows));
            let unit = 1.0 / libm::sqrt((rows * cols) as f64);
            let col_idx = wrap_indices(band.kx_min, cols, width);
            for r in 0..rows {
                let ky = band.ky_min + r as isize;
                let sy = ky.rem_euclid(height as isize) as usize * width;
                let wy = ky.rem_euclid(rows as isize) as usize * cols;
                let wrow = &band.values[r * cols..(r + 1) * cols];
                for (c, &(sx, wx)) in col_idx.iter().enumerate() {
                    spectrum[sy + sx] += freq[wy + wx] * (wrow[c] * unit);
                }
            }
        }
    }

    fft2_inverse(&mut spectrum, width, height, family.plan(width), family.plan(height));
    let unit = 1.0 / libm::sqrt((width * height) as f64);
    Ok(spectrum.iter().map(|v| v.re * unit).collect())
}

/// Concatenated coefficient magnitudes for one 1-based scale, wedges in
/// increasing angle order and row-major within each band.
pub fn coefficient_magnitudes(coeffs: &CurveletDecomposition, scale_index: usize) -> Result<Vec<f64>> {
    if scale_index == 0 || scale_index > coeffs.scales.len() {
        return Err(argument_err!(
            "scale index {scale_index} out of range 1..={}",
            coeffs.scales.len()
        ));
    }
    let scale = &coeffs.scales[scale_index - 1];
    let mut out = Vec::with_capacity(scale.bands.iter().map(|b| b.values.len()).sum());
    for band in &scale.bands {
        out.extend(band.values.iter().map(|v| libm::hypot(v.re, v.im)));
    }
    Ok(out)
}
