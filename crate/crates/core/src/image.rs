//! Grayscale images and the preprocessing steps applied before the transform:
//! luma conversion, block-mean downsampling, bit-depth quantization and
//! replicate padding to even extents.

use alloc::vec::Vec;

use crate::error::{argument_err, dimension_err};
use crate::Result;

/// Grayscale image with quantization metadata.
///
/// Pixels always live on the 8-bit scale `[0, 255]`. A `bit_depth` of `b`
/// means every pixel is a multiple of `2^(8-b)`, so at most `2^b` distinct
/// levels occur and the level index `pixel / 2^(8-b)` lies in `[0, 2^b - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    bit_depth: u8,
}

/// Result of [`pad_to_even`], keeping the pre-padding extents around so
/// downstream results can still be attributed to the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct Padded {
    pub image: Image,
    pub original_width: usize,
    pub original_height: usize,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, bit_depth: u8) -> Result<Self> {
        if !matches!(bit_depth, 2 | 4 | 8) {
            return Err(argument_err!("bit depth must be 2, 4 or 8, got {bit_depth}"));
        }
        if width == 0 || height == 0 {
            return Err(dimension_err!("image extents must be positive, got {width}x{height}"));
        }
        if pixels.len() != width * height {
            return Err(dimension_err!(
                "pixel count {} does not match {width}x{height}",
                pixels.len()
            ));
        }
        let step = level_step(bit_depth);
        for &v in &pixels {
            if !v.is_finite() || !(0.0..=255.0).contains(&v) || (v / step) != libm::floor(v / step)
            {
                return Err(argument_err!(
                    "pixel value {v} is not a {bit_depth}-bit level on the 8-bit scale"
                ));
            }
        }
        Ok(Image { width, height, pixels, bit_depth })
    }

    /// 8-bit image from raw bytes, as produced by decoders.
    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect(), 8)
    }

    pub fn constant(width: usize, height: usize, value: f64, bit_depth: u8) -> Result<Self> {
        Self::new(width, height, alloc::vec![value; width * height], bit_depth)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Number of distinct values actually present.
    pub fn distinct_values(&self) -> usize {
        let mut seen: Vec<u64> = self.pixels.iter().map(|v| v.to_bits()).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

fn level_step(bit_depth: u8) -> f64 {
    f64::from(1u32 << (8 - u32::from(bit_depth)))
}

/// Combine RGB channels into an 8-bit grayscale image using Rec. 601 luma
/// weights, rounding half away from zero.
pub fn grayscale_convert(
    width: usize,
    height: usize,
    r: &[f64],
    g: &[f64],
    b: &[f64],
) -> Result<Image> {
    if r.len() != g.len() || g.len() != b.len() {
        return Err(dimension_err!(
            "channel lengths differ: r={} g={} b={}",
            r.len(),
            g.len(),
            b.len()
        ));
    }
    if r.len() != width * height {
        return Err(dimension_err!(
            "channel length {} does not match {width}x{height}",
            r.len()
        ));
    }
    let pixels = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| {
            let luma = 0.299 * r + 0.587 * g + 0.114 * b;
            libm::round(luma).clamp(0.0, 255.0)
        })
        .collect();
    Image::new(width, height, pixels, 8)
}

/// Shrink by an integer factor, replacing each `factor x factor` block with
/// its rounded arithmetic mean. Trailing rows/columns that do not fill a
/// whole block are discarded. The output is always 8-bit: block means need
/// not stay on the input's quantization grid.
pub fn downsample(img: &Image, factor: usize) -> Result<Image> {
    if factor == 0 {
        return Err(argument_err!("downsampling factor must be at least 1"));
    }
    if factor > img.width || factor > img.height {
        return Err(dimension_err!(
            "factor {factor} exceeds image extents {}x{}",
            img.width,
            img.height
        ));
    }
    let out_w = img.width / factor;
    let out_h = img.height / factor;
    let norm = 1.0 / (factor * factor) as f64;
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for by in 0..out_h {
        for bx in 0..out_w {
            let mut sum = 0.0;
            for dy in 0..factor {
                for dx in 0..factor {
                    sum += img.get(bx * factor + dx, by * factor + dy);
                }
            }
            pixels.push(libm::round(sum * norm).clamp(0.0, 255.0));
        }
    }
    Image::new(out_w, out_h, pixels, 8)
}

/// Reduce an 8-bit image to `target_bits` levels with a uniform truncating
/// quantizer: `v -> floor(v / 2^(8-b)) * 2^(8-b)`. Idempotent on its own
/// output.
pub fn quantize(img: &Image, target_bits: u8) -> Result<Image> {
    if !matches!(target_bits, 2 | 4 | 8) {
        return Err(argument_err!("target bit depth must be 2, 4 or 8, got {target_bits}"));
    }
    if target_bits > img.bit_depth {
        return Err(argument_err!(
            "cannot quantize a {}-bit image up to {target_bits} bits",
            img.bit_depth
        ));
    }
    let step = level_step(target_bits);
    let pixels = img.pixels.iter().map(|&v| libm::floor(v / step) * step).collect();
    Image::new(img.width, img.height, pixels, target_bits)
}

/// Replicate the last row and/or column once so both extents become even.
/// Even images pass through unchanged.
pub fn pad_to_even(img: &Image) -> Padded {
    let original_width = img.width;
    let original_height = img.height;
    let out_w = img.width + img.width % 2;
    let out_h = img.height + img.height % 2;
    if out_w == img.width && out_h == img.height {
        return Padded { image: img.clone(), original_width, original_height };
    }
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let sy = y.min(img.height - 1);
        for x in 0..out_w {
            let sx = x.min(img.width - 1);
            pixels.push(img.get(sx, sy));
        }
    }
    let image = Image::new(out_w, out_h, pixels, img.bit_depth)
        .expect("padding preserves pixel validity");
    Padded { image, original_width, original_height }
}
