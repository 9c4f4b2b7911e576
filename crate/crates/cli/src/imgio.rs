//! Image loading and the fixed preprocessing applied to every dataset
//! image: grayscale conversion, resolution reduction and padding to even
//! extents.

use std::path::Path;

use curveface_core::image::{downsample, grayscale_convert, pad_to_even, Image};

use crate::error::{Error, Result};
use crate::pgm;

/// Largest smaller-dimension an image may keep before the integer
/// downsampling policy kicks in.
pub const MAX_MIN_DIMENSION: usize = 200;

/// Load a grayscale 8-bit image. PGM files go through the bit-exact P2/P5
/// reader; PNG and JPEG decode through the image crate with color inputs
/// reduced by the Rec. 601 luma conversion.
pub fn load_image(path: &Path) -> Result<Image> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => pgm::read(path),
        "png" | "jpg" | "jpeg" => {
            let decoded = image::open(path)
                .map_err(|e| Error::format(path, format!("decode failed: {e}")))?;
            match decoded {
                image::DynamicImage::ImageLuma8(gray) => {
                    let (w, h) = gray.dimensions();
                    Image::from_bytes(w as usize, h as usize, gray.as_raw()).map_err(Error::from)
                }
                other => {
                    let rgb = other.to_rgb8();
                    let (w, h) = rgb.dimensions();
                    let n = (w * h) as usize;
                    let mut r = Vec::with_capacity(n);
                    let mut g = Vec::with_capacity(n);
                    let mut b = Vec::with_capacity(n);
                    for px in rgb.pixels() {
                        r.push(f64::from(px[0]));
                        g.push(f64::from(px[1]));
                        b.push(f64::from(px[2]));
                    }
                    grayscale_convert(w as usize, h as usize, &r, &g, &b).map_err(Error::from)
                }
            }
        }
        other => Err(Error::format(path, format!("unsupported image format '.{other}'"))),
    }
}

/// Smallest integer factor that brings the smaller dimension down to
/// [`MAX_MIN_DIMENSION`] or below; 1 when the image is already small enough.
pub fn resolution_factor(width: usize, height: usize) -> usize {
    let min_dim = width.min(height);
    if min_dim <= MAX_MIN_DIMENSION {
        return 1;
    }
    let mut factor = 2;
    while min_dim / factor > MAX_MIN_DIMENSION {
        factor += 1;
    }
    factor
}

/// A dataset image after the standard preprocessing, with enough metadata
/// to attribute it back to the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedImage {
    pub image: Image,
    pub original_width: usize,
    pub original_height: usize,
    pub downsample_factor: usize,
}

/// Apply the resolution policy and pad to even extents.
pub fn preprocess(img: &Image) -> Result<PreparedImage> {
    let original_width = img.width();
    let original_height = img.height();
    let factor = resolution_factor(original_width, original_height);
    let reduced = if factor > 1 { downsample(img, factor)? } else { img.clone() };
    let padded = pad_to_even(&reduced);
    Ok(PreparedImage {
        image: padded.image,
        original_width,
        original_height,
        downsample_factor: factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_policy_on_the_reference_geometries() {
        // The three database geometries: 92x112 and 180x200 stay, 640x480
        // shrinks by the smallest factor that reaches the 200 cap.
        assert_eq!(resolution_factor(92, 112), 1);
        assert_eq!(resolution_factor(180, 200), 1);
        assert_eq!(resolution_factor(640, 480), 3);
        assert_eq!(resolution_factor(201, 300), 2);
        assert_eq!(resolution_factor(1200, 1600), 6);
    }

    #[test]
    fn policy_result_lands_in_range() {
        for min_dim in [201usize, 250, 399, 401, 480, 640, 999, 2000, 5000] {
            let f = resolution_factor(min_dim, min_dim);
            let out = min_dim / f;
            assert!(out <= 200, "min {min_dim} -> {out}");
            assert!(out >= 80, "min {min_dim} -> {out}");
        }
    }

    #[test]
    fn preprocess_pads_odd_results() {
        let img = Image::constant(641, 481, 100.0, 8).unwrap();
        let prepared = preprocess(&img).unwrap();
        // 641x481 -> factor 3 -> 213x160 -> padded to 214x160.
        assert_eq!(prepared.downsample_factor, 3);
        assert_eq!((prepared.image.width(), prepared.image.height()), (214, 160));
        assert_eq!((prepared.original_width, prepared.original_height), (641, 481));
    }

    #[test]
    fn unknown_extension_is_a_format_error() {
        let err = load_image(Path::new("face.tiff")).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }
}
