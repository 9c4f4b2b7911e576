//! PGM (portable graymap) reader and writer. Reads both the ASCII `P2` and
//! binary `P5` variants with maxval up to 255, preserving stored pixel
//! values exactly; writes `P5`.

use std::fs;
use std::io::Write;
use std::path::Path;

use curveface_core::image::Image;

use crate::error::{Error, Result};

/// Decode a PGM byte stream.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<Image> {
    let mut cursor = Cursor { bytes, pos: 0, origin };
    let magic = (cursor.next_byte()?, cursor.next_byte()?);
    let binary = match magic {
        (b'P', b'2') => false,
        (b'P', b'5') => true,
        _ => return Err(cursor.error("not a P2/P5 PGM file")),
    };

    let width = cursor.next_number()? as usize;
    let height = cursor.next_number()? as usize;
    let maxval = cursor.next_number()?;
    if width == 0 || height == 0 {
        return Err(cursor.error("zero image extent"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(cursor.error(format!("unsupported maxval {maxval}; expected 1..=255")));
    }

    let mut pixels = Vec::with_capacity(width * height);
    if binary {
        // A single whitespace byte separates the header from the raster.
        let sep = cursor.next_byte()?;
        if !sep.is_ascii_whitespace() {
            return Err(cursor.error("missing whitespace after maxval"));
        }
        for _ in 0..width * height {
            let v = cursor.next_byte()?;
            if u32::from(v) > maxval {
                return Err(cursor.error(format!("pixel {v} exceeds maxval {maxval}")));
            }
            pixels.push(f64::from(v));
        }
    } else {
        for _ in 0..width * height {
            let v = cursor.next_number()?;
            if v > maxval {
                return Err(cursor.error(format!("pixel {v} exceeds maxval {maxval}")));
            }
            pixels.push(f64::from(v));
        }
    }

    Image::new(width, height, pixels, 8).map_err(Error::from)
}

/// Read and decode a PGM file.
pub fn read(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Write an image as binary P5 with maxval 255.
pub fn write_p5(path: &Path, image: &Image) -> Result<()> {
    let mut out = Vec::with_capacity(32 + image.pixels().len());
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height()).expect("vec write");
    out.extend(image.pixels().iter().map(|&v| v as u8));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a Path,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::format(self.origin, message)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = self
            .bytes
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.error("truncated file"))?;
        self.pos += 1;
        Ok(b)
    }

    /// Next ASCII integer, skipping whitespace and `#` comments.
    fn next_number(&mut self) -> Result<u32> {
        loop {
            match self.bytes.get(self.pos) {
                None => return Err(self.error("truncated header")),
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b) if b.is_ascii_digit() => break,
                Some(&b) => {
                    return Err(self.error(format!("unexpected byte 0x{b:02x} in header")))
                }
            }
        }
        let mut value: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(b - b'0')))
                .ok_or_else(|| self.error("numeric overflow in header"))?;
            self.pos += 1;
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn origin() -> PathBuf {
        PathBuf::from("test.pgm")
    }

    #[test]
    fn decodes_ascii_p2() {
        let data = b"P2\n# a comment\n2 2\n255\n0 255\n128 64\n";
        let img = decode(data, &origin()).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0.0, 255.0, 128.0, 64.0]);
        assert_eq!(img.bit_depth(), 8);
    }

    #[test]
    fn decodes_binary_p5() {
        let mut data = b"P5 3 1 255\n".to_vec();
        data.extend_from_slice(&[7, 0, 200]);
        let img = decode(&data, &origin()).unwrap();
        assert_eq!((img.width(), img.height()), (3, 1));
        assert_eq!(img.pixels(), &[7.0, 0.0, 200.0]);
    }

    #[test]
    fn preserves_values_below_a_small_maxval() {
        let data = b"P2 2 1 15\n3 15\n";
        let img = decode(data, &origin()).unwrap();
        assert_eq!(img.pixels(), &[3.0, 15.0]);
    }

    #[test]
    fn rejects_wide_maxval_and_garbage() {
        assert!(decode(b"P2 1 1 65535\n1\n", &origin()).is_err());
        assert!(decode(b"P6 1 1 255\n", &origin()).is_err());
        assert!(decode(b"P2 1 1 255\n", &origin()).is_err());
        assert!(decode(b"P2 1 1 255\n400\n", &origin()).is_err());
        assert!(decode(b"P5 2 2 255\nab", &origin()).is_err());
    }

    #[test]
    fn p5_round_trips_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = Image::new(3, 2, vec![0.0, 10.0, 255.0, 128.0, 64.0, 1.0], 8).unwrap();
        write_p5(&path, &img).unwrap();
        let back = read(&path).unwrap();
        assert_eq!(back, img);
    }
}
