//! Minimal PGM (P2/P5) reader and writer. Pixels are normalized to
//! `[0, 1]` on load and denormalized with round-half-up on save, so the
//! per-pixel quantization error is at most `1 / (2 * maxval)`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::vector::PrimalVector;

/// A grayscale image with its quantization level. `pixels` holds
/// row-major normalized intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageFile {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub pixels: Vec<f64>,
}

impl ImageFile {
    pub fn new(pixels: Vec<f64>, width: usize, height: usize, maxval: u32) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::dim("image pixels", width * height, pixels.len()));
        }
        if maxval != 255 && maxval != 65535 {
            return Err(Error::Config(format!(
                "maxval must be 255 or 65535, got {maxval}"
            )));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn from_normalized(pixels: Vec<f64>, width: usize, height: usize) -> Result<Self> {
        Self::new(pixels, width, height, 255)
    }

    pub fn to_primal(&self) -> PrimalVector {
        PrimalVector::new(self.pixels.clone())
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::PgmParse {
            offset: self.pos,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    /// Skips whitespace and `#` comments running to end of line.
    fn skip_separators(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b'#' {
                while let Some(c) = self.peek() {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_separators();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).expect("digits are ascii");
        match text.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err(format!("{what} out of range"))
            }
        }
    }
}

/// Parses a P5 (binary) or P2 (ASCII) PGM byte buffer.
pub fn parse_pgm(data: &[u8]) -> Result<ImageFile> {
    let mut cur = Cursor { data, pos: 0 };
    if data.len() < 2 {
        return cur.err("truncated magic");
    }
    let magic = &data[..2];
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return cur.err("not a P2/P5 PGM file"),
    };
    cur.pos = 2;

    let width = cur.read_uint("width")? as usize;
    let height = cur.read_uint("height")? as usize;
    if width == 0 || height == 0 {
        return cur.err(format!("zero image dimensions {width}x{height}"));
    }
    let maxval = cur.read_uint("maxval")? as u32;
    if maxval != 255 && maxval != 65535 {
        return cur.err(format!("unsupported maxval {maxval} (need 255 or 65535)"));
    }

    let n = width * height;
    let mut pixels = Vec::with_capacity(n);
    let scale = 1.0 / maxval as f64;

    if binary {
        // exactly one whitespace byte separates the header from the payload
        match cur.peek() {
            Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
            _ => return cur.err("expected single whitespace before binary payload"),
        }
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        let need = n * bytes_per;
        if data.len() < cur.pos + need {
            cur.pos = data.len();
            return cur.err(format!(
                "truncated payload: need {need} bytes, have {}",
                data.len().saturating_sub(cur.pos)
            ));
        }
        for k in 0..n {
            let v = if bytes_per == 2 {
                // big-endian 16-bit samples
                let hi = data[cur.pos + 2 * k] as u32;
                let lo = data[cur.pos + 2 * k + 1] as u32;
                (hi << 8) | lo
            } else {
                data[cur.pos + k] as u32
            };
            pixels.push(v as f64 * scale);
        }
    } else {
        for _ in 0..n {
            let v = cur.read_uint("pixel value")?;
            if v > maxval as u64 {
                return cur.err(format!("pixel value {v} exceeds maxval {maxval}"));
            }
            pixels.push(v as f64 * scale);
        }
    }

    ImageFile::new(pixels, width, height, maxval)
}

/// Encodes to canonical binary P5: `P5\n<w> <h>\n<maxval>\n` followed by
/// the payload. Pixels are clamped to `[0, 1]` and quantized with
/// round-half-up.
pub fn encode_pgm(img: &ImageFile) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    let maxval = img.maxval as f64;
    for &p in &img.pixels {
        let q = (p.clamp(0.0, 1.0) * maxval + 0.5).floor() as u32;
        let q = q.min(img.maxval);
        if img.maxval > 255 {
            out.push((q >> 8) as u8);
            out.push((q & 0xff) as u8);
        } else {
            out.push(q as u8);
        }
    }
    out
}

pub fn load_pgm<P: AsRef<Path>>(path: P) -> Result<ImageFile> {
    let data = std::fs::read(path)?;
    parse_pgm(&data)
}

pub fn save_pgm<P: AsRef<Path>>(path: P, img: &ImageFile) -> Result<()> {
    std::fs::write(path, encode_pgm(img))?;
    Ok(())
}
