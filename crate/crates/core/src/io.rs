//! Binary Netpbm files: PGM (P5) and PPM (P6) images at 8 bits per sample,
//! PBM (P4) for inpainting masks.
//!
//! Writers emit `magic\nwidth height\n[255\n]` followed by the raster, which
//! is also the layout the round-trip guarantee covers. Readers additionally
//! accept arbitrary whitespace and `#` comments in the header.

use std::fs;
use std::path::Path;

use crate::error::{InpaintError, Result};
use crate::image::{ImageBuffer, InpaintingMask};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: Option<usize>,
    data_offset: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(InpaintError::parse(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| InpaintError::parse(start, format!("{what} out of range")))
    }

    // exactly one whitespace byte separates the header from the raster
    fn single_space(&mut self) -> Result<()> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(InpaintError::parse(self.pos, "expected whitespace before raster")),
        }
    }
}

fn parse_header(bytes: &[u8], with_maxval: bool) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(InpaintError::parse(0, "missing Netpbm magic number"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    if width == 0 || height == 0 {
        return Err(InpaintError::parse(cur.pos, format!("empty raster {width}x{height}")));
    }
    let maxval = if with_maxval {
        cur.skip_space();
        let at = cur.pos;
        let m = cur.number("maxval")?;
        if m != 255 {
            return Err(InpaintError::parse(at, format!("unsupported maxval {m}, expected 255")));
        }
        Some(m)
    } else {
        None
    };
    cur.single_space()?;
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_offset: cur.pos,
    })
}

/// Decodes a binary PGM or PPM with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<ImageBuffer> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(InpaintError::parse(0, "expected P5 or P6 magic number")),
    };
    let hdr = parse_header(bytes, true)?;
    debug_assert_eq!(hdr.maxval, Some(255));
    let n = hdr.width * hdr.height;
    let need = n * channels;
    let raster = &bytes[hdr.data_offset..];
    if raster.len() < need {
        return Err(InpaintError::parse(
            bytes.len(),
            format!("truncated raster: {} of {need} bytes", raster.len()),
        ));
    }
    let mut data = vec![0.0; need];
    // interleaved samples to planar channels
    for (p, px) in raster[..need].chunks_exact(channels).enumerate() {
        for (c, &v) in px.iter().enumerate() {
            data[c * n + p] = f64::from(v) / 255.0;
        }
    }
    ImageBuffer::new(hdr.width, hdr.height, channels, data)
}

fn quantise(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

/// Encodes an image as P5 (1 channel) or P6 (3 channels), clamping to
/// `[0, 1]` and rounding `255 * v`.
pub fn encode_pnm(image: &ImageBuffer) -> Vec<u8> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    let n = image.pixels();
    out.reserve(n * image.channels());
    for p in 0..n {
        for c in 0..image.channels() {
            out.push(quantise(image.data()[c * n + p]));
        }
    }
    out
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| InpaintError::from(e).in_file(path))?;
    decode_pnm(&bytes).map_err(|e| e.in_file(path))
}

pub fn write_pnm(image: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pnm(image)).map_err(|e| InpaintError::from(e).in_file(path))
}

/// Decodes a binary PBM; a set bit marks a known pixel. Rows are padded to
/// whole bytes, most significant bit first.
pub fn decode_pbm(bytes: &[u8]) -> Result<InpaintingMask> {
    if bytes.get(..2) != Some(b"P4") {
        return Err(InpaintError::parse(0, "expected P4 magic number"));
    }
    let hdr = parse_header(bytes, false)?;
    debug_assert_eq!(&hdr.magic, b"P4");
    let stride = hdr.width.div_ceil(8);
    let need = stride * hdr.height;
    let raster = &bytes[hdr.data_offset..];
    if raster.len() < need {
        return Err(InpaintError::parse(
            bytes.len(),
            format!("truncated raster: {} of {need} bytes", raster.len()),
        ));
    }
    let mut known = Vec::with_capacity(hdr.width * hdr.height);
    for row in raster[..need].chunks_exact(stride) {
        for x in 0..hdr.width {
            known.push(row[x / 8] & (0x80 >> (x % 8)) != 0);
        }
    }
    InpaintingMask::new(hdr.width, hdr.height, known)
        .map_err(|e| InpaintError::parse(hdr.data_offset, e.to_string()))
}

pub fn encode_pbm(mask: &InpaintingMask) -> Vec<u8> {
    let (w, h) = (mask.width(), mask.height());
    let stride = w.div_ceil(8);
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    let start = out.len();
    out.resize(start + stride * h, 0);
    for y in 0..h {
        for x in 0..w {
            if mask.is_known_at(x, y) {
                out[start + y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    out
}

pub fn read_mask_pbm(path: impl AsRef<Path>) -> Result<InpaintingMask> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| InpaintError::from(e).in_file(path))?;
    decode_pbm(&bytes).map_err(|e| e.in_file(path))
}

/// Reads a mask and checks it against the image it belongs to.
pub fn read_mask_for(path: impl AsRef<Path>, image: &ImageBuffer) -> Result<InpaintingMask> {
    let path = path.as_ref();
    let mask = read_mask_pbm(path)?;
    mask.matches(image).map_err(|e| e.in_file(path))?;
    Ok(mask)
}

pub fn write_mask_pbm(mask: &InpaintingMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pbm(mask)).map_err(|e| InpaintError::from(e).in_file(path))
}
