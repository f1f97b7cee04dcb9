//! Binary file formats: Netpbm P6/P5 images (maxval 255) and the MSPT tensor container.
//!
//! MSPT layout, all integers little-endian:
//!
//! ```text
//! "MSPT" | version u8 = 1 | dtype u8 (0 = f32, 1 = u32) | ndim u8 in 1..=4 | dims u32 * ndim | payload
//! ```
//!
//! The payload holds `product(dims)` 4-byte elements in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{DType, Image, Tensor, TensorData};

pub const MSPT_MAGIC: &[u8; 4] = b"MSPT";
pub const MSPT_VERSION: u8 = 1;
pub const MSPT_MAX_NDIM: usize = 4;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pnm {
    Gray {
        height: usize,
        width: usize,
        pixels: Vec<u8>,
    },
    Rgb(Image),
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as usize))
                .ok_or_else(|| Error::format(field, start, "value overflows"))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::format(field, start, "expected a decimal number"));
        }
        Ok(value)
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Pnm> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(Error::format("magic", 0, "expected P6 or P5")),
    };
    let mut r = HeaderReader { bytes, pos: 2 };
    if !r.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::format("magic", 2, "magic must be followed by whitespace"));
    }
    let width_at = r.pos;
    let width = r.number("width")?;
    let height = r.number("height")?;
    if width == 0 || height == 0 {
        return Err(Error::format("width", width_at, "dimensions must be positive"));
    }
    let maxval_at = r.pos;
    let maxval = r.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format("maxval", maxval_at, format!("maxval must be 255, got {maxval}")));
    }
    match bytes.get(r.pos) {
        Some(b) if b.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(Error::format("maxval", r.pos, "expected one whitespace byte before the payload")),
    }
    let need = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format("payload", r.pos, "image size overflows"))?;
    let payload = &bytes[r.pos..];
    if payload.len() != need {
        let kind = if payload.len() < need { "truncated" } else { "trailing bytes after" };
        return Err(Error::format(
            "payload",
            r.pos + payload.len().min(need),
            format!("{kind} payload: expected {need} bytes, found {}", payload.len()),
        ));
    }
    if channels == 1 {
        return Ok(Pnm::Gray {
            height,
            width,
            pixels: payload.to_vec(),
        });
    }
    let pixels = payload.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(Pnm::Rgb(Image::new(height, width, pixels)?))
}

pub fn encode_ppm(image: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.pixels().iter().flatten());
    out
}

pub fn encode_pgm(height: usize, width: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if height == 0 || width == 0 || pixels.len() != height * width {
        return Err(Error::invalid("gray image size does not match pixel count"));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Image> {
    match decode_pnm(&read_file(path.as_ref())?)? {
        Pnm::Rgb(image) => Ok(image),
        Pnm::Gray { .. } => Err(Error::format("magic", 0, "expected P6 (color), found P5")),
    }
}

/// Reads P6 as-is and expands P5 gray to equal RGB channels.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    match decode_pnm(&read_file(path.as_ref())?)? {
        Pnm::Rgb(image) => Ok(image),
        Pnm::Gray {
            height,
            width,
            pixels,
        } => Image::new(height, width, pixels.into_iter().map(|g| [g, g, g]).collect()),
    }
}

pub fn write_ppm(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_ppm(image))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    match decode_pnm(&read_file(path.as_ref())?)? {
        Pnm::Gray {
            height,
            width,
            pixels,
        } => Ok((height, width, pixels)),
        Pnm::Rgb(_) => Err(Error::format("magic", 0, "expected P5 (gray), found P6")),
    }
}

pub fn write_pgm(height: usize, width: usize, pixels: &[u8], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(height, width, pixels)?)
}

pub fn encode_mspt(tensor: &Tensor) -> Result<Vec<u8>> {
    let shape = tensor.shape();
    if shape.len() > MSPT_MAX_NDIM {
        return Err(Error::invalid(format!(
            "MSPT supports at most {MSPT_MAX_NDIM} dimensions, tensor has {}",
            shape.len()
        )));
    }
    let mut out = Vec::with_capacity(7 + 4 * shape.len() + 4 * tensor.len());
    out.extend_from_slice(MSPT_MAGIC);
    out.push(MSPT_VERSION);
    out.push(match tensor.dtype() {
        DType::F32 => 0,
        DType::U32 => 1,
    });
    out.push(shape.len() as u8);
    for &d in shape {
        let d = u32::try_from(d).map_err(|_| Error::invalid("MSPT dimensions must fit in u32"))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    match tensor.data() {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::U32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    Ok(out)
}

pub fn decode_mspt(bytes: &[u8]) -> Result<Tensor> {
    if bytes.get(..4) != Some(MSPT_MAGIC.as_slice()) {
        return Err(Error::format("magic", 0, "expected \"MSPT\""));
    }
    match bytes.get(4) {
        Some(&MSPT_VERSION) => {}
        Some(v) => return Err(Error::format("version", 4, format!("unsupported version {v}"))),
        None => return Err(Error::format("version", 4, "file ends before version byte")),
    }
    let dtype = match bytes.get(5) {
        Some(0) => DType::F32,
        Some(1) => DType::U32,
        Some(c) => return Err(Error::format("dtype", 5, format!("unknown dtype code {c}"))),
        None => return Err(Error::format("dtype", 5, "file ends before dtype byte")),
    };
    let ndim = match bytes.get(6) {
        Some(&n) if (1..=MSPT_MAX_NDIM as u8).contains(&n) => n as usize,
        Some(n) => return Err(Error::format("ndim", 6, format!("ndim must be in 1..=4, got {n}"))),
        None => return Err(Error::format("ndim", 6, "file ends before ndim byte")),
    };
    let header_len = 7 + 4 * ndim;
    if bytes.len() < header_len {
        return Err(Error::format("dims", bytes.len(), "file ends inside the dimension list"));
    }
    let mut shape = Vec::with_capacity(ndim);
    for (i, chunk) in bytes[7..header_len].chunks_exact(4).enumerate() {
        let d = u32::from_le_bytes(chunk.try_into().expect("chunk of 4")) as usize;
        if d == 0 {
            return Err(Error::format("dims", 7 + 4 * i, "dimension must be positive"));
        }
        shape.push(d);
    }
    let count = shape
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .and_then(|n| n.checked_mul(4).map(|_| n))
        .ok_or_else(|| Error::format("dims", 7, "element count overflows"))?;
    let payload = &bytes[header_len..];
    if payload.len() != count * 4 {
        return Err(Error::format(
            "payload",
            header_len,
            format!("expected {} payload bytes, found {}", count * 4, payload.len()),
        ));
    }
    let words = payload.chunks_exact(4).map(|c| c.try_into().expect("chunk of 4"));
    let data = match dtype {
        DType::F32 => TensorData::F32(words.map(f32::from_le_bytes).collect()),
        DType::U32 => TensorData::U32(words.map(u32::from_le_bytes).collect()),
    };
    Tensor::new(shape, data)
}

pub fn read_mspt(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_mspt(&read_file(path.as_ref())?)
}

pub fn write_mspt(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_mspt(tensor)?)
}
