//! Raster file I/O: binary PPM/PGM and 8/16-bit PNG in, 8-bit PNG and PPM
//! out, plus single-channel mask files.
//!
//! Inputs are treated as linear-light; no transfer-function decode is applied.
//! Values are normalized by the source's full scale `2^bits - 1`, where
//! `bits` comes from [`PreprocessConfig::source_bit_depth`] or, by default,
//! the container depth.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{LinearImage, PreprocessConfig};

/// Loads a PPM or PNG file into a [`LinearImage`] with an all-true mask.
pub fn load_image(path: &Path, config: &PreprocessConfig) -> Result<LinearImage> {
    config.validate()?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, config)
}

/// Decodes PPM (P6) or PNG bytes. See [`load_image`].
pub fn decode_image(bytes: &[u8], config: &PreprocessConfig) -> Result<LinearImage> {
    config.validate()?;
    let (width, height, container_bits, samples) = if bytes.starts_with(b"P6") {
        decode_pnm(bytes, 3)?
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png_rgb(bytes)?
    } else {
        return Err(Error::format("unsupported image format (expect P6 PPM or PNG)"));
    };
    let bits = config.source_bit_depth.unwrap_or(container_bits);
    let scale = 1.0 / ((1u32 << bits) - 1) as f32;
    let data = samples
        .iter()
        .map(|s| (*s as f32 * scale).min(1.0))
        .collect();
    LinearImage::new(height, width, data)
}

/// Loads a single-channel mask (PGM P5 or grayscale PNG). Nonzero = valid.
pub fn load_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, _bits, samples) = if bytes.starts_with(b"P5") {
        decode_pnm(&bytes, 1)?
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png_gray(&bytes)?
    } else {
        return Err(Error::format("unsupported mask format (expect P5 PGM or grayscale PNG)"));
    };
    Ok((height, width, samples.iter().map(|s| *s != 0).collect()))
}

/// Writes an 8-bit RGB PNG. Values are quantized with round-to-nearest;
/// apply [`crate::imaging::gamma_encode`] beforehand for display output.
pub fn save_png8(image: &LinearImage, path: &Path) -> Result<()> {
    let buf: Vec<u8> = image
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    image::save_buffer(
        path,
        &buf,
        image.width() as u32,
        image.height() as u32,
        image::ColorType::Rgb8,
    )
    .map_err(|e| Error::format(format!("png encode failed for {}: {e}", path.display())))
}

/// Writes a binary PPM, 8-bit (maxval 255) or 16-bit (maxval 65535,
/// big-endian samples).
pub fn save_ppm(image: &LinearImage, path: &Path, sixteen_bit: bool) -> Result<()> {
    let mut out = Vec::new();
    let maxval = if sixteen_bit { 65535u32 } else { 255 };
    write!(out, "P6\n{} {}\n{}\n", image.width(), image.height(), maxval).expect("vec write");
    for v in image.data() {
        let s = (v.clamp(0.0, 1.0) as f64 * maxval as f64).round() as u32;
        if sixteen_bit {
            out.extend_from_slice(&(s as u16).to_be_bytes());
        } else {
            out.push(s as u8);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a binary PNM body (P5/P6) into raw samples. Returns
/// `(width, height, container_bits, samples)`.
fn decode_pnm(bytes: &[u8], channels: usize) -> Result<(usize, usize, u32, Vec<u16>)> {
    let mut pos = 2; // past magic
    let width = read_pnm_int(bytes, &mut pos)?;
    let height = read_pnm_int(bytes, &mut pos)?;
    let maxval = read_pnm_int(bytes, &mut pos)?;
    if width == 0 || height == 0 {
        return Err(Error::format("zero-dimension PNM image"));
    }
    let bits = match maxval {
        255 => 8,
        65535 => 16,
        other => {
            return Err(Error::format(format!(
                "unsupported PNM maxval {other} (expect 255 or 65535)"
            )))
        }
    };
    // Single whitespace byte separates the header from sample data.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::format("truncated PNM header")),
    }
    let count = width * height * channels;
    let body = &bytes[pos..];
    let samples = if bits == 8 {
        if body.len() < count {
            return Err(Error::format("truncated PNM pixel data"));
        }
        body[..count].iter().map(|b| *b as u16).collect()
    } else {
        if body.len() < count * 2 {
            return Err(Error::format("truncated PNM pixel data"));
        }
        body[..count * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok((width, height, bits, samples))
}

/// Reads the next decimal token, skipping whitespace and `#` comments.
fn read_pnm_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while !matches!(bytes.get(*pos), None | Some(b'\n')) {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            _ => return Err(Error::format("truncated PNM header")),
        }
    }
    let start = *pos;
    while matches!(bytes.get(*pos), Some(b) if b.is_ascii_digit()) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("bad PNM header field"))
}

fn decode_png_rgb(bytes: &[u8]) -> Result<(usize, usize, u32, Vec<u16>)> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(format!("png decode failed: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::format("zero-dimension PNG image"));
    }
    use image::DynamicImage::*;
    let (bits, samples): (u32, Vec<u16>) = match img {
        ImageRgb8(buf) => (8, buf.into_raw().iter().map(|b| *b as u16).collect()),
        ImageRgb16(buf) => (16, buf.into_raw()),
        ImageRgba8(buf) => (
            8,
            buf.into_raw()
                .chunks_exact(4)
                .flat_map(|p| [p[0] as u16, p[1] as u16, p[2] as u16])
                .collect(),
        ),
        ImageRgba16(buf) => (
            16,
            buf.into_raw()
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect(),
        ),
        _ => return Err(Error::format("unsupported PNG color type (expect 8/16-bit RGB)")),
    };
    Ok((w, h, bits, samples))
}

fn decode_png_gray(bytes: &[u8]) -> Result<(usize, usize, u32, Vec<u16>)> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(format!("png decode failed: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    use image::DynamicImage::*;
    let (bits, samples): (u32, Vec<u16>) = match img {
        ImageLuma8(buf) => (8, buf.into_raw().iter().map(|b| *b as u16).collect()),
        ImageLuma16(buf) => (16, buf.into_raw()),
        _ => return Err(Error::format("mask PNG must be single-channel")),
    };
    Ok((w, h, bits, samples))
}
