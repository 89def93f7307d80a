//! Equidistant center-pixel downsampling.
//!
//! The raster is tiled into S×S blocks and only each block's center pixel
//! (offset `S/2` in both axes) is kept, shrinking estimator work by roughly
//! S². No interpolation: every output value is an input value.

use crate::error::{Error, Result};
use crate::imaging::LinearImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DownsampleParams {
    interval: u32,
}

impl DownsampleParams {
    pub fn new(interval: u32) -> Result<Self> {
        if interval < 1 {
            return Err(Error::parameter("downsampling interval must be >= 1"));
        }
        Ok(Self { interval })
    }

    pub fn interval(&self) -> u32 {
        self.interval
    }
}

/// Keeps one pixel per S×S block: output (i, j) = input (i·S + S/2, j·S + S/2).
/// Trailing rows/columns that do not fill a block are dropped.
pub fn equidistant_downsample(
    image: &LinearImage,
    params: DownsampleParams,
) -> Result<LinearImage> {
    let s = params.interval as usize;
    if s == 1 {
        return Ok(image.clone());
    }
    if image.height() < s || image.width() < s {
        return Err(Error::dimension(format!(
            "image {}x{} smaller than downsampling interval {s}",
            image.height(),
            image.width()
        )));
    }
    let out_h = image.height() / s;
    let out_w = image.width() / s;
    let off = s / 2;
    let mut data = Vec::with_capacity(out_h * out_w * 3);
    let mut mask = Vec::with_capacity(out_h * out_w);
    for i in 0..out_h {
        let r = i * s + off;
        for j in 0..out_w {
            let c = j * s + off;
            data.extend_from_slice(&image.pixel(r, c));
            mask.push(image.is_valid(r, c));
        }
    }
    Ok(LinearImage::from_raw(out_h, out_w, data, mask))
}
