//! Pixel-level data model: linear-light rasters, illuminant vectors, and the
//! preprocessing / correction / display-encoding transforms.
//!
//! All estimation code works on [`LinearImage`]: an H×W×3 raster of
//! linear-light responses in `[0, 1]` with a per-pixel validity mask.
//! Pixels masked out (saturation clipping, chart masks) stay in the raster so
//! spatial operations keep their geometry; estimators skip them.

use crate::error::{Error, Result};

/// An H×W RGB raster of linear channel responses in `[0, 1]` plus a validity
/// mask. Immutable after construction; transforms return new images.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearImage {
    height: usize,
    width: usize,
    /// Row-major, interleaved RGB. `len == height * width * 3`.
    data: Vec<f32>,
    /// Row-major, `true` = pixel participates in estimation. `len == height * width`.
    mask: Vec<bool>,
}

impl LinearImage {
    /// Builds an image with an all-true mask. Every value must lie in `[0, 1]`.
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        let mask = vec![true; height * width];
        Self::with_mask(height, width, data, mask)
    }

    /// Builds an image with an explicit mask. Every value must lie in `[0, 1]`.
    pub fn with_mask(height: usize, width: usize, data: Vec<f32>, mask: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::dimension("image dimensions must be at least 1x1"));
        }
        if data.len() != height * width * 3 {
            return Err(Error::dimension(format!(
                "data length {} does not match {}x{}x3",
                data.len(),
                height,
                width
            )));
        }
        if mask.len() != height * width {
            return Err(Error::dimension(format!(
                "mask length {} does not match {}x{}",
                mask.len(),
                height,
                width
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::parameter(format!(
                "pixel value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
            mask,
        })
    }

    /// Builds an image from a per-pixel closure; all-true mask.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    /// Uniform image of a single color.
    pub fn constant(height: usize, width: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::from_fn(height, width, |_, _| rgb)
    }

    /// Internal constructor for derived rasters (derivative magnitudes) whose
    /// values may exceed 1. Dimension consistency is still required.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f32>, mask: Vec<bool>) -> Self {
        debug_assert_eq!(data.len(), height * width * 3);
        debug_assert_eq!(mask.len(), height * width);
        Self {
            height,
            width,
            data,
            mask,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Total raster pixels, masked or not.
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn unmasked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub(crate) fn pixel_index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f32; 3] {
        let i = self.pixel_index(row, col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.mask[self.pixel_index(row, col)]
    }

    /// Returns a copy with the given mask intersected into the existing one.
    pub fn with_mask_intersection(&self, other: &[bool]) -> Result<Self> {
        if other.len() != self.mask.len() {
            return Err(Error::dimension(format!(
                "mask length {} does not match {} pixels",
                other.len(),
                self.mask.len()
            )));
        }
        let mask = self
            .mask
            .iter()
            .zip(other)
            .map(|(a, b)| *a && *b)
            .collect();
        Ok(Self {
            height: self.height,
            width: self.width,
            data: self.data.clone(),
            mask,
        })
    }
}

/// The direction of a scene illuminant in RGB. Scale-free: stored with unit
/// L2 norm, compared only by angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IlluminantEstimate {
    rgb: [f64; 3],
}

impl IlluminantEstimate {
    /// Normalizes a nonnegative, not-all-zero vector to unit L2 norm.
    pub fn new(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::parameter(format!(
                "illuminant components must be finite and nonnegative, got {rgb:?}"
            )));
        }
        let norm = (rgb[0] * rgb[0] + rgb[1] * rgb[1] + rgb[2] * rgb[2]).sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateEstimate);
        }
        Ok(Self {
            rgb: [rgb[0] / norm, rgb[1] / norm, rgb[2] / norm],
        })
    }

    /// Unit-norm components.
    pub fn rgb(&self) -> [f64; 3] {
        self.rgb
    }

    /// Components rescaled so the largest equals 1 (the form used when
    /// dividing an image by the illuminant).
    pub fn max_normalized(&self) -> [f64; 3] {
        let m = self.rgb[0].max(self.rgb[1]).max(self.rgb[2]);
        [self.rgb[0] / m, self.rgb[1] / m, self.rgb[2] / m]
    }
}

/// Ingestion and preprocessing settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreprocessConfig {
    /// Fraction of full scale above which a pixel counts as saturated,
    /// in `(0, 1]`. 1.0 disables clipping (no stored value exceeds 1).
    pub saturation_fraction: f64,
    /// Effective bit depth of the source data inside its container
    /// (e.g. 12-bit camera data stored in 16-bit PNGs). `None` uses the
    /// container's own depth.
    pub source_bit_depth: Option<u32>,
    /// Re-quantize loaded data to the 8-bit grid.
    pub quantize_to_8bit: bool,
    /// Quantize before rather than after saturation clipping.
    pub quantize_before_clip: bool,
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.saturation_fraction > 0.0 && self.saturation_fraction <= 1.0) {
            return Err(Error::parameter(format!(
                "saturation_fraction {} outside (0, 1]",
                self.saturation_fraction
            )));
        }
        if let Some(bits) = self.source_bit_depth {
            if !(8..=16).contains(&bits) {
                return Err(Error::format(format!("unsupported bit depth {bits}")));
            }
        }
        Ok(())
    }
}

impl Default for PreprocessConfig {
    /// Raw load: no clipping, container-native depth, no quantization.
    fn default() -> Self {
        Self {
            saturation_fraction: 1.0,
            source_bit_depth: None,
            quantize_to_8bit: false,
            quantize_before_clip: false,
        }
    }
}

/// Masks out every pixel where any channel exceeds the saturation fraction
/// (strictly greater). Data values are untouched.
pub fn clip_saturated(image: &LinearImage, config: &PreprocessConfig) -> LinearImage {
    let threshold = config.saturation_fraction as f32;
    let mut mask = image.mask().to_vec();
    for (i, m) in mask.iter_mut().enumerate() {
        let px = &image.data()[i * 3..i * 3 + 3];
        if px.iter().any(|v| *v > threshold) {
            *m = false;
        }
    }
    LinearImage::from_raw(image.height(), image.width(), image.data().to_vec(), mask)
}

/// Snaps every channel value to the 8-bit grid: `round(v * 255) / 255`.
pub fn quantize_8bit(image: &LinearImage) -> LinearImage {
    let data = image
        .data()
        .iter()
        .map(|v| (v * 255.0).round() / 255.0)
        .collect();
    LinearImage::from_raw(image.height(), image.width(), data, image.mask().to_vec())
}

/// Applies saturation clipping and 8-bit quantization in the configured order.
pub fn preprocess(image: &LinearImage, config: &PreprocessConfig) -> LinearImage {
    if config.quantize_to_8bit && config.quantize_before_clip {
        clip_saturated(&quantize_8bit(image), config)
    } else if config.quantize_to_8bit {
        quantize_8bit(&clip_saturated(image, config))
    } else {
        clip_saturated(image, config)
    }
}

/// Divides the image by the illuminant (rescaled so its largest channel is 1)
/// and clamps to `[0, 1]`. Fails if any illuminant channel is zero.
pub fn correct_image(image: &LinearImage, illuminant: &IlluminantEstimate) -> Result<LinearImage> {
    let e = illuminant.max_normalized();
    if e.iter().any(|v| *v <= 0.0) {
        return Err(Error::DegenerateIlluminant);
    }
    let gains = [1.0 / e[0] as f32, 1.0 / e[1] as f32, 1.0 / e[2] as f32];
    let data = image
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            [
                (px[0] * gains[0]).clamp(0.0, 1.0),
                (px[1] * gains[1]).clamp(0.0, 1.0),
                (px[2] * gains[2]).clamp(0.0, 1.0),
            ]
        })
        .collect();
    Ok(LinearImage::from_raw(
        image.height(),
        image.width(),
        data,
        image.mask().to_vec(),
    ))
}

/// Display encoding: `v -> v^(1/gamma)`. Never fed back into estimation.
pub fn gamma_encode(image: &LinearImage, gamma: f64) -> Result<LinearImage> {
    if !(gamma > 0.0) {
        return Err(Error::parameter(format!("gamma {gamma} must be > 0")));
    }
    let inv = (1.0 / gamma) as f32;
    let data = image.data().iter().map(|v| v.powf(inv)).collect();
    Ok(LinearImage::from_raw(
        image.height(),
        image.width(),
        data,
        image.mask().to_vec(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(h: usize, w: usize, pixels: &[[f32; 3]]) -> LinearImage {
        let data = pixels.iter().flatten().copied().collect();
        LinearImage::new(h, w, data).unwrap()
    }

    #[test]
    fn rejects_zero_dimensions() {
        assert!(matches!(
            LinearImage::new(0, 4, vec![]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(LinearImage::new(1, 1, vec![0.5, 1.2, 0.0]).is_err());
        assert!(LinearImage::new(1, 1, vec![0.5, -0.1, 0.0]).is_err());
    }

    #[test]
    fn illuminant_is_unit_norm() {
        let e = IlluminantEstimate::new([3.0, 0.0, 4.0]).unwrap();
        let rgb = e.rgb();
        assert!((rgb[0] - 0.6).abs() < 1e-12);
        assert!((rgb[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn illuminant_rejects_zero_and_negative() {
        assert!(matches!(
            IlluminantEstimate::new([0.0, 0.0, 0.0]),
            Err(Error::DegenerateEstimate)
        ));
        assert!(IlluminantEstimate::new([1.0, -0.5, 0.0]).is_err());
    }

    #[test]
    fn clip_masks_any_channel_above_threshold() {
        let image = img(1, 3, &[[0.96, 0.10, 0.10], [0.97, 0.97, 0.97], [0.0, 0.0, 0.0]]);
        let config = PreprocessConfig {
            saturation_fraction: 0.95,
            ..Default::default()
        };
        let clipped = clip_saturated(&image, &config);
        assert!(!clipped.is_valid(0, 0));
        assert!(!clipped.is_valid(0, 1));
        assert!(clipped.is_valid(0, 2));
        // data untouched
        assert_eq!(clipped.data(), image.data());
    }

    #[test]
    fn clip_boundary_is_strictly_greater() {
        let image = img(1, 1, &[[0.97, 0.97, 0.97]]);
        let config = PreprocessConfig {
            saturation_fraction: 0.97,
            ..Default::default()
        };
        assert!(clip_saturated(&image, &config).is_valid(0, 0));
    }

    #[test]
    fn clip_all_black_keeps_everything() {
        let image = LinearImage::constant(4, 4, [0.0; 3]).unwrap();
        let config = PreprocessConfig {
            saturation_fraction: 0.95,
            ..Default::default()
        };
        assert_eq!(clip_saturated(&image, &config).unmasked_count(), 16);
    }

    #[test]
    fn quantize_examples() {
        let image = img(1, 2, &[[1.0, 0.5, 0.0], [0.25, 0.75, 0.1]]);
        let q = quantize_8bit(&image);
        assert_eq!(q.pixel(0, 0)[0], 1.0);
        assert!((q.pixel(0, 0)[1] - 128.0 / 255.0).abs() < 1e-7);
        // idempotent
        assert_eq!(quantize_8bit(&q).data(), q.data());
    }

    #[test]
    fn correct_uniform_quotient() {
        let image = LinearImage::constant(2, 2, [0.5, 0.25, 0.25]).unwrap();
        let e = IlluminantEstimate::new([1.0, 0.5, 0.5]).unwrap();
        let out = correct_image(&image, &e).unwrap();
        for v in out.data() {
            assert!((v - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn correct_identity_illuminant() {
        let image = img(1, 2, &[[0.1, 0.2, 0.3], [0.9, 0.8, 0.7]]);
        let e = IlluminantEstimate::new([1.0, 1.0, 1.0]).unwrap();
        let out = correct_image(&image, &e).unwrap();
        for (a, b) in out.data().iter().zip(image.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn correct_rejects_zero_channel() {
        let image = LinearImage::constant(1, 1, [0.5; 3]).unwrap();
        let e = IlluminantEstimate::new([1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            correct_image(&image, &e),
            Err(Error::DegenerateIlluminant)
        ));
    }

    #[test]
    fn correct_then_remultiply_round_trips() {
        let image = img(2, 2, &[[0.1, 0.2, 0.3], [0.4, 0.3, 0.2], [0.0, 0.5, 0.1], [0.2, 0.2, 0.2]]);
        let e = IlluminantEstimate::new([0.9, 0.7, 0.5]).unwrap();
        let gains = e.max_normalized();
        let out = correct_image(&image, &e).unwrap();
        for (i, v) in image.data().iter().enumerate() {
            let back = out.data()[i] * gains[i % 3] as f32;
            assert!((back - v).abs() < 1e-6, "channel {i}: {back} vs {v}");
        }
    }

    #[test]
    fn gamma_fixed_points_and_values() {
        let image = img(1, 3, &[[1.0, 1.0, 1.0], [0.25, 0.25, 0.25], [0.5, 0.5, 0.5]]);
        let g2 = gamma_encode(&image, 2.0).unwrap();
        assert_eq!(g2.pixel(0, 0)[0], 1.0);
        assert!((g2.pixel(0, 1)[0] - 0.5).abs() < 1e-6);
        let g22 = gamma_encode(&image, 2.2).unwrap();
        assert!((g22.pixel(0, 2)[0] - 0.729746).abs() < 1e-5);
        assert!(gamma_encode(&image, 0.0).is_err());
        assert!(gamma_encode(&image, -1.0).is_err());
    }

    #[test]
    fn gamma_is_monotone() {
        let vals: Vec<f32> = (0..=100).map(|i| i as f32 / 100.0).collect();
        let data: Vec<f32> = vals.iter().flat_map(|v| [*v; 3]).collect();
        let image = LinearImage::new(1, 101, data).unwrap();
        let out = gamma_encode(&image, 2.2).unwrap();
        for w in out.data().chunks_exact(3).collect::<Vec<_>>().windows(2) {
            assert!(w[0][0] <= w[1][0]);
        }
    }
}
