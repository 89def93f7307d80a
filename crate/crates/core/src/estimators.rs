//! The parameterized Gray-World estimator family and the Bright Pixels
//! baseline.
//!
//! A framework member is `(derivative order k, Minkowski order p, smoothing
//! scale)`: the image is optionally Gaussian-smoothed, optionally replaced by
//! its spatial-derivative magnitude, and the per-channel Minkowski mean over
//! the participating pixels is taken as the illuminant direction. Named
//! presets:
//!
//! | preset              | k | p  | sigma |
//! |---------------------|---|----|-------|
//! | Gray World          | 0 | 1  | 0     |
//! | White Patch         | 0 | inf| 0     |
//! | Shades of Gray      | 0 | 7  | 0     |
//! | General Gray World  | 0 | 11 | 1     |
//! | Gray Edge (1st)     | 1 | 7  | 1     |
//! | Gray Edge (2nd)     | 2 | 7  | 1     |
//!
//! Bright Pixels restricts the Minkowski mean to the brightest fraction of
//! pixels, ranked by `R+G+B` on the filtered image.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::{IlluminantEstimate, LinearImage};
use crate::pbp::{brightness_map, selection_budget, top_brightest_in};

/// Minkowski norm order: a positive integer or the max-response limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MinkowskiOrder {
    Finite(u32),
    Infinity,
}

impl MinkowskiOrder {
    pub fn validate(&self) -> Result<()> {
        match self {
            MinkowskiOrder::Finite(0) => Err(Error::parameter("Minkowski order must be >= 1")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MinkowskiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinkowskiOrder::Finite(p) => write!(f, "{p}"),
            MinkowskiOrder::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for MinkowskiOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "Inf" | "INF" | "∞" => Ok(MinkowskiOrder::Infinity),
            other => other
                .parse::<u32>()
                .ok()
                .filter(|p| *p >= 1)
                .map(MinkowskiOrder::Finite)
                .ok_or_else(|| Error::parameter(format!("bad Minkowski order {other:?}"))),
        }
    }
}

/// Parameters selecting one member of the Gray-World framework.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrayFrameworkParams {
    /// Spatial-derivative order: 0 (none), 1 or 2.
    pub derivative_order: u8,
    pub minkowski_p: MinkowskiOrder,
    /// Gaussian pre-filter scale in pixels; 0 disables smoothing.
    pub smoothing_sigma: f64,
}

impl GrayFrameworkParams {
    pub fn new(derivative_order: u8, minkowski_p: MinkowskiOrder, smoothing_sigma: f64) -> Self {
        Self {
            derivative_order,
            minkowski_p,
            smoothing_sigma,
        }
    }

    pub fn gray_world() -> Self {
        Self::new(0, MinkowskiOrder::Finite(1), 0.0)
    }

    pub fn white_patch() -> Self {
        Self::new(0, MinkowskiOrder::Infinity, 0.0)
    }

    pub fn shades_of_gray() -> Self {
        Self::new(0, MinkowskiOrder::Finite(7), 0.0)
    }

    pub fn general_gray_world() -> Self {
        Self::new(0, MinkowskiOrder::Finite(11), 1.0)
    }

    pub fn gray_edge1() -> Self {
        Self::new(1, MinkowskiOrder::Finite(7), 1.0)
    }

    pub fn gray_edge2() -> Self {
        Self::new(2, MinkowskiOrder::Finite(7), 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.derivative_order > 2 {
            return Err(Error::parameter(format!(
                "derivative order {} not in {{0, 1, 2}}",
                self.derivative_order
            )));
        }
        if !(self.smoothing_sigma >= 0.0) {
            return Err(Error::parameter("smoothing sigma must be >= 0"));
        }
        self.minkowski_p.validate()
    }
}

/// A validated set of pixel positions inside one specific raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelSelection {
    indices: Vec<(u32, u32)>,
    source_dims: (usize, usize),
}

impl PixelSelection {
    /// Validates bounds, uniqueness, and that no masked pixel is selected.
    pub fn new(indices: Vec<(u32, u32)>, image: &LinearImage) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &(r, c) in &indices {
            if r as usize >= image.height() || c as usize >= image.width() {
                return Err(Error::dimension(format!(
                    "selection index ({r}, {c}) outside {}x{}",
                    image.height(),
                    image.width()
                )));
            }
            if !image.is_valid(r as usize, c as usize) {
                return Err(Error::parameter(format!(
                    "selection index ({r}, {c}) is masked out"
                )));
            }
            if !seen.insert((r, c)) {
                return Err(Error::parameter(format!(
                    "duplicate selection index ({r}, {c})"
                )));
            }
        }
        Ok(Self {
            indices,
            source_dims: (image.height(), image.width()),
        })
    }

    /// For selections produced internally, already valid by construction.
    pub(crate) fn from_valid_indices(indices: Vec<(u32, u32)>, dims: (usize, usize)) -> Self {
        Self {
            indices,
            source_dims: dims,
        }
    }

    pub fn indices(&self) -> &[(u32, u32)] {
        &self.indices
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Convolves each channel with a truncated Gaussian (radius `ceil(3 sigma)`),
/// replicating edge pixels at the border. `sigma == 0` is the identity. The
/// mask is unchanged; masked pixels contribute their stored values.
pub fn gaussian_smooth(image: &LinearImage, sigma: f64) -> LinearImage {
    assert!(sigma >= 0.0, "smoothing sigma must be >= 0");
    if sigma == 0.0 {
        return image.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-((i * i) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }

    let (h, w) = (image.height(), image.width());
    let mut horiz = vec![0f32; h * w * 3];
    for r in 0..h {
        for c in 0..w {
            let mut acc = [0f64; 3];
            for (ki, kw) in kernel.iter().enumerate() {
                let cc = (c as isize + ki as isize - radius).clamp(0, w as isize - 1) as usize;
                let px = image.pixel(r, cc);
                for ch in 0..3 {
                    acc[ch] += kw * px[ch] as f64;
                }
            }
            let o = (r * w + c) * 3;
            for ch in 0..3 {
                horiz[o + ch] = acc[ch] as f32;
            }
        }
    }
    let mut out = vec![0f32; h * w * 3];
    for r in 0..h {
        for c in 0..w {
            let mut acc = [0f64; 3];
            for (ki, kw) in kernel.iter().enumerate() {
                let rr = (r as isize + ki as isize - radius).clamp(0, h as isize - 1) as usize;
                let o = (rr * w + c) * 3;
                for ch in 0..3 {
                    acc[ch] += kw * horiz[o + ch] as f64;
                }
            }
            let o = (r * w + c) * 3;
            for ch in 0..3 {
                out[o + ch] = acc[ch] as f32;
            }
        }
    }
    LinearImage::from_raw(h, w, out, image.mask().to_vec())
}

/// First-difference operator along columns: central in the interior,
/// one-sided at the left/right edge.
fn diff_x(plane: &[f32], h: usize, w: usize) -> Vec<f32> {
    let mut out = vec![0f32; h * w];
    for r in 0..h {
        let row = r * w;
        for c in 0..w {
            out[row + c] = if c == 0 {
                plane[row + 1] - plane[row]
            } else if c == w - 1 {
                plane[row + c] - plane[row + c - 1]
            } else {
                0.5 * (plane[row + c + 1] - plane[row + c - 1])
            };
        }
    }
    out
}

/// First-difference operator along rows; same edge rule as [`diff_x`].
fn diff_y(plane: &[f32], h: usize, w: usize) -> Vec<f32> {
    let mut out = vec![0f32; h * w];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = if r == 0 {
                plane[w + c] - plane[c]
            } else if r == h - 1 {
                plane[r * w + c] - plane[(r - 1) * w + c]
            } else {
                0.5 * (plane[(r + 1) * w + c] - plane[(r - 1) * w + c])
            };
        }
    }
    out
}

/// Per-channel derivative-magnitude raster.
///
/// Order 1: `sqrt(dx^2 + dy^2)`. Order 2: `sqrt(dxx^2 + 2 dxy^2 + dyy^2)`,
/// built by composing the first-difference operators. Values are magnitudes
/// (>= 0, possibly above 1); estimators only use channel ratios. The mask is
/// propagated unchanged.
pub fn spatial_derivative(image: &LinearImage, order: u8) -> Result<LinearImage> {
    if !(order == 1 || order == 2) {
        return Err(Error::parameter(format!(
            "derivative order {order} not in {{1, 2}}"
        )));
    }
    let (h, w) = (image.height(), image.width());
    if h < 3 || w < 3 {
        return Err(Error::dimension(format!(
            "derivative needs at least 3x3, got {h}x{w}"
        )));
    }
    let mut out = vec![0f32; h * w * 3];
    let mut plane = vec![0f32; h * w];
    for ch in 0..3 {
        for i in 0..h * w {
            plane[i] = image.data()[i * 3 + ch];
        }
        let dx = diff_x(&plane, h, w);
        let dy = diff_y(&plane, h, w);
        if order == 1 {
            for i in 0..h * w {
                out[i * 3 + ch] = (dx[i] * dx[i] + dy[i] * dy[i]).sqrt();
            }
        } else {
            let dxx = diff_x(&dx, h, w);
            let dyy = diff_y(&dy, h, w);
            let dxy = diff_y(&dx, h, w);
            for i in 0..h * w {
                out[i * 3 + ch] =
                    (dxx[i] * dxx[i] + 2.0 * dxy[i] * dxy[i] + dyy[i] * dyy[i]).sqrt();
            }
        }
    }
    Ok(LinearImage::from_raw(h, w, out, image.mask().to_vec()))
}

/// The smoothing + derivative stages of a framework member, without the norm.
pub(crate) fn apply_framework_filter(
    image: &LinearImage,
    params: &GrayFrameworkParams,
) -> Result<LinearImage> {
    params.validate()?;
    let smoothed = gaussian_smooth(image, params.smoothing_sigma);
    if params.derivative_order >= 1 {
        spatial_derivative(&smoothed, params.derivative_order)
    } else {
        Ok(smoothed)
    }
}

/// Per-channel Minkowski mean over a pixel selection (or all unmasked pixels),
/// normalized to a unit-norm illuminant direction.
///
/// Finite p: `e_c = (sum v_c^p / n)^(1/p)`. Infinite p: per-channel max.
pub fn minkowski_estimate(
    image: &LinearImage,
    selection: Option<&PixelSelection>,
    p: MinkowskiOrder,
) -> Result<IlluminantEstimate> {
    p.validate()?;
    if let Some(sel) = selection {
        if sel.source_dims() != (image.height(), image.width()) {
            return Err(Error::dimension(format!(
                "selection for {:?} applied to {}x{} image",
                sel.source_dims(),
                image.height(),
                image.width()
            )));
        }
    }

    let mut acc = [0f64; 3];
    let mut count = 0usize;
    let mut fold = |px: [f32; 3]| {
        match p {
            MinkowskiOrder::Finite(1) => {
                for ch in 0..3 {
                    acc[ch] += px[ch] as f64;
                }
            }
            MinkowskiOrder::Finite(order) => {
                for ch in 0..3 {
                    acc[ch] += (px[ch] as f64).powi(order as i32);
                }
            }
            MinkowskiOrder::Infinity => {
                for ch in 0..3 {
                    acc[ch] = acc[ch].max(px[ch] as f64);
                }
            }
        }
        count += 1;
    };

    match selection {
        Some(sel) => {
            for &(r, c) in sel.indices() {
                fold(image.pixel(r as usize, c as usize));
            }
        }
        None => {
            for i in 0..image.pixel_count() {
                if image.mask()[i] {
                    let d = &image.data()[i * 3..i * 3 + 3];
                    fold([d[0], d[1], d[2]]);
                }
            }
        }
    }

    if count == 0 {
        return Err(Error::EmptySelection);
    }
    let e = match p {
        MinkowskiOrder::Finite(1) => [
            acc[0] / count as f64,
            acc[1] / count as f64,
            acc[2] / count as f64,
        ],
        MinkowskiOrder::Finite(order) => {
            let inv = 1.0 / order as f64;
            [
                (acc[0] / count as f64).powf(inv),
                (acc[1] / count as f64).powf(inv),
                (acc[2] / count as f64).powf(inv),
            ]
        }
        MinkowskiOrder::Infinity => acc,
    };
    IlluminantEstimate::new(e)
}

/// Runs a full framework member: smooth, differentiate, Minkowski mean over
/// all unmasked pixels.
pub fn gray_framework_estimate(
    image: &LinearImage,
    params: &GrayFrameworkParams,
) -> Result<IlluminantEstimate> {
    let filtered = apply_framework_filter(image, params)?;
    minkowski_estimate(&filtered, None, params.minkowski_p)
}

/// Selects the `ceil(N * fraction)` brightest unmasked pixels of this image
/// (brightness `R+G+B`, ties broken by row-major position). `N` counts all
/// raster pixels; the result is capped at the unmasked count.
pub fn bright_pixels_selection(image: &LinearImage, fraction: f64) -> Result<PixelSelection> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::parameter(format!(
            "sample fraction {fraction} outside (0, 1)"
        )));
    }
    let unmasked = image.unmasked_count();
    if unmasked == 0 {
        return Err(Error::EmptySelection);
    }
    let budget = selection_budget(image.pixel_count(), fraction).min(unmasked);
    let map = brightness_map(image);
    let indices = top_brightest_in(&map, 0..image.height(), 0..image.width(), budget);
    Ok(PixelSelection::from_valid_indices(
        indices,
        (image.height(), image.width()),
    ))
}

/// A Bright Pixels run: the filtered image, the pixels it selected, and the
/// resulting estimate.
#[derive(Clone, Debug)]
pub struct BrightPixelsAnalysis {
    pub filtered: LinearImage,
    pub selection: PixelSelection,
    pub estimate: IlluminantEstimate,
}

/// Bright Pixels: apply the base framework's filter stages, select the
/// brightest fraction of the filtered image, and take the Minkowski mean of
/// the selected pixels.
pub fn bright_pixels_analyze(
    image: &LinearImage,
    fraction: f64,
    base: &GrayFrameworkParams,
) -> Result<BrightPixelsAnalysis> {
    let filtered = apply_framework_filter(image, base)?;
    let selection = bright_pixels_selection(&filtered, fraction)?;
    let estimate = minkowski_estimate(&filtered, Some(&selection), base.minkowski_p)?;
    Ok(BrightPixelsAnalysis {
        filtered,
        selection,
        estimate,
    })
}

pub fn bright_pixels_estimate(
    image: &LinearImage,
    fraction: f64,
    base: &GrayFrameworkParams,
) -> Result<IlluminantEstimate> {
    Ok(bright_pixels_analyze(image, fraction, base)?.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::angular_error_deg;
    use proptest::prelude::*;

    fn img(h: usize, w: usize, pixels: &[[f32; 3]]) -> LinearImage {
        let data = pixels.iter().flatten().copied().collect();
        LinearImage::new(h, w, data).unwrap()
    }

    #[test]
    fn smooth_sigma_zero_is_identity() {
        let image = LinearImage::from_fn(5, 5, |r, c| [(r * c) as f32 / 16.0, 0.5, 0.1]).unwrap();
        assert_eq!(gaussian_smooth(&image, 0.0), image);
    }

    #[test]
    fn smooth_preserves_constants() {
        let image = LinearImage::constant(9, 9, [0.3, 0.6, 0.9]).unwrap();
        let out = gaussian_smooth(&image, 2.5);
        for (a, b) in out.data().iter().zip(image.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn smooth_impulse_matches_kernel_center_and_conserves_sum() {
        let n = 21;
        let mut data = vec![0f32; n * n * 3];
        let center = (n / 2) * n + n / 2;
        data[center * 3] = 1.0;
        let image = LinearImage::new(n, n, data).unwrap();
        let sigma = 1.0;
        let out = gaussian_smooth(&image, sigma);

        // Expected center weight of the normalized 2-D kernel.
        let radius = (3.0 * sigma).ceil() as i64;
        let weights: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = weights.iter().sum();
        let center_1d = weights[radius as usize] / sum;
        let expected = center_1d * center_1d;

        let got = out.pixel(n / 2, n / 2)[0] as f64;
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
        let total: f64 = out.data().iter().step_by(3).map(|v| *v as f64).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let image = LinearImage::constant(6, 7, [0.4, 0.5, 0.6]).unwrap();
        for order in [1, 2] {
            let out = spatial_derivative(&image, order).unwrap();
            assert!(out.data().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn derivative_of_ramp() {
        // v = c/64 along columns: slope exactly representable in f32.
        let a = 1.0 / 64.0;
        let image = LinearImage::from_fn(5, 9, |_, c| [c as f32 * a, 0.0, 0.0]).unwrap();
        let d1 = spatial_derivative(&image, 1).unwrap();
        for r in 1..4 {
            for c in 1..8 {
                assert_eq!(d1.pixel(r, c)[0], a);
            }
        }
        let d2 = spatial_derivative(&image, 2).unwrap();
        for r in 1..4 {
            for c in 1..8 {
                assert_eq!(d2.pixel(r, c)[0], 0.0);
            }
        }
    }

    #[test]
    fn derivative_needs_3x3() {
        let image = LinearImage::constant(2, 8, [0.5; 3]).unwrap();
        assert!(matches!(
            spatial_derivative(&image, 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn minkowski_mean_example() {
        let image = img(1, 2, &[[0.2, 0.1, 0.1], [0.4, 0.1, 0.3]]);
        let e = minkowski_estimate(&image, None, MinkowskiOrder::Finite(1)).unwrap();
        let rgb = e.rgb();
        assert!((rgb[0] - 0.801784).abs() < 1e-5);
        assert!((rgb[1] - 0.267261).abs() < 1e-5);
        assert!((rgb[2] - 0.534522).abs() < 1e-5);
    }

    #[test]
    fn minkowski_infinity_is_channelwise_max() {
        let image = img(1, 2, &[[0.1, 0.2, 0.3], [0.4, 0.1, 0.1]]);
        let e = minkowski_estimate(&image, None, MinkowskiOrder::Infinity).unwrap();
        let expect =
            IlluminantEstimate::new([0.4f32 as f64, 0.2f32 as f64, 0.3f32 as f64]).unwrap();
        assert!(angular_error_deg(&e, &expect) < 1e-9);
    }

    #[test]
    fn minkowski_single_pixel_any_order() {
        let image = img(1, 1, &[[0.3, 0.6, 0.2]]);
        let expect = IlluminantEstimate::new([0.3, 0.6, 0.2]).unwrap();
        for p in [
            MinkowskiOrder::Finite(1),
            MinkowskiOrder::Finite(7),
            MinkowskiOrder::Infinity,
        ] {
            let e = minkowski_estimate(&image, None, p).unwrap();
            assert!(angular_error_deg(&e, &expect) < 1e-6);
        }
    }

    #[test]
    fn minkowski_empty_and_degenerate() {
        let image = LinearImage::with_mask(1, 2, vec![0.5; 6], vec![false, false]).unwrap();
        assert!(matches!(
            minkowski_estimate(&image, None, MinkowskiOrder::Finite(1)),
            Err(Error::EmptySelection)
        ));
        let black = LinearImage::constant(2, 2, [0.0; 3]).unwrap();
        assert!(matches!(
            minkowski_estimate(&black, None, MinkowskiOrder::Finite(1)),
            Err(Error::DegenerateEstimate)
        ));
    }

    #[test]
    fn framework_gray_world_on_uniform_image() {
        let image = LinearImage::constant(4, 4, [0.6, 0.3, 0.1]).unwrap();
        let e = gray_framework_estimate(&image, &GrayFrameworkParams::gray_world()).unwrap();
        let expect = IlluminantEstimate::new([0.6, 0.3, 0.1]).unwrap();
        assert!(angular_error_deg(&e, &expect) < 1e-6);
    }

    #[test]
    fn framework_gray_edge_on_uniform_image_is_degenerate() {
        let image = LinearImage::constant(8, 8, [0.6, 0.3, 0.1]).unwrap();
        assert!(matches!(
            gray_framework_estimate(&image, &GrayFrameworkParams::gray_edge1()),
            Err(Error::DegenerateEstimate)
        ));
    }

    #[test]
    fn framework_white_patch_takes_maxima() {
        let image = img(
            2,
            2,
            &[
                [0.9, 0.1, 0.1],
                [0.1, 0.6, 0.1],
                [0.1, 0.1, 0.3],
                [0.2, 0.2, 0.2],
            ],
        );
        let e = gray_framework_estimate(&image, &GrayFrameworkParams::white_patch()).unwrap();
        let expect =
            IlluminantEstimate::new([0.9f32 as f64, 0.6f32 as f64, 0.3f32 as f64]).unwrap();
        assert!(angular_error_deg(&e, &expect) < 1e-9);
    }

    #[test]
    fn bright_pixels_full_selection_equals_gray_world() {
        let image = LinearImage::from_fn(4, 4, |r, c| {
            [
                (r as f32 + 1.0) / 8.0,
                (c as f32 + 1.0) / 8.0,
                ((r + c) as f32 + 1.0) / 16.0,
            ]
        })
        .unwrap();
        // fraction close to 1 selects every pixel
        let bp = bright_pixels_estimate(&image, 0.999, &GrayFrameworkParams::gray_world()).unwrap();
        let gw = gray_framework_estimate(&image, &GrayFrameworkParams::gray_world()).unwrap();
        assert!(angular_error_deg(&bp, &gw) < 1e-9);
    }

    #[test]
    fn bright_pixels_top_one_is_the_white_pixel() {
        let mut pixels = vec![[0.01f32, 0.01, 0.01]; 25];
        pixels[13] = [1.0, 1.0, 1.0];
        let image = img(5, 5, &pixels);
        let analysis =
            bright_pixels_analyze(&image, 0.02, &GrayFrameworkParams::gray_world()).unwrap();
        assert_eq!(analysis.selection.indices(), &[(2, 3)]);
        let expect = IlluminantEstimate::new([1.0, 1.0, 1.0]).unwrap();
        assert!(angular_error_deg(&analysis.estimate, &expect) < 1e-9);
    }

    #[test]
    fn bright_pixels_ties_break_row_major() {
        // brightness 0.9, 0.6, 0.6, 0.1 -> fraction 0.5 selects two pixels
        let image = img(
            2,
            2,
            &[
                [0.5, 0.2, 0.2],
                [0.2, 0.2, 0.2],
                [0.3, 0.2, 0.1],
                [0.1, 0.0, 0.0],
            ],
        );
        let sel = bright_pixels_selection(&image, 0.5).unwrap();
        assert_eq!(sel.indices(), &[(0, 0), (0, 1)]);
    }

    #[test]
    fn selection_validation_catches_bad_indices() {
        let mut mask = vec![true; 4];
        mask[3] = false;
        let image = LinearImage::with_mask(2, 2, vec![0.5; 12], mask).unwrap();
        assert!(PixelSelection::new(vec![(2, 0)], &image).is_err());
        assert!(PixelSelection::new(vec![(1, 1)], &image).is_err());
        assert!(PixelSelection::new(vec![(0, 0), (0, 0)], &image).is_err());
        assert!(PixelSelection::new(vec![(0, 0), (1, 0)], &image).is_ok());
    }

    proptest! {
        #[test]
        fn scale_equivariance_of_direction(
            seed in 0u64..1000,
            halvings in 1i32..5,
            p in prop_oneof![Just(MinkowskiOrder::Finite(1)), Just(MinkowskiOrder::Finite(2)),
                             Just(MinkowskiOrder::Finite(7)), Just(MinkowskiOrder::Infinity)],
        ) {
            use rand::{Rng, SeedableRng};
            // power-of-two scale factors keep the scaling itself exact, so
            // only the direction property is under test
            let lambda = 0.5f32.powi(halvings);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let image = LinearImage::from_fn(6, 6, |_, _| {
                [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()]
            }).unwrap();
            let scaled = LinearImage::new(
                6, 6,
                image.data().iter().map(|v| v * lambda).collect(),
            ).unwrap();
            let a = minkowski_estimate(&image, None, p).unwrap();
            let b = minkowski_estimate(&scaled, None, p).unwrap();
            prop_assert!(angular_error_deg(&a, &b) < 1e-9);
            for (x, y) in a.rgb().iter().zip(b.rgb()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn p64_approaches_infinity_norm(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let image = LinearImage::from_fn(4, 4, |_, _| {
                [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()]
            }).unwrap();
            let hi = minkowski_estimate(&image, None, MinkowskiOrder::Finite(64)).unwrap();
            let inf = minkowski_estimate(&image, None, MinkowskiOrder::Infinity).unwrap();
            prop_assert!(angular_error_deg(&hi, &inf) < 1.0);
        }

        #[test]
        fn gray_world_matches_brute_force_mean(seed in 0u64..300) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let h = rng.random_range(1usize..=16);
            let w = rng.random_range(1usize..=16);
            let image = LinearImage::from_fn(h, w, |_, _| {
                [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()]
            }).unwrap();
            let est = gray_framework_estimate(&image, &GrayFrameworkParams::gray_world()).unwrap();

            let mut sums = [0f64; 3];
            for px in image.data().chunks_exact(3) {
                for ch in 0..3 {
                    sums[ch] += px[ch] as f64;
                }
            }
            let n = (h * w) as f64;
            let norm = (sums[0] * sums[0] + sums[1] * sums[1] + sums[2] * sums[2]).sqrt();
            let expect = [sums[0] / norm, sums[1] / norm, sums[2] / norm];
            let got = est.rgb();
            for ch in 0..3 {
                let rel = (got[ch] - expect[ch]).abs() / expect[ch].max(1e-300);
                prop_assert!(rel < 1e-12, "channel {ch}: {} vs {} (n={n})", got[ch], expect[ch]);
            }
        }

        #[test]
        fn bright_pixels_never_selects_masked(seed in 0u64..200, fraction in 0.05f64..0.9) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let h = 8;
            let w = 8;
            let data: Vec<f32> = (0..h * w * 3).map(|_| rng.random()).collect();
            let mask: Vec<bool> = (0..h * w).map(|_| rng.random::<f32>() > 0.4).collect();
            if mask.iter().all(|m| !m) {
                return Ok(());
            }
            let image = LinearImage::with_mask(h, w, data, mask).unwrap();
            let sel = bright_pixels_selection(&image, fraction).unwrap();
            for &(r, c) in sel.indices() {
                prop_assert!(image.is_valid(r as usize, c as usize));
            }
        }

        #[test]
        fn geometry_free_estimators_ignore_pixel_order(seed in 0u64..200) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pixels: Vec<[f32; 3]> = (0..36)
                .map(|_| [rng.random(), rng.random(), rng.random()])
                .collect();
            let image = img(6, 6, &pixels);
            pixels.shuffle(&mut rng);
            let shuffled = img(6, 6, &pixels);
            for params in [
                GrayFrameworkParams::gray_world(),
                GrayFrameworkParams::white_patch(),
                GrayFrameworkParams::shades_of_gray(),
            ] {
                let a = gray_framework_estimate(&image, &params).unwrap();
                let b = gray_framework_estimate(&shuffled, &params).unwrap();
                prop_assert!(angular_error_deg(&a, &b) < 1e-9);
            }
        }
    }
}
