//! Angular-error metric and the benchmark statistics suite.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{minkowski_estimate, MinkowskiOrder, PixelSelection};
use crate::imaging::{IlluminantEstimate, LinearImage};
use crate::pbp::brightness_map;

/// Angle between two illuminant directions, in degrees. Symmetric and
/// scale-free (both arguments are unit vectors).
///
/// Computed as `atan2(|a x b|, a . b)`, which equals the arccosine of the
/// clamped cosine but stays exact near 0 degrees, where the plain arccosine
/// loses resolution to rounding of the dot product.
pub fn angular_error_deg(a: &IlluminantEstimate, b: &IlluminantEstimate) -> f64 {
    let x = a.rgb();
    let y = b.rgb();
    let dot = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let cross = [
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    cross_norm.atan2(dot.clamp(-1.0, 1.0)).to_degrees()
}

/// The six summary statistics used to compare estimators over a dataset,
/// all in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub median: f64,
    pub trimean: f64,
    #[serde(rename = "best25")]
    pub best25_mean: f64,
    #[serde(rename = "worst25")]
    pub worst25_mean: f64,
    pub geo_mean: f64,
    pub count: usize,
}

/// Geometric mean of a slice of nonnegative values.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if values.iter().any(|v| *v == 0.0) {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Linearly interpolated order statistic at quantile `q` of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Computes the statistics suite over per-image angular errors.
///
/// Median uses the midpoint convention; the trimean is `(Q1 + 2 Q2 + Q3) / 4`
/// with interpolated quartiles; best/worst 25% are the means of the lowest
/// and highest `ceil(count / 4)` errors; the geometric mean combines the
/// other five statistics.
pub fn error_stats(errors: &[f64]) -> Result<ErrorStats> {
    if errors.is_empty() {
        return Err(Error::parameter("error_stats needs at least one value"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let median = quantile(&sorted, 0.5);
    let trimean = (quantile(&sorted, 0.25) + 2.0 * median + quantile(&sorted, 0.75)) / 4.0;
    let k = n.div_ceil(4);
    let best25_mean = sorted[..k].iter().sum::<f64>() / k as f64;
    let worst25_mean = sorted[n - k..].iter().sum::<f64>() / k as f64;
    let geo_mean = geometric_mean(&[mean, median, trimean, best25_mean, worst25_mean]);
    Ok(ErrorStats {
        mean,
        median,
        trimean,
        best25_mean,
        worst25_mean,
        geo_mean,
        count: n,
    })
}

/// Sorts unmasked pixels by brightness, splits them into contiguous
/// near-equal groups, estimates each group's illuminant by its per-channel
/// mean, and returns the angular error per group (darkest group first).
pub fn brightness_group_analysis(
    image: &LinearImage,
    groundtruth: &IlluminantEstimate,
    groups: usize,
) -> Result<Vec<f64>> {
    if groups < 1 {
        return Err(Error::parameter("need at least one group"));
    }
    let map = brightness_map(image);
    let mut order: Vec<u32> = (0..image.pixel_count() as u32)
        .filter(|i| image.mask()[*i as usize])
        .collect();
    if order.len() < groups {
        return Err(Error::dimension(format!(
            "{} unmasked pixels cannot fill {groups} groups",
            order.len()
        )));
    }
    order.sort_by(|a, b| {
        map.values()[*a as usize]
            .total_cmp(&map.values()[*b as usize])
            .then(a.cmp(b))
    });

    let m = order.len();
    let w = image.width() as u32;
    let mut errors = Vec::with_capacity(groups);
    for g in 0..groups {
        let start = g * m / groups;
        let end = (g + 1) * m / groups;
        let indices = order[start..end]
            .iter()
            .map(|i| (i / w, i % w))
            .collect();
        let selection = PixelSelection::from_valid_indices(
            indices,
            (image.height(), image.width()),
        );
        let estimate = minkowski_estimate(image, Some(&selection), MinkowskiOrder::Finite(1))?;
        errors.push(angular_error_deg(&estimate, groundtruth));
    }
    Ok(errors)
}
