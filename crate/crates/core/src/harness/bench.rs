//! Single-image timing benchmarks. Always single-threaded so numbers stay
//! comparable across configurations.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::MethodConfig;
use crate::imaging::LinearImage;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BenchStats {
    pub min_ms: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub repeats: usize,
}

/// Times `repeats` estimation calls on a preloaded, preprocessed image,
/// after one untimed warm-up call.
pub fn bench_single(
    image: &LinearImage,
    method: &MethodConfig,
    repeats: usize,
) -> Result<BenchStats> {
    if repeats < 1 {
        return Err(Error::parameter("repeats must be >= 1"));
    }
    method.estimate(image)?; // warm-up, and surfaces errors before timing
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let estimate = method.estimate(image)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(estimate);
    }
    times.sort_by(|a, b| a.total_cmp(b));
    let min_ms = times[0];
    let mean_ms = times.iter().sum::<f64>() / repeats as f64;
    let p95_idx = ((repeats as f64 * 0.95).ceil() as usize).clamp(1, repeats) - 1;
    Ok(BenchStats {
        min_ms,
        mean_ms,
        p95_ms: times[p95_idx],
        repeats,
    })
}
