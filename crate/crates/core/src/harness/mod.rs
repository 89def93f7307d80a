//! Batch evaluation: manifests, method configurations, dataset runs,
//! parameter search, downsampling sweeps, and timing benchmarks.

mod bench;
mod manifest;
mod search;

pub use bench::{bench_single, BenchStats};
pub use manifest::{read_manifest, write_manifest, ManifestEntry};
pub use search::{
    downsample_sweep, grid_search, write_grid_csv, write_sweep_csv, GridOutcome, GridRow,
    GridSpec, SweepRow,
};

use std::time::Instant;

use serde::Serialize;

use crate::downsample::{equidistant_downsample, DownsampleParams};
use crate::error::{Error, Result};
use crate::estimators::{
    bright_pixels_estimate, gray_framework_estimate, GrayFrameworkParams, MinkowskiOrder,
};
use crate::eval::{angular_error_deg, error_stats, ErrorStats};
use crate::imaging::{preprocess, IlluminantEstimate, LinearImage, PreprocessConfig};
use crate::io::{load_image, load_mask};
use crate::pbp::{pbp_estimate, PbpParams};

/// A fully specified estimation method, ready to run on an image.
#[derive(Clone, Debug, PartialEq)]
pub enum MethodConfig {
    /// A Gray-World-family member, run after equidistant downsampling.
    Gray {
        params: GrayFrameworkParams,
        interval: u32,
    },
    /// Bright Pixels, run after equidistant downsampling.
    BrightPixels {
        fraction: f64,
        base: GrayFrameworkParams,
        interval: u32,
    },
    /// Patch-wise bright pixels; the interval lives in the params.
    Pbp(PbpParams),
}

/// Short name for a framework parameter triple, mapping the well-known
/// presets back to their usual abbreviations.
pub fn framework_name(params: &GrayFrameworkParams) -> String {
    match (
        params.derivative_order,
        params.minkowski_p,
        params.smoothing_sigma,
    ) {
        (0, MinkowskiOrder::Finite(1), s) if s == 0.0 => "gw".into(),
        (0, MinkowskiOrder::Infinity, s) if s == 0.0 => "wp".into(),
        (0, MinkowskiOrder::Finite(7), s) if s == 0.0 => "sog".into(),
        (0, MinkowskiOrder::Finite(11), s) if s == 1.0 => "ggw".into(),
        (1, MinkowskiOrder::Finite(7), s) if s == 1.0 => "ge1".into(),
        (2, MinkowskiOrder::Finite(7), s) if s == 1.0 => "ge2".into(),
        (k, p, s) => format!("k{k}p{p}s{s}"),
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            MethodConfig::Gray { params, interval } => {
                params.validate()?;
                DownsampleParams::new(*interval).map(|_| ())
            }
            MethodConfig::BrightPixels {
                fraction,
                base,
                interval,
            } => {
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(Error::parameter("sample fraction outside (0, 1)"));
                }
                base.validate()?;
                DownsampleParams::new(*interval).map(|_| ())
            }
            MethodConfig::Pbp(params) => params.validate(),
        }
    }

    /// Runs the method on a preprocessed image.
    pub fn estimate(&self, image: &LinearImage) -> Result<IlluminantEstimate> {
        match self {
            MethodConfig::Gray { params, interval } => {
                let ds = equidistant_downsample(image, DownsampleParams::new(*interval)?)?;
                gray_framework_estimate(&ds, params)
            }
            MethodConfig::BrightPixels {
                fraction,
                base,
                interval,
            } => {
                let ds = equidistant_downsample(image, DownsampleParams::new(*interval)?)?;
                bright_pixels_estimate(&ds, *fraction, base)
            }
            MethodConfig::Pbp(params) => pbp_estimate(image, params),
        }
    }

    /// The same method with its downsampling interval replaced.
    pub fn with_interval(&self, interval: u32) -> MethodConfig {
        match self {
            MethodConfig::Gray { params, .. } => MethodConfig::Gray {
                params: *params,
                interval,
            },
            MethodConfig::BrightPixels { fraction, base, .. } => MethodConfig::BrightPixels {
                fraction: *fraction,
                base: *base,
                interval,
            },
            MethodConfig::Pbp(params) => MethodConfig::Pbp(PbpParams {
                downsample_interval: interval,
                ..*params
            }),
        }
    }

    /// Table label, excluding the downsampling interval.
    pub fn label(&self) -> String {
        match self {
            MethodConfig::Gray { params, .. } => framework_name(params),
            MethodConfig::BrightPixels { fraction, base, .. } => {
                format!("bp{}%+{}", fraction * 100.0, framework_name(base))
            }
            MethodConfig::Pbp(p) => format!(
                "pbp({},{})+{}",
                p.grid_factor,
                p.brightness_power,
                framework_name(&p.base)
            ),
        }
    }
}

/// Best-performing parameter presets for patch-wise runs, per base family
/// and grid factor: (sample fraction, interval, Minkowski order).
pub fn pbp_tuned_params(base: &GrayFrameworkParams, grid_factor: u32) -> PbpParams {
    let name = framework_name(base);
    let (fraction, interval, p) = match (name.as_str(), grid_factor) {
        ("gw", 1) => (0.02, 11, 1),
        ("gw", _) => (0.02, 9, 1),
        ("sog", 1) => (0.005, 4, 1),
        ("sog", _) => (0.005, 3, 1),
        ("ggw", _) => (0.02, 3, 3),
        ("ge1", _) => (0.04, 3, 1),
        ("ge2", _) => (0.04, 6, 1),
        _ => (0.02, 4, 1),
    };
    PbpParams {
        grid_factor,
        brightness_power: 1,
        sample_fraction: fraction,
        downsample_interval: interval,
        base: GrayFrameworkParams {
            minkowski_p: MinkowskiOrder::Finite(p),
            ..*base
        },
    }
}

/// Batch-run options.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Worker threads for batch evaluation; 1 = serial.
    pub jobs: usize,
    pub quantize_to_8bit: bool,
    pub quantize_before_clip: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            quantize_to_8bit: true,
            quantize_before_clip: false,
        }
    }
}

/// Default worker count: the `CC_JOBS` environment variable, else 1.
pub fn default_jobs() -> usize {
    std::env::var("CC_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|j| *j >= 1)
        .unwrap_or(1)
}

#[derive(Clone, Debug, Serialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub error_deg: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug)]
pub struct RunFailure {
    pub image_id: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct DatasetRun {
    /// Per-image results in manifest order, failures excluded.
    pub records: Vec<ImageRecord>,
    pub failures: Vec<RunFailure>,
    pub stats: ErrorStats,
}

fn process_entry(
    entry: &ManifestEntry,
    method: &MethodConfig,
    options: &RunOptions,
) -> Result<(f64, f64)> {
    let config = PreprocessConfig {
        saturation_fraction: entry.saturation_fraction,
        source_bit_depth: entry.bit_depth,
        quantize_to_8bit: options.quantize_to_8bit,
        quantize_before_clip: options.quantize_before_clip,
    };
    let loaded = load_image(&entry.image_path, &config)?;
    let mut image = preprocess(&loaded, &config);
    if let Some(mask_path) = &entry.mask_path {
        let (h, w, mask) = load_mask(mask_path)?;
        if (h, w) != (image.height(), image.width()) {
            return Err(Error::dimension(format!(
                "mask {}x{} does not match image {}x{}",
                h,
                w,
                image.height(),
                image.width()
            )));
        }
        image = image.with_mask_intersection(&mask)?;
    }
    let groundtruth = IlluminantEstimate::new(entry.gt_rgb)?;

    // Wall time covers the estimation call only, not decode or preprocessing.
    let start = Instant::now();
    let estimate = method.estimate(&image)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((angular_error_deg(&estimate, &groundtruth), elapsed_ms))
}

/// Evaluates a method over every manifest entry: load, preprocess, estimate,
/// score. Per-image failures are recorded and excluded from the statistics;
/// results keep manifest order regardless of the worker count.
pub fn run_dataset(
    entries: &[ManifestEntry],
    method: &MethodConfig,
    options: &RunOptions,
) -> Result<DatasetRun> {
    if entries.is_empty() {
        return Err(Error::parameter("manifest has no entries"));
    }
    method.validate()?;

    let outcomes: Vec<Result<(f64, f64)>> = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::parameter(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            entries
                .par_iter()
                .map(|entry| process_entry(entry, method, options))
                .collect()
        })
    } else {
        entries
            .iter()
            .map(|entry| process_entry(entry, method, options))
            .collect()
    };

    let mut records = Vec::with_capacity(entries.len());
    let mut failures = Vec::new();
    for (entry, outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Ok((error_deg, elapsed_ms)) => records.push(ImageRecord {
                image_id: entry.image_id.clone(),
                error_deg,
                elapsed_ms,
            }),
            Err(e) => failures.push(RunFailure {
                image_id: entry.image_id.clone(),
                message: e.to_string(),
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::parameter(format!(
            "all {} images failed (first: {})",
            entries.len(),
            failures[0].message
        )));
    }
    let errors: Vec<f64> = records.iter().map(|r| r.error_deg).collect();
    let stats = error_stats(&errors)?;
    Ok(DatasetRun {
        records,
        failures,
        stats,
    })
}

impl DatasetRun {
    pub fn mean_elapsed_ms(&self) -> f64 {
        self.records.iter().map(|r| r.elapsed_ms).sum::<f64>() / self.records.len() as f64
    }

    /// CSV dump of per-image results: `image_id,error_deg,elapsed_ms`.
    pub fn write_records_csv(&self, mut writer: impl std::io::Write) -> Result<()> {
        writeln!(writer, "image_id,error_deg,elapsed_ms")
            .map_err(|e| Error::format(format!("csv write: {e}")))?;
        for r in &self.records {
            writeln!(writer, "{},{},{}", r.image_id, r.error_deg, r.elapsed_ms)
                .map_err(|e| Error::format(format!("csv write: {e}")))?;
        }
        Ok(())
    }
}

/// Per-camera statistics (entries without a camera tag group under "").
pub fn stats_by_camera(
    entries: &[ManifestEntry],
    run: &DatasetRun,
) -> Result<Vec<(String, ErrorStats)>> {
    use std::collections::BTreeMap;
    let camera_of: std::collections::HashMap<&str, &str> = entries
        .iter()
        .map(|e| (e.image_id.as_str(), e.camera_tag.as_deref().unwrap_or("")))
        .collect();
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &run.records {
        let tag = camera_of.get(r.image_id.as_str()).copied().unwrap_or("");
        groups.entry(tag).or_default().push(r.error_deg);
    }
    groups
        .into_iter()
        .map(|(tag, errors)| Ok((tag.to_owned(), error_stats(&errors)?)))
        .collect()
}

/// Arithmetic mean of each statistic across groups (the per-camera-then-
/// average convention). `count` is the total number of images.
pub fn macro_average_stats(groups: &[ErrorStats]) -> Option<ErrorStats> {
    if groups.is_empty() {
        return None;
    }
    let n = groups.len() as f64;
    Some(ErrorStats {
        mean: groups.iter().map(|s| s.mean).sum::<f64>() / n,
        median: groups.iter().map(|s| s.median).sum::<f64>() / n,
        trimean: groups.iter().map(|s| s.trimean).sum::<f64>() / n,
        best25_mean: groups.iter().map(|s| s.best25_mean).sum::<f64>() / n,
        worst25_mean: groups.iter().map(|s| s.worst25_mean).sum::<f64>() / n,
        geo_mean: groups.iter().map(|s| s.geo_mean).sum::<f64>() / n,
        count: groups.iter().map(|s| s.count).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::save_ppm;
    use crate::synth::{synth_scene_seeded, SynthParams};
    use std::path::Path;

    pub(crate) fn write_synth_manifest(
        dir: &Path,
        count: usize,
        params: &SynthParams,
        seed0: u64,
    ) -> Vec<ManifestEntry> {
        let mut entries = Vec::new();
        for i in 0..count {
            let scene = synth_scene_seeded(params, seed0 + i as u64);
            let path = dir.join(format!("scene{i:03}.ppm"));
            save_ppm(&scene.image, &path, true).unwrap();
            let e = scene.illuminant.rgb();
            entries.push(ManifestEntry {
                camera_tag: Some(format!("cam{}", i % 2)),
                ..ManifestEntry::new(format!("scene{i:03}"), path, e)
            });
        }
        entries
    }

    fn gw_method() -> MethodConfig {
        MethodConfig::Gray {
            params: GrayFrameworkParams::gray_world(),
            interval: 1,
        }
    }

    #[test]
    fn uniform_scene_scores_zero() {
        let dir = tempfile::tempdir().unwrap();
        let image = LinearImage::constant(16, 24, [0.8, 0.6, 0.4]).unwrap();
        let path = dir.path().join("u.ppm");
        save_ppm(&image, &path, true).unwrap();
        let entries = vec![ManifestEntry::new("u", path, [0.8, 0.6, 0.4])];
        let run = run_dataset(&entries, &gw_method(), &RunOptions::default()).unwrap();
        assert_eq!(run.records.len(), 1);
        assert!(run.stats.mean < 1e-2, "{}", run.stats.mean);
        assert!(run.failures.is_empty());
    }

    #[test]
    fn synthetic_batch_recovers_illuminants() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams::default();
        let entries = write_synth_manifest(dir.path(), 6, &params, 100);
        let method = MethodConfig::Pbp(PbpParams {
            grid_factor: 1,
            brightness_power: 1,
            sample_fraction: 0.02,
            downsample_interval: 1,
            base: GrayFrameworkParams::gray_world(),
        });
        let run = run_dataset(&entries, &method, &RunOptions::default()).unwrap();
        assert!(run.stats.mean < 1.0, "mean {}", run.stats.mean);
    }

    #[test]
    fn unreadable_image_is_recorded_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let image = LinearImage::constant(8, 12, [0.5, 0.5, 0.5]).unwrap();
        let good = dir.path().join("good.ppm");
        save_ppm(&image, &good, false).unwrap();
        let entries = vec![
            ManifestEntry::new("good", good, [1.0, 1.0, 1.0]),
            ManifestEntry::new("missing", dir.path().join("nope.ppm"), [1.0, 1.0, 1.0]),
        ];
        let run = run_dataset(&entries, &gw_method(), &RunOptions::default()).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].image_id, "missing");
    }

    #[test]
    fn parallel_run_matches_serial() {
        let dir = tempfile::tempdir().unwrap();
        let entries = write_synth_manifest(dir.path(), 8, &SynthParams::default(), 3000);
        let serial = run_dataset(&entries, &gw_method(), &RunOptions::default()).unwrap();
        let parallel = run_dataset(
            &entries,
            &gw_method(),
            &RunOptions {
                jobs: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let a: Vec<(String, f64)> = serial
            .records
            .iter()
            .map(|r| (r.image_id.clone(), r.error_deg))
            .collect();
        let b: Vec<(String, f64)> = parallel
            .records
            .iter()
            .map(|r| (r.image_id.clone(), r.error_deg))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn records_csv_round_trips_into_stats() {
        let dir = tempfile::tempdir().unwrap();
        let entries = write_synth_manifest(dir.path(), 5, &SynthParams::default(), 40);
        let run = run_dataset(&entries, &gw_method(), &RunOptions::default()).unwrap();
        let mut csv_bytes = Vec::new();
        run.write_records_csv(&mut csv_bytes).unwrap();
        let text = String::from_utf8(csv_bytes).unwrap();
        let errors: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        let recomputed = error_stats(&errors).unwrap();
        assert!((recomputed.mean - run.stats.mean).abs() < 1e-12);
        assert!((recomputed.geo_mean - run.stats.geo_mean).abs() < 1e-12);
    }

    #[test]
    fn camera_grouping_covers_all_records() {
        let dir = tempfile::tempdir().unwrap();
        let entries = write_synth_manifest(dir.path(), 6, &SynthParams::default(), 77);
        let run = run_dataset(&entries, &gw_method(), &RunOptions::default()).unwrap();
        let groups = stats_by_camera(&entries, &run).unwrap();
        assert_eq!(groups.len(), 2);
        let total: usize = groups.iter().map(|(_, s)| s.count).sum();
        assert_eq!(total, run.records.len());
        let macro_avg = macro_average_stats(
            &groups.iter().map(|(_, s)| *s).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(macro_avg.count, run.records.len());
    }

    #[test]
    fn mask_file_excludes_pixels() {
        let dir = tempfile::tempdir().unwrap();
        // left half bright white-ish, right half the true color; mask out the left
        let image = LinearImage::from_fn(4, 8, |_, c| {
            if c < 4 {
                [0.95, 0.95, 0.95]
            } else {
                [0.8, 0.4, 0.2]
            }
        })
        .unwrap();
        let img_path = dir.path().join("m.ppm");
        save_ppm(&image, &img_path, true).unwrap();
        let mut mask = b"P5\n8 4\n255\n".to_vec();
        for _ in 0..4 {
            mask.extend_from_slice(&[0, 0, 0, 0, 255, 255, 255, 255]);
        }
        let mask_path = dir.path().join("m.pgm");
        std::fs::write(&mask_path, mask).unwrap();
        let entries = vec![ManifestEntry {
            mask_path: Some(mask_path),
            ..ManifestEntry::new("m", img_path, [0.8, 0.4, 0.2])
        }];
        let run = run_dataset(&entries, &gw_method(), &RunOptions::default()).unwrap();
        assert!(run.stats.mean < 1e-2, "{}", run.stats.mean);
    }
}
