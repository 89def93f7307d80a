//! Exhaustive parameter search and downsampling sweeps.

use std::io::Write;

use crate::error::{Error, Result};
use crate::estimators::{GrayFrameworkParams, MinkowskiOrder};
use crate::harness::{run_dataset, ManifestEntry, MethodConfig, RunOptions};
use crate::pbp::PbpParams;

/// Candidate sets for the patch-wise parameter search. The objective is
/// always the sum of mean and median angular error.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub sample_fractions: Vec<f64>,
    pub intervals: Vec<u32>,
    pub minkowski_ps: Vec<MinkowskiOrder>,
    pub grid_factors: Vec<u32>,
    pub brightness_powers: Vec<u32>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sample_fractions.is_empty()
            || self.intervals.is_empty()
            || self.minkowski_ps.is_empty()
            || self.grid_factors.is_empty()
            || self.brightness_powers.is_empty()
        {
            return Err(Error::parameter("every grid dimension needs candidates"));
        }
        Ok(())
    }

    /// Candidates sorted ascending so iteration order is lexicographic.
    fn sorted(&self) -> GridSpec {
        let mut spec = self.clone();
        spec.sample_fractions.sort_by(|a, b| a.total_cmp(b));
        spec.intervals.sort_unstable();
        spec.minkowski_ps.sort_by_key(|p| match p {
            MinkowskiOrder::Finite(v) => (*v as u64, 0u8),
            MinkowskiOrder::Infinity => (u64::MAX, 1),
        });
        spec.grid_factors.sort_unstable();
        spec.brightness_powers.sort_unstable();
        spec
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GridRow {
    pub sample_fraction: f64,
    pub interval: u32,
    pub minkowski_p: MinkowskiOrder,
    pub grid_factor: u32,
    pub brightness_power: u32,
    pub mean: f64,
    pub median: f64,
}

impl GridRow {
    pub fn objective(&self) -> f64 {
        self.mean + self.median
    }
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub best: GridRow,
    pub rows: Vec<GridRow>,
}

/// Evaluates every parameter combination of a patch-wise method on the
/// manifest and returns the argmin of mean+median angular error. Ties go to
/// the smaller mean, then to the lexicographically smaller parameter tuple
/// (fraction, interval, p, grid factor, power).
pub fn grid_search(
    entries: &[ManifestEntry],
    base: &GrayFrameworkParams,
    spec: &GridSpec,
    options: &RunOptions,
) -> Result<GridOutcome> {
    spec.validate()?;
    let spec = spec.sorted();
    let mut rows = Vec::new();
    let mut best: Option<GridRow> = None;
    for &fraction in &spec.sample_fractions {
        for &interval in &spec.intervals {
            for &p in &spec.minkowski_ps {
                for &n in &spec.grid_factors {
                    for &q in &spec.brightness_powers {
                        let method = MethodConfig::Pbp(PbpParams {
                            grid_factor: n,
                            brightness_power: q,
                            sample_fraction: fraction,
                            downsample_interval: interval,
                            base: GrayFrameworkParams {
                                minkowski_p: p,
                                ..*base
                            },
                        });
                        let run = run_dataset(entries, &method, options)?;
                        let row = GridRow {
                            sample_fraction: fraction,
                            interval,
                            minkowski_p: p,
                            grid_factor: n,
                            brightness_power: q,
                            mean: run.stats.mean,
                            median: run.stats.median,
                        };
                        let better = match &best {
                            None => true,
                            Some(b) => {
                                row.objective() < b.objective()
                                    || (row.objective() == b.objective() && row.mean < b.mean)
                            }
                        };
                        if better {
                            best = Some(row);
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(GridOutcome {
        best: best.expect("grid is nonempty"),
        rows,
    })
}

pub fn write_grid_csv(rows: &[GridRow], mut writer: impl Write) -> Result<()> {
    let w = &mut writer;
    writeln!(
        w,
        "sample_fraction,interval,minkowski_p,grid_factor,brightness_power,mean,median,objective"
    )
    .map_err(|e| Error::format(format!("csv write: {e}")))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.sample_fraction,
            r.interval,
            r.minkowski_p,
            r.grid_factor,
            r.brightness_power,
            r.mean,
            r.median,
            r.objective()
        )
        .map_err(|e| Error::format(format!("csv write: {e}")))?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub method: String,
    pub interval: u32,
    pub mean: f64,
    pub median: f64,
    pub mean_time_ms: f64,
}

/// Runs each method behind every downsampling interval and tabulates
/// accuracy and per-image time.
pub fn downsample_sweep(
    entries: &[ManifestEntry],
    methods: &[MethodConfig],
    intervals: &[u32],
    options: &RunOptions,
) -> Result<Vec<SweepRow>> {
    if intervals.is_empty() {
        return Err(Error::parameter("no downsampling intervals given"));
    }
    if methods.is_empty() {
        return Err(Error::parameter("no methods given"));
    }
    let mut rows = Vec::with_capacity(methods.len() * intervals.len());
    for method in methods {
        for &interval in intervals {
            let run = run_dataset(entries, &method.with_interval(interval), options)?;
            rows.push(SweepRow {
                method: method.label(),
                interval,
                mean: run.stats.mean,
                median: run.stats.median,
                mean_time_ms: run.mean_elapsed_ms(),
            });
        }
    }
    Ok(rows)
}

/// CSV with raw columns plus per-method max-normalized columns (each
/// method's largest value maps to 1), the form used to plot trends across
/// intervals.
pub fn write_sweep_csv(rows: &[SweepRow], mut writer: impl Write) -> Result<()> {
    let max_of = |method: &str, f: fn(&SweepRow) -> f64| {
        rows.iter()
            .filter(|r| r.method == method)
            .map(f)
            .fold(0.0f64, f64::max)
    };
    let norm = |v: f64, max: f64| if max > 0.0 { v / max } else { 0.0 };
    writeln!(
        writer,
        "method,interval,mean,median,mean_time_ms,mean_norm,median_norm,time_norm"
    )
    .map_err(|e| Error::format(format!("csv write: {e}")))?;
    for r in rows {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.interval,
            r.mean,
            r.median,
            r.mean_time_ms,
            norm(r.mean, max_of(&r.method, |r| r.mean)),
            norm(r.median, max_of(&r.method, |r| r.median)),
            norm(r.mean_time_ms, max_of(&r.method, |r| r.mean_time_ms)),
        )
        .map_err(|e| Error::format(format!("csv write: {e}")))?;
    }
    Ok(())
}
