//! Command-line interface for illuminant estimation and benchmarking.

use std::fs::File;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pbp::estimators::{GrayFrameworkParams, MinkowskiOrder};
use pbp::eval::brightness_group_analysis;
use pbp::harness::{
    bench_single, default_jobs, downsample_sweep, grid_search, macro_average_stats,
    pbp_tuned_params, read_manifest, run_dataset, stats_by_camera, write_grid_csv,
    write_manifest, write_sweep_csv, GridSpec, ManifestEntry, MethodConfig, RunOptions,
};
use pbp::imaging::{correct_image, gamma_encode, preprocess, IlluminantEstimate, PreprocessConfig};
use pbp::io::{load_image, load_mask, save_png8, save_ppm};
use pbp::synth::{synth_scene_seeded, SynthParams};
use pbp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pbp",
    about = "Learning-free color constancy: estimation, evaluation, and benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the illuminant of one image, optionally writing the corrected image
    Estimate(EstimateArgs),
    /// Evaluate a method over a dataset manifest
    Eval(EvalArgs),
    /// Exhaustive parameter search over (sample fraction, interval, Minkowski order)
    Grid(GridArgs),
    /// Accuracy and runtime as a function of the downsampling interval
    SweepDownsample(SweepArgs),
    /// Time repeated estimation calls on one preloaded image
    Bench(BenchArgs),
    /// Generate seeded synthetic scenes with known illuminants plus a manifest
    GenSynth(GenSynthArgs),
    /// Per-brightness-group estimation error on each manifest image
    BrightnessGroups(GroupsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodName {
    Gw,
    Wp,
    Sog,
    Ggw,
    Ge1,
    Ge2,
    Bp,
    Pbp,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseName {
    Gw,
    Wp,
    Sog,
    Ggw,
    Ge1,
    Ge2,
}

impl BaseName {
    fn params(self) -> GrayFrameworkParams {
        match self {
            BaseName::Gw => GrayFrameworkParams::gray_world(),
            BaseName::Wp => GrayFrameworkParams::white_patch(),
            BaseName::Sog => GrayFrameworkParams::shades_of_gray(),
            BaseName::Ggw => GrayFrameworkParams::general_gray_world(),
            BaseName::Ge1 => GrayFrameworkParams::gray_edge1(),
            BaseName::Ge2 => GrayFrameworkParams::gray_edge2(),
        }
    }
}

#[derive(Args)]
struct MethodArgs {
    /// Estimation method
    #[arg(long, value_enum, default_value = "pbp")]
    method: MethodName,
    /// Base framework for bp/pbp
    #[arg(long, value_enum, default_value = "gw")]
    base: BaseName,
    /// Patch grid factor n (grid is 3n x 2n)
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Brightness power q for patch weighting
    #[arg(long, default_value_t = 1)]
    q: u32,
    /// Fraction of pixels to select (bp/pbp)
    #[arg(long)]
    sample_frac: Option<f64>,
    /// Downsampling interval S
    #[arg(long)]
    interval: Option<u32>,
    /// Minkowski order override (integer or "inf")
    #[arg(long)]
    minkowski_p: Option<String>,
    /// Gaussian smoothing scale override, in pixels
    #[arg(long)]
    smooth_sigma: Option<f64>,
    /// Derivative order override (0, 1 or 2)
    #[arg(long)]
    derivative_order: Option<u8>,
}

impl MethodArgs {
    fn base_params(&self) -> Result<GrayFrameworkParams> {
        let mut params = self.base.params();
        if let Some(p) = &self.minkowski_p {
            params.minkowski_p = p.parse()?;
        }
        if let Some(sigma) = self.smooth_sigma {
            params.smoothing_sigma = sigma;
        }
        if let Some(k) = self.derivative_order {
            params.derivative_order = k;
        }
        Ok(params)
    }

    fn build(&self) -> Result<MethodConfig> {
        let config = match self.method {
            MethodName::Pbp => {
                let mut params = pbp_tuned_params(&self.base.params(), self.n);
                params.brightness_power = self.q;
                if let Some(f) = self.sample_frac {
                    params.sample_fraction = f;
                }
                if let Some(s) = self.interval {
                    params.downsample_interval = s;
                }
                if let Some(p) = &self.minkowski_p {
                    params.base.minkowski_p = p.parse()?;
                }
                if let Some(sigma) = self.smooth_sigma {
                    params.base.smoothing_sigma = sigma;
                }
                if let Some(k) = self.derivative_order {
                    params.base.derivative_order = k;
                }
                MethodConfig::Pbp(params)
            }
            MethodName::Bp => MethodConfig::BrightPixels {
                fraction: self.sample_frac.unwrap_or(0.02),
                base: self.base_params()?,
                interval: self.interval.unwrap_or(1),
            },
            plain => {
                let preset = match plain {
                    MethodName::Gw => BaseName::Gw,
                    MethodName::Wp => BaseName::Wp,
                    MethodName::Sog => BaseName::Sog,
                    MethodName::Ggw => BaseName::Ggw,
                    MethodName::Ge1 => BaseName::Ge1,
                    MethodName::Ge2 => BaseName::Ge2,
                    _ => unreachable!(),
                };
                let mut params = preset.params();
                if let Some(p) = &self.minkowski_p {
                    params.minkowski_p = p.parse()?;
                }
                if let Some(sigma) = self.smooth_sigma {
                    params.smoothing_sigma = sigma;
                }
                if let Some(k) = self.derivative_order {
                    params.derivative_order = k;
                }
                MethodConfig::Gray {
                    params,
                    interval: self.interval.unwrap_or(1),
                }
            }
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct PreprocessArgs {
    /// Effective source bit depth (defaults to the container depth)
    #[arg(long)]
    bit_depth: Option<u32>,
    /// Saturation-clip threshold in (0, 1]; 1.0 keeps every pixel
    #[arg(long, default_value_t = 1.0)]
    saturation_fraction: f64,
    /// Re-quantize to the 8-bit grid after clipping
    #[arg(long)]
    quantize: bool,
    /// Optional validity mask (PGM or grayscale PNG, nonzero = valid)
    #[arg(long)]
    mask: Option<PathBuf>,
}

impl PreprocessArgs {
    fn load(&self, path: &PathBuf) -> Result<pbp::LinearImage> {
        let config = PreprocessConfig {
            saturation_fraction: self.saturation_fraction,
            source_bit_depth: self.bit_depth,
            quantize_to_8bit: self.quantize,
            quantize_before_clip: false,
        };
        let image = load_image(path, &config)?;
        let mut image = preprocess(&image, &config);
        if let Some(mask_path) = &self.mask {
            let (h, w, mask) = load_mask(mask_path)?;
            if (h, w) != (image.height(), image.width()) {
                return Err(Error::Dimension(format!(
                    "mask {h}x{w} does not match image {}x{}",
                    image.height(),
                    image.width()
                )));
            }
            image = image.with_mask_intersection(&mask)?;
        }
        Ok(image)
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Input image (binary PPM or PNG)
    #[arg(long)]
    image: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    preprocess: PreprocessArgs,
    /// Write the corrected image (8-bit PNG) here
    #[arg(long)]
    correct_out: Option<PathBuf>,
    /// Display gamma applied to the corrected output
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset manifest CSV
    #[arg(long)]
    manifest: PathBuf,
    /// Worker threads (default: CC_JOBS or 1)
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    /// Skip the 8-bit re-quantization step
    #[arg(long)]
    no_quantize: bool,
    /// Quantize before rather than after saturation clipping
    #[arg(long)]
    quantize_before_clip: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            jobs: self.jobs.max(1),
            quantize_to_8bit: !self.no_quantize,
            quantize_before_clip: self.quantize_before_clip,
        }
    }

    fn entries(&self) -> Result<Vec<ManifestEntry>> {
        read_manifest(&self.manifest)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    method: MethodArgs,
    /// Write per-image results CSV (image_id, error_deg, elapsed_ms)
    #[arg(long)]
    per_image: Option<PathBuf>,
    /// Group statistics by manifest camera tag and report the macro average
    #[arg(long)]
    group_by: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Base framework searched over
    #[arg(long, value_enum, default_value = "gw")]
    base: BaseName,
    /// Candidate sample fractions, e.g. 0.02,0.03,0.04
    #[arg(long, value_delimiter = ',', required = true)]
    sigmas: Vec<f64>,
    /// Candidate intervals, e.g. 3-12 or 3,5,7
    #[arg(long, required = true)]
    intervals: String,
    /// Candidate Minkowski orders, e.g. 1,2,3 or inf
    #[arg(long, value_delimiter = ',', required = true)]
    ps: Vec<String>,
    /// Candidate grid factors
    #[arg(long, value_delimiter = ',', default_value = "1")]
    ns: Vec<u32>,
    /// Candidate brightness powers
    #[arg(long, value_delimiter = ',', default_value = "1")]
    qs: Vec<u32>,
    /// Write the full score table CSV here
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated method names (gw,wp,sog,ggw,ge1,ge2,bp,pbp)
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// Intervals, e.g. 1-20 or 1,2,4,8
    #[arg(long, default_value = "1-20")]
    intervals: String,
    /// Write the sweep table CSV here (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Input image (binary PPM or PNG)
    #[arg(long)]
    image: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    preprocess: PreprocessArgs,
    /// Timed repetitions after one warm-up call
    #[arg(long, default_value_t = 20)]
    repeats: usize,
}

#[derive(Args)]
struct GenSynthArgs {
    /// Output directory for scene files and manifest.csv
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 96)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total white-highlight area fraction
    #[arg(long, default_value_t = 0.02)]
    white_frac: f64,
    /// Number of rectangles the white area is split into
    #[arg(long, default_value_t = 16)]
    white_rects: usize,
    /// Bright chromatic distractor pixels per scene
    #[arg(long, default_value_t = 0)]
    distractors: usize,
    /// Scene file format
    #[arg(long, value_enum, default_value = "ppm16")]
    format: SynthFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthFormat {
    Ppm8,
    Ppm16,
    Png8,
}

#[derive(Args)]
struct GroupsArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 100)]
    groups: usize,
    /// Write per-image per-group errors CSV here (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses "1-20", "3,5,7", or a mix like "1,4-8,16".
fn parse_interval_list(spec: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once('-') {
            let a: u32 = a
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad interval {part:?}")))?;
            let b: u32 = b
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad interval {part:?}")))?;
            if a > b {
                return Err(Error::Parameter(format!("empty interval range {part:?}")));
            }
            out.extend(a..=b);
        } else if !part.is_empty() {
            out.push(
                part.parse()
                    .map_err(|_| Error::Parameter(format!("bad interval {part:?}")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(Error::Parameter("no intervals given".into()));
    }
    Ok(out)
}

fn parse_method_label(label: &str) -> Result<MethodConfig> {
    let config = match label {
        "gw" => MethodConfig::Gray {
            params: GrayFrameworkParams::gray_world(),
            interval: 1,
        },
        "wp" => MethodConfig::Gray {
            params: GrayFrameworkParams::white_patch(),
            interval: 1,
        },
        "sog" => MethodConfig::Gray {
            params: GrayFrameworkParams::shades_of_gray(),
            interval: 1,
        },
        "ggw" => MethodConfig::Gray {
            params: GrayFrameworkParams::general_gray_world(),
            interval: 1,
        },
        "ge1" => MethodConfig::Gray {
            params: GrayFrameworkParams::gray_edge1(),
            interval: 1,
        },
        "ge2" => MethodConfig::Gray {
            params: GrayFrameworkParams::gray_edge2(),
            interval: 1,
        },
        "bp" => MethodConfig::BrightPixels {
            fraction: 0.02,
            base: GrayFrameworkParams::gray_world(),
            interval: 1,
        },
        "pbp" => MethodConfig::Pbp(pbp_tuned_params(&GrayFrameworkParams::gray_world(), 1)),
        other => return Err(Error::Parameter(format!("unknown method {other:?}"))),
    };
    Ok(config)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn std::io::Write>> {
    match path {
        Some(p) => Ok(Box::new(
            File::create(p).map_err(|e| Error::Parameter(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Ok(Box::new(std::io::stdout())),
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let method = args.method.build()?;
    let image = args.preprocess.load(&args.image)?;
    let estimate = method.estimate(&image)?;
    let rgb = estimate.rgb();
    println!(
        "{}",
        serde_json::json!({ "estimate": [rgb[0], rgb[1], rgb[2]] })
    );
    if let Some(out) = &args.correct_out {
        let mut corrected = correct_image(&image, &estimate)?;
        if let Some(gamma) = args.gamma {
            corrected = gamma_encode(&corrected, gamma)?;
        }
        save_png8(&corrected, out)?;
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    if let Some(key) = &args.group_by {
        if key != "camera" {
            return Err(Error::Parameter(format!(
                "unsupported group key {key:?} (expected \"camera\")"
            )));
        }
    }
    let method = args.method.build()?;
    let entries = args.run.entries()?;
    let options = args.run.options();
    let run = run_dataset(&entries, &method, &options)?;
    if let Some(path) = &args.per_image {
        let file = File::create(path)
            .map_err(|e| Error::Parameter(format!("cannot create {}: {e}", path.display())))?;
        run.write_records_csv(file)?;
    }
    for f in &run.failures {
        eprintln!("warning: {} failed: {}", f.image_id, f.message);
    }

    let masks_used = entries.iter().filter(|e| e.mask_path.is_some()).count();
    let mut report = serde_json::json!({
        "method": method.label(),
        "stats": run.stats,
        "images": entries.len(),
        "failures": run.failures.len(),
        "preprocess": {
            "quantize_to_8bit": options.quantize_to_8bit,
            "quantize_before_clip": options.quantize_before_clip,
            "images_with_mask": masks_used,
        },
        "grouping": if args.group_by.is_some() { "per-camera" } else { "pooled" },
    });
    if args.group_by.is_some() {
        let groups = stats_by_camera(&entries, &run)?;
        let stats: Vec<_> = groups.iter().map(|(_, s)| *s).collect();
        report["cameras"] = serde_json::json!(groups
            .iter()
            .map(|(tag, s)| serde_json::json!({ "camera": tag, "stats": s }))
            .collect::<Vec<_>>());
        if let Some(avg) = macro_average_stats(&stats) {
            report["macro_average"] = serde_json::json!(avg);
        }
    }
    println!("{report}");
    Ok(())
}

fn cmd_grid(args: &GridArgs) -> Result<()> {
    let entries = args.run.entries()?;
    let spec = GridSpec {
        sample_fractions: args.sigmas.clone(),
        intervals: parse_interval_list(&args.intervals)?,
        minkowski_ps: args
            .ps
            .iter()
            .map(|s| s.parse::<MinkowskiOrder>())
            .collect::<Result<_>>()?,
        grid_factors: args.ns.clone(),
        brightness_powers: args.qs.clone(),
    };
    let outcome = grid_search(&entries, &args.base.params(), &spec, &args.run.options())?;
    if let Some(path) = &args.table {
        let file = File::create(path)
            .map_err(|e| Error::Parameter(format!("cannot create {}: {e}", path.display())))?;
        write_grid_csv(&outcome.rows, file)?;
    }
    let best = &outcome.best;
    println!(
        "{}",
        serde_json::json!({
            "best": {
                "sample_fraction": best.sample_fraction,
                "interval": best.interval,
                "minkowski_p": best.minkowski_p.to_string(),
                "grid_factor": best.grid_factor,
                "brightness_power": best.brightness_power,
                "mean": best.mean,
                "median": best.median,
                "objective": best.objective(),
            },
            "evaluated": outcome.rows.len(),
        })
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let entries = args.run.entries()?;
    let methods = args
        .methods
        .iter()
        .map(|m| parse_method_label(m))
        .collect::<Result<Vec<_>>>()?;
    let intervals = parse_interval_list(&args.intervals)?;
    let rows = downsample_sweep(&entries, &methods, &intervals, &args.run.options())?;
    write_sweep_csv(&rows, open_out(&args.out)?)?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let method = args.method.build()?;
    let image = args.preprocess.load(&args.image)?;
    let stats = bench_single(&image, &method, args.repeats)?;
    println!(
        "{}",
        serde_json::json!({ "method": method.label(), "bench": stats })
    );
    Ok(())
}

fn cmd_gen_synth(args: &GenSynthArgs) -> Result<()> {
    if args.count == 0 {
        return Err(Error::Parameter("count must be >= 1".into()));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Parameter(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let params = SynthParams {
        width: args.width,
        height: args.height,
        white_patch_fraction: args.white_frac,
        white_patch_count: args.white_rects,
        distractor_pixels: args.distractors,
    };
    let mut entries = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let scene = synth_scene_seeded(&params, args.seed.wrapping_add(i as u64));
        let ext = match args.format {
            SynthFormat::Png8 => "png",
            _ => "ppm",
        };
        let path = args.out_dir.join(format!("scene{i:04}.{ext}"));
        match args.format {
            SynthFormat::Ppm8 => save_ppm(&scene.image, &path, false)?,
            SynthFormat::Ppm16 => save_ppm(&scene.image, &path, true)?,
            SynthFormat::Png8 => save_png8(&scene.image, &path)?,
        }
        entries.push(ManifestEntry {
            camera_tag: Some("synth".into()),
            ..ManifestEntry::new(format!("scene{i:04}"), path, scene.illuminant.rgb())
        });
    }
    let manifest_path = args.out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &entries)?;
    println!(
        "{}",
        serde_json::json!({
            "written": args.count,
            "manifest": manifest_path.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_groups(args: &GroupsArgs) -> Result<()> {
    let entries = args.run.entries()?;
    let options = args.run.options();
    let mut out = open_out(&args.out)?;
    writeln!(out, "image_id,group,error_deg").map_err(|e| Error::Parameter(e.to_string()))?;
    let mut per_group_sum = vec![0f64; args.groups];
    let mut analyzed = 0usize;
    for entry in &entries {
        let config = PreprocessConfig {
            saturation_fraction: entry.saturation_fraction,
            source_bit_depth: entry.bit_depth,
            quantize_to_8bit: options.quantize_to_8bit,
            quantize_before_clip: options.quantize_before_clip,
        };
        let image = load_image(&entry.image_path, &config)?;
        let image = preprocess(&image, &config);
        let gt = IlluminantEstimate::new(entry.gt_rgb)?;
        let errors = brightness_group_analysis(&image, &gt, args.groups)?;
        for (g, e) in errors.iter().enumerate() {
            per_group_sum[g] += e;
            writeln!(out, "{},{},{}", entry.image_id, g, e)
                .map_err(|e| Error::Parameter(e.to_string()))?;
        }
        analyzed += 1;
    }
    let mean_per_group: Vec<f64> = per_group_sum
        .iter()
        .map(|s| s / analyzed as f64)
        .collect();
    eprintln!(
        "{}",
        serde_json::json!({
            "images": analyzed,
            "groups": args.groups,
            "mean_error_per_group": mean_per_group,
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Grid(args) => cmd_grid(args),
        Command::SweepDownsample(args) => cmd_sweep(args),
        Command::Bench(args) => cmd_bench(args),
        Command::GenSynth(args) => cmd_gen_synth(args),
        Command::BrightnessGroups(args) => cmd_groups(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
