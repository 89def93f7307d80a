//! Patch-wise bright-pixel estimation.
//!
//! The full pipeline: downsample the input, apply the base framework's
//! filter stages, split the raster into a grid of near-square patches,
//! distribute a global bright-pixel budget across patches in proportion to
//! their modified brightness (the sum of per-pixel brightness raised to a
//! power q), select each patch's brightest pixels, and run the base
//! framework's Minkowski mean on the union. With a single whole-image patch
//! this reduces exactly to the Bright Pixels baseline.

use std::ops::Range;

use crate::downsample::{equidistant_downsample, DownsampleParams};
use crate::error::{Error, Result};
use crate::estimators::{
    apply_framework_filter, minkowski_estimate, GrayFrameworkParams, PixelSelection,
};
use crate::imaging::{IlluminantEstimate, LinearImage};

/// Parameters of a patch-wise bright-pixel run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PbpParams {
    /// Grid factor n: the raster is cut into 3n x 2n patches (columns x rows)
    /// for landscape inputs, transposed for portrait ones.
    pub grid_factor: u32,
    /// Power q applied to per-pixel brightness when weighting patches.
    pub brightness_power: u32,
    /// Overall fraction of raster pixels to select, in (0, 1).
    pub sample_fraction: f64,
    /// Equidistant downsampling interval applied before everything else.
    pub downsample_interval: u32,
    /// The framework member applied to the selected pixels.
    pub base: GrayFrameworkParams,
}

impl PbpParams {
    pub fn validate(&self) -> Result<()> {
        if self.grid_factor < 1 {
            return Err(Error::parameter("grid factor must be >= 1"));
        }
        if self.brightness_power < 1 {
            return Err(Error::parameter("brightness power must be >= 1"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(Error::parameter(format!(
                "sample fraction {} outside (0, 1)",
                self.sample_fraction
            )));
        }
        if self.downsample_interval < 1 {
            return Err(Error::parameter("downsampling interval must be >= 1"));
        }
        self.base.validate()
    }
}

/// Per-pixel brightness `R+G+B`. Masked pixels get brightness 0 and are
/// never selected; the mask is carried alongside for capacity checks.
#[derive(Clone, Debug)]
pub struct BrightnessMap {
    height: usize,
    width: usize,
    values: Vec<f32>,
    mask: Vec<bool>,
}

impl BrightnessMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

pub fn brightness_map(image: &LinearImage) -> BrightnessMap {
    let values = image
        .data()
        .chunks_exact(3)
        .zip(image.mask())
        .map(|(px, m)| if *m { px[0] + px[1] + px[2] } else { 0.0 })
        .collect();
    BrightnessMap {
        height: image.height(),
        width: image.width(),
        values,
        mask: image.mask().to_vec(),
    }
}

/// Number of pixels a sample fraction buys on an N-pixel raster:
/// `max(1, ceil(N * fraction))`.
pub fn selection_budget(pixel_count: usize, fraction: f64) -> usize {
    ((pixel_count as f64 * fraction).ceil() as usize).max(1)
}

/// The top-k unmasked pixels of a rectangular region by brightness,
/// ties broken by row-major position. Returned in row-major order.
pub(crate) fn top_brightest_in(
    map: &BrightnessMap,
    rows: Range<usize>,
    cols: Range<usize>,
    k: usize,
) -> Vec<(u32, u32)> {
    if k == 0 {
        return Vec::new();
    }
    let mut candidates: Vec<(u32, f32)> = Vec::with_capacity(rows.len() * cols.len());
    for r in rows {
        for c in cols.clone() {
            let i = r * map.width + c;
            if map.mask[i] {
                candidates.push((i as u32, map.values[i]));
            }
        }
    }
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, |a, b| {
            b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
        });
        candidates.truncate(k);
        candidates.sort_unstable_by_key(|(i, _)| *i);
    }
    candidates
        .iter()
        .map(|(i, _)| {
            let i = *i as usize;
            ((i / map.width) as u32, (i % map.width) as u32)
        })
        .collect()
}

/// A rows x cols tiling of a raster into near-equal rectangular patches.
/// Boundary b(k) = floor(k * extent / parts), so patch extents differ by at
/// most one pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchGrid {
    height: usize,
    width: usize,
    rows: usize,
    cols: usize,
}

impl PatchGrid {
    pub fn new(height: usize, width: usize, rows: usize, cols: usize) -> Result<Self> {
        if rows < 1 || cols < 1 {
            return Err(Error::parameter("grid must have at least one patch"));
        }
        if height < rows || width < cols {
            return Err(Error::dimension(format!(
                "{height}x{width} raster too small for a {rows}x{cols} grid"
            )));
        }
        Ok(Self {
            height,
            width,
            rows,
            cols,
        })
    }

    /// Grid from the factor n: 2n rows x 3n columns when width >= height,
    /// transposed otherwise, keeping patches approximately square.
    pub fn from_grid_factor(height: usize, width: usize, n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::parameter("grid factor must be >= 1"));
        }
        let n = n as usize;
        let (rows, cols) = if width >= height {
            (2 * n, 3 * n)
        } else {
            (3 * n, 2 * n)
        };
        Self::new(height, width, rows, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_patches(&self) -> usize {
        self.rows * self.cols
    }

    /// Row and column ranges of the patch with the given row-major index.
    pub fn patch_bounds(&self, index: usize) -> (Range<usize>, Range<usize>) {
        debug_assert!(index < self.num_patches());
        let pr = index / self.cols;
        let pc = index % self.cols;
        let r0 = pr * self.height / self.rows;
        let r1 = (pr + 1) * self.height / self.rows;
        let c0 = pc * self.width / self.cols;
        let c1 = (pc + 1) * self.width / self.cols;
        (r0..r1, c0..c1)
    }
}

/// The per-patch budget split: modified brightness, integer sample counts,
/// and the totals they must conserve.
#[derive(Clone, Debug)]
pub struct PatchAllocation {
    /// Pixels to select from each patch.
    pub counts: Vec<usize>,
    /// Modified brightness of each patch (sum of brightness^q).
    pub modified_brightness: Vec<f64>,
    /// Sum of the per-patch modified brightness.
    pub total_brightness: f64,
    /// Global selection budget.
    pub budget: usize,
}

/// Splits the global budget `max(1, ceil(N * fraction))` across patches in
/// proportion to modified brightness, rounding with the largest-remainder
/// rule (ties by patch index) and capping each count at the patch's unmasked
/// pixel count. Capped surplus is redistributed in the same remainder order
/// among patches with headroom.
pub fn allocate_counts(
    map: &BrightnessMap,
    grid: &PatchGrid,
    brightness_power: u32,
    fraction: f64,
) -> Result<PatchAllocation> {
    if brightness_power < 1 {
        return Err(Error::parameter("brightness power must be >= 1"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::parameter(format!(
            "sample fraction {fraction} outside (0, 1)"
        )));
    }
    if (grid.height, grid.width) != (map.height, map.width) {
        return Err(Error::dimension("grid does not match brightness raster"));
    }

    let patches = grid.num_patches();
    let mut modified = vec![0f64; patches];
    let mut capacity = vec![0usize; patches];
    for p in 0..patches {
        let (rows, cols) = grid.patch_bounds(p);
        let mut sum = 0f64;
        let mut cap = 0usize;
        for r in rows {
            for c in cols.clone() {
                let i = r * map.width + c;
                sum += (map.values[i] as f64).powi(brightness_power as i32);
                cap += map.mask[i] as usize;
            }
        }
        modified[p] = sum;
        capacity[p] = cap;
    }
    let total: f64 = modified.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateBrightness);
    }

    let budget = selection_budget(map.height * map.width, fraction);
    let mut counts = vec![0usize; patches];
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(patches);
    let mut assigned = 0usize;
    for p in 0..patches {
        let share = modified[p] / total * budget as f64;
        counts[p] = share.floor() as usize;
        assigned += counts[p];
        remainders.push((p, share - share.floor()));
    }
    // Largest remainder first; ties go to the lower patch index.
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut deficit = budget.saturating_sub(assigned);
    for (p, _) in &remainders {
        if deficit == 0 {
            break;
        }
        counts[*p] += 1;
        deficit -= 1;
    }

    // Cap at capacity, then hand the surplus to patches with headroom.
    let mut surplus = 0usize;
    for p in 0..patches {
        if counts[p] > capacity[p] {
            surplus += counts[p] - capacity[p];
            counts[p] = capacity[p];
        }
    }
    while surplus > 0 {
        let mut placed = false;
        for (p, _) in &remainders {
            if surplus == 0 {
                break;
            }
            if counts[*p] < capacity[*p] {
                counts[*p] += 1;
                surplus -= 1;
                placed = true;
            }
        }
        if !placed {
            break; // fewer unmasked pixels than the budget
        }
    }

    Ok(PatchAllocation {
        counts,
        modified_brightness: modified,
        total_brightness: total,
        budget,
    })
}

/// Selects each patch's brightest unmasked pixels per the allocation and
/// returns the union, ordered by patch index then row-major position.
pub fn select_patchwise(
    map: &BrightnessMap,
    alloc: &PatchAllocation,
    grid: &PatchGrid,
) -> PixelSelection {
    debug_assert_eq!(alloc.counts.len(), grid.num_patches());
    let mut indices = Vec::with_capacity(alloc.counts.iter().sum());
    for (p, &count) in alloc.counts.iter().enumerate() {
        let (rows, cols) = grid.patch_bounds(p);
        indices.extend(top_brightest_in(map, rows, cols, count));
    }
    PixelSelection::from_valid_indices(indices, (map.height, map.width))
}

/// Everything a patch-wise run produced, for inspection and visualization.
#[derive(Clone, Debug)]
pub struct PbpAnalysis {
    /// The downsampled, filter-stage-processed raster the selection indexes.
    pub filtered: LinearImage,
    pub grid: PatchGrid,
    pub allocation: PatchAllocation,
    pub selection: PixelSelection,
    pub estimate: IlluminantEstimate,
}

fn analyze_filtered(
    filtered: LinearImage,
    grid: PatchGrid,
    params: &PbpParams,
) -> Result<PbpAnalysis> {
    let map = brightness_map(&filtered);
    let allocation = allocate_counts(&map, &grid, params.brightness_power, params.sample_fraction)?;
    let selection = select_patchwise(&map, &allocation, &grid);
    let estimate = minkowski_estimate(&filtered, Some(&selection), params.base.minkowski_p)?;
    Ok(PbpAnalysis {
        filtered,
        grid,
        allocation,
        selection,
        estimate,
    })
}

/// Runs the full pipeline and keeps the intermediate products.
pub fn pbp_analyze(image: &LinearImage, params: &PbpParams) -> Result<PbpAnalysis> {
    params.validate()?;
    let ds = equidistant_downsample(image, DownsampleParams::new(params.downsample_interval)?)?;
    let filtered = apply_framework_filter(&ds, &params.base)?;
    let grid = PatchGrid::from_grid_factor(filtered.height(), filtered.width(), params.grid_factor)?;
    analyze_filtered(filtered, grid, params)
}

/// Same pipeline with an explicit grid shape instead of the grid factor.
/// A 1x1 grid reproduces the Bright Pixels baseline exactly.
pub fn pbp_analyze_with_grid(
    image: &LinearImage,
    params: &PbpParams,
    rows: usize,
    cols: usize,
) -> Result<PbpAnalysis> {
    params.validate()?;
    let ds = equidistant_downsample(image, DownsampleParams::new(params.downsample_interval)?)?;
    let filtered = apply_framework_filter(&ds, &params.base)?;
    let grid = PatchGrid::new(filtered.height(), filtered.width(), rows, cols)?;
    analyze_filtered(filtered, grid, params)
}

pub fn pbp_estimate(image: &LinearImage, params: &PbpParams) -> Result<IlluminantEstimate> {
    Ok(pbp_analyze(image, params)?.estimate)
}
