//! Seeded synthetic scenes with exactly known illuminants.
//!
//! A scene is per-pixel random reflectance in `[0, 1)^3` multiplied by a
//! drawn illuminant, optionally with pure-white rectangles (reflectance 1,
//! so those pixels equal the illuminant itself) scattered over the frame and
//! bright chromatic distractor pixels. White area is split into several
//! small rectangles so patch-based estimators see highlights everywhere,
//! the way real specular scenes do.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::{IlluminantEstimate, LinearImage};

#[derive(Clone, Copy, Debug)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Fraction of the frame covered by pure-white rectangles; 0 disables.
    pub white_patch_fraction: f64,
    /// How many rectangles the white area is split into.
    pub white_patch_count: usize,
    /// Bright chromatic single-pixel distractors.
    pub distractor_pixels: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 96,
            height: 64,
            white_patch_fraction: 0.02,
            white_patch_count: 16,
            distractor_pixels: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthScene {
    pub image: LinearImage,
    pub illuminant: IlluminantEstimate,
}

/// Draws a plausible illuminant: channels uniform in `[0.55, 1]`, rescaled so
/// the largest equals 1.
pub fn random_illuminant(rng: &mut impl Rng) -> [f64; 3] {
    let raw: [f64; 3] = [
        rng.random_range(0.55..=1.0),
        rng.random_range(0.55..=1.0),
        rng.random_range(0.55..=1.0),
    ];
    let max = raw[0].max(raw[1]).max(raw[2]);
    [raw[0] / max, raw[1] / max, raw[2] / max]
}

pub fn synth_scene(params: &SynthParams, rng: &mut impl Rng) -> SynthScene {
    let e = random_illuminant(rng);
    let ef = [e[0] as f32, e[1] as f32, e[2] as f32];
    let (h, w) = (params.height, params.width);

    let mut data = Vec::with_capacity(h * w * 3);
    for _ in 0..h * w {
        data.push(rng.random::<f32>() * ef[0]);
        data.push(rng.random::<f32>() * ef[1]);
        data.push(rng.random::<f32>() * ef[2]);
    }

    if params.white_patch_fraction > 0.0 {
        let total = ((h * w) as f64 * params.white_patch_fraction).round() as usize;
        let count = params.white_patch_count.max(1);
        let side = (((total as f64 / count as f64).sqrt()).round() as usize).max(1);
        for _ in 0..count {
            let r0 = rng.random_range(0..=h.saturating_sub(side));
            let c0 = rng.random_range(0..=w.saturating_sub(side));
            for r in r0..(r0 + side).min(h) {
                for c in c0..(c0 + side).min(w) {
                    let i = (r * w + c) * 3;
                    data[i..i + 3].copy_from_slice(&ef);
                }
            }
        }
    }

    for _ in 0..params.distractor_pixels {
        let r = rng.random_range(0..h);
        let c = rng.random_range(0..w);
        let i = (r * w + c) * 3;
        // bright but strongly chromatic reflectance
        data[i] = ef[0];
        data[i + 1] = 0.25 * ef[1];
        data[i + 2] = 0.2 * ef[2];
    }

    SynthScene {
        image: LinearImage::new(h, w, data).expect("synthetic data in range"),
        illuminant: IlluminantEstimate::new(e).expect("positive illuminant"),
    }
}

/// Deterministic scene from a seed.
pub fn synth_scene_seeded(params: &SynthParams, seed: u64) -> SynthScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synth_scene(&params.clone(), &mut rng)
}
