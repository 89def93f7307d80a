//! wasm-bindgen bindings for the browser demo.
//!
//! Three operations are exposed on [`Demo`]: load an RGBA canvas buffer
//! (`set_image_rgba`), generate a seeded synthetic scene with a known
//! illuminant (`generate_scene`), and run an estimator (`analyze`), which
//! returns the estimate, the selected-pixel overlay, and the corrected
//! image ready for `putImageData`.

use wasm_bindgen::prelude::*;

use pbp::downsample::{equidistant_downsample, DownsampleParams};
use pbp::estimators::{
    bright_pixels_analyze, gray_framework_estimate, GrayFrameworkParams, MinkowskiOrder,
};
use pbp::eval::angular_error_deg;
use pbp::imaging::{correct_image, gamma_encode, IlluminantEstimate, LinearImage};
use pbp::pbp::{pbp_analyze, PbpParams};
use pbp::synth::{synth_scene_seeded, SynthParams};

/// Display transfer function used to linearize canvas input and encode
/// output for the screen.
const DISPLAY_GAMMA: f64 = 2.2;

fn js_err(e: pbp::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn base_params(name: &str) -> Result<GrayFrameworkParams, JsValue> {
    Ok(match name {
        "gw" => GrayFrameworkParams::gray_world(),
        "wp" => GrayFrameworkParams::white_patch(),
        "sog" => GrayFrameworkParams::shades_of_gray(),
        "ggw" => GrayFrameworkParams::general_gray_world(),
        "ge1" => GrayFrameworkParams::gray_edge1(),
        "ge2" => GrayFrameworkParams::gray_edge2(),
        other => return Err(JsValue::from_str(&format!("unknown framework {other:?}"))),
    })
}

fn display_rgba(image: &LinearImage) -> Vec<u8> {
    let encoded = gamma_encode(image, DISPLAY_GAMMA).expect("positive gamma");
    let mut out = Vec::with_capacity(image.pixel_count() * 4);
    for px in encoded.data().chunks_exact(3) {
        for v in px {
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
        out.push(255);
    }
    out
}

/// One interactive session: a working image plus, for synthetic scenes,
/// its exact illuminant.
#[wasm_bindgen]
pub struct Demo {
    image: Option<LinearImage>,
    groundtruth: Option<IlluminantEstimate>,
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}

#[wasm_bindgen]
pub struct AnalysisOutput {
    estimate: [f64; 3],
    error_deg: Option<f64>,
    selection: Vec<u32>,
    corrected_rgba: Vec<u8>,
    grid_rows: u32,
    grid_cols: u32,
    interval: u32,
}

#[wasm_bindgen]
impl AnalysisOutput {
    /// Unit-norm illuminant estimate, `[r, g, b]`.
    #[wasm_bindgen(getter)]
    pub fn estimate(&self) -> Vec<f64> {
        self.estimate.to_vec()
    }

    /// Angular error against the groundtruth, when one is known.
    #[wasm_bindgen(getter)]
    pub fn error_deg(&self) -> Option<f64> {
        self.error_deg
    }

    /// Linear full-resolution pixel indices of the selected pixels.
    #[wasm_bindgen(getter)]
    pub fn selection(&self) -> Vec<u32> {
        self.selection.clone()
    }

    /// Corrected image as RGBA bytes, display-encoded.
    #[wasm_bindgen(getter, js_name = correctedRgba)]
    pub fn corrected_rgba(&self) -> Vec<u8> {
        self.corrected_rgba.clone()
    }

    #[wasm_bindgen(getter, js_name = gridRows)]
    pub fn grid_rows(&self) -> u32 {
        self.grid_rows
    }

    #[wasm_bindgen(getter, js_name = gridCols)]
    pub fn grid_cols(&self) -> u32 {
        self.grid_cols
    }

    #[wasm_bindgen(getter)]
    pub fn interval(&self) -> u32 {
        self.interval
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo {
            image: None,
            groundtruth: None,
        }
    }

    /// Loads an RGBA buffer from `getImageData`. With `srgb` set, values are
    /// linearized with the display gamma before estimation.
    #[wasm_bindgen(js_name = setImageRgba)]
    pub fn set_image_rgba(
        &mut self,
        rgba: &[u8],
        width: u32,
        height: u32,
        srgb: bool,
    ) -> Result<(), JsValue> {
        let (w, h) = (width as usize, height as usize);
        if rgba.len() != w * h * 4 {
            return Err(JsValue::from_str("buffer length does not match dimensions"));
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for px in rgba.chunks_exact(4) {
            for v in &px[..3] {
                let x = *v as f32 / 255.0;
                data.push(if srgb {
                    x.powf(DISPLAY_GAMMA as f32)
                } else {
                    x
                });
            }
        }
        self.image = Some(LinearImage::new(h, w, data).map_err(js_err)?);
        self.groundtruth = None;
        Ok(())
    }

    /// Replaces the working image with a seeded synthetic scene whose
    /// illuminant is known exactly, enabling the error readout.
    #[wasm_bindgen(js_name = generateScene)]
    pub fn generate_scene(
        &mut self,
        width: u32,
        height: u32,
        seed: u32,
        white_fraction: f64,
    ) -> Result<(), JsValue> {
        if width < 8 || height < 8 {
            return Err(JsValue::from_str("scene must be at least 8x8"));
        }
        let scene = synth_scene_seeded(
            &SynthParams {
                width: width as usize,
                height: height as usize,
                white_patch_fraction: white_fraction.clamp(0.0, 0.5),
                white_patch_count: 16,
                distractor_pixels: 0,
            },
            seed as u64,
        );
        self.image = Some(scene.image);
        self.groundtruth = Some(scene.illuminant);
        Ok(())
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.image.as_ref().map_or(0, |i| i.width() as u32)
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.image.as_ref().map_or(0, |i| i.height() as u32)
    }

    /// Groundtruth illuminant of a generated scene, if any.
    #[wasm_bindgen(getter)]
    pub fn groundtruth(&self) -> Option<Vec<f64>> {
        self.groundtruth.map(|g| g.rgb().to_vec())
    }

    /// Display-encoded RGBA of the working image.
    #[wasm_bindgen(js_name = renderInput)]
    pub fn render_input(&self) -> Result<Vec<u8>, JsValue> {
        let image = self.working_image()?;
        Ok(display_rgba(image))
    }

    /// Runs one estimator and corrects the image with its estimate.
    ///
    /// `method` is one of `pbp`, `bp`, `gw`, `wp`, `sog`, `ggw`, `ge1`,
    /// `ge2`; `base` applies to `pbp`/`bp`; `minkowski_p` is an integer,
    /// `"inf"`, or empty to keep the base order.
    #[allow(clippy::too_many_arguments)]
    pub fn analyze(
        &self,
        method: &str,
        base: &str,
        grid_factor: u32,
        brightness_power: u32,
        sample_fraction: f64,
        interval: u32,
        minkowski_p: &str,
    ) -> Result<AnalysisOutput, JsValue> {
        let image = self.working_image()?;
        let mut base_fw = base_params(if matches!(method, "pbp" | "bp") {
            base
        } else {
            method
        })?;
        if !minkowski_p.is_empty() {
            base_fw.minkowski_p = minkowski_p
                .parse::<MinkowskiOrder>()
                .map_err(js_err)?;
        }

        let off = interval.max(1) / 2;
        let map_to_full = |sel: &[(u32, u32)]| -> Vec<u32> {
            let s = interval.max(1);
            sel.iter()
                .map(|(r, c)| (r * s + off) * image.width() as u32 + (c * s + off))
                .collect()
        };

        let (estimate, selection, grid_rows, grid_cols) = match method {
            "pbp" => {
                let analysis = pbp_analyze(
                    image,
                    &PbpParams {
                        grid_factor,
                        brightness_power,
                        sample_fraction,
                        downsample_interval: interval,
                        base: base_fw,
                    },
                )
                .map_err(js_err)?;
                (
                    analysis.estimate,
                    map_to_full(analysis.selection.indices()),
                    analysis.grid.rows() as u32,
                    analysis.grid.cols() as u32,
                )
            }
            "bp" => {
                let ds = equidistant_downsample(
                    image,
                    DownsampleParams::new(interval).map_err(js_err)?,
                )
                .map_err(js_err)?;
                let analysis =
                    bright_pixels_analyze(&ds, sample_fraction, &base_fw).map_err(js_err)?;
                (
                    analysis.estimate,
                    map_to_full(analysis.selection.indices()),
                    1,
                    1,
                )
            }
            _ => {
                let ds = equidistant_downsample(
                    image,
                    DownsampleParams::new(interval).map_err(js_err)?,
                )
                .map_err(js_err)?;
                let estimate = gray_framework_estimate(&ds, &base_fw).map_err(js_err)?;
                (estimate, Vec::new(), 0, 0)
            }
        };

        let corrected = correct_image(image, &estimate).map_err(js_err)?;
        Ok(AnalysisOutput {
            estimate: estimate.rgb(),
            error_deg: self
                .groundtruth
                .as_ref()
                .map(|gt| angular_error_deg(&estimate, gt)),
            selection,
            corrected_rgba: display_rgba(&corrected),
            grid_rows,
            grid_cols,
            interval: interval.max(1),
        })
    }

    fn working_image(&self) -> Result<&LinearImage, JsValue> {
        self.image
            .as_ref()
            .ok_or_else(|| JsValue::from_str("no image loaded"))
    }
}
