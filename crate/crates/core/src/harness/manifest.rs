//! Dataset manifests: CSV files binding image paths to groundtruth
//! illuminants and per-image preprocessing settings.
//!
//! Header: `image_id,image_path,gt_r,gt_g,gt_b,mask_path,bit_depth,saturation_fraction,camera_tag`.
//! `mask_path`, `bit_depth`, `saturation_fraction` and `camera_tag` may be
//! empty. Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub image_path: PathBuf,
    pub gt_rgb: [f64; 3],
    pub mask_path: Option<PathBuf>,
    /// Effective source bit depth; `None` uses the container depth.
    pub bit_depth: Option<u32>,
    /// Saturation-clip threshold; 1.0 keeps every pixel.
    pub saturation_fraction: f64,
    pub camera_tag: Option<String>,
}

impl ManifestEntry {
    pub fn new(image_id: impl Into<String>, image_path: impl Into<PathBuf>, gt_rgb: [f64; 3]) -> Self {
        Self {
            image_id: image_id.into(),
            image_path: image_path.into(),
            gt_rgb,
            mask_path: None,
            bit_depth: None,
            saturation_fraction: 1.0,
            camera_tag: None,
        }
    }
}

const HEADER: [&str; 9] = [
    "image_id",
    "image_path",
    "gt_r",
    "gt_g",
    "gt_b",
    "mask_path",
    "bit_depth",
    "saturation_fraction",
    "camera_tag",
];

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::format(format!("cannot open manifest {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::format(format!("manifest header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| Error::format(format!("manifest is missing column {name:?}")))
    };
    let id_col = required("image_id")?;
    let path_col = required("image_path")?;
    let gt_cols = [required("gt_r")?, required("gt_g")?, required("gt_b")?];
    let mask_col = col("mask_path");
    let depth_col = col("bit_depth");
    let sat_col = col("saturation_fraction");
    let camera_col = col("camera_tag");

    let field = |record: &csv::StringRecord, idx: Option<usize>| -> Option<String> {
        idx.and_then(|i| record.get(i))
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
    };

    let mut entries = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(format!("manifest row {}: {e}", line + 2)))?;
        let image_id = field(&record, Some(id_col))
            .ok_or_else(|| Error::format(format!("manifest row {}: empty image_id", line + 2)))?;
        let rel = field(&record, Some(path_col))
            .ok_or_else(|| Error::format(format!("manifest row {}: empty image_path", line + 2)))?;
        let mut gt = [0f64; 3];
        for (ch, idx) in gt_cols.iter().enumerate() {
            gt[ch] = field(&record, Some(*idx))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    Error::format(format!("manifest row {}: bad groundtruth value", line + 2))
                })?;
        }
        if !gt.iter().any(|v| *v > 0.0) {
            return Err(Error::format(format!(
                "manifest row {}: groundtruth has no positive channel",
                line + 2
            )));
        }
        let resolve = |p: String| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let bit_depth = match field(&record, depth_col) {
            Some(s) => Some(s.parse::<u32>().map_err(|_| {
                Error::format(format!("manifest row {}: bad bit_depth {s:?}", line + 2))
            })?),
            None => None,
        };
        let saturation_fraction = match field(&record, sat_col) {
            Some(s) => s.parse::<f64>().map_err(|_| {
                Error::format(format!("manifest row {}: bad saturation_fraction", line + 2))
            })?,
            None => 1.0,
        };
        entries.push(ManifestEntry {
            image_id,
            image_path: resolve(rel),
            gt_rgb: gt,
            mask_path: field(&record, mask_col).map(resolve),
            bit_depth,
            saturation_fraction,
            camera_tag: field(&record, camera_col),
        });
    }
    if entries.is_empty() {
        return Err(Error::format("manifest has no entries"));
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::format(format!("cannot write manifest {}: {e}", path.display())))?;
    writer
        .write_record(HEADER)
        .map_err(|e| Error::format(format!("manifest write: {e}")))?;
    for e in entries {
        writer
            .write_record([
                e.image_id.as_str(),
                &e.image_path.display().to_string(),
                &e.gt_rgb[0].to_string(),
                &e.gt_rgb[1].to_string(),
                &e.gt_rgb[2].to_string(),
                &e.mask_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
                &e.bit_depth.map(|b| b.to_string()).unwrap_or_default(),
                &e.saturation_fraction.to_string(),
                e.camera_tag.as_deref().unwrap_or(""),
            ])
            .map_err(|e| Error::format(format!("manifest write: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::format(format!("manifest write: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_empty_optionals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let entries = vec![
            ManifestEntry {
                camera_tag: Some("camA".into()),
                bit_depth: Some(12),
                saturation_fraction: 0.97,
                mask_path: Some(dir.path().join("m.pgm")),
                ..ManifestEntry::new("a", dir.path().join("a.ppm"), [0.9, 0.8, 0.7])
            },
            ManifestEntry::new("b", dir.path().join("b.ppm"), [1.0, 1.0, 1.0]),
        ];
        write_manifest(&path, &entries).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, entries);
    }

    #[test]
    fn relative_paths_resolve_against_manifest_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(
            &path,
            "image_id,image_path,gt_r,gt_g,gt_b,mask_path,bit_depth,saturation_fraction,camera_tag\n\
             x,images/x.ppm,1,1,1,,,,\n",
        )
        .unwrap();
        let entries = read_manifest(&path).unwrap();
        assert_eq!(entries[0].image_path, dir.path().join("images/x.ppm"));
        assert_eq!(entries[0].saturation_fraction, 1.0);
        assert_eq!(entries[0].bit_depth, None);
    }

    #[test]
    fn bad_groundtruth_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(
            &path,
            "image_id,image_path,gt_r,gt_g,gt_b,mask_path,bit_depth,saturation_fraction,camera_tag\n\
             x,x.ppm,0,0,0,,,,\n",
        )
        .unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Format(_))));
    }

    #[test]
    fn missing_column_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "image_id,image_path\nx,x.ppm\n").unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Format(_))));
    }
}
