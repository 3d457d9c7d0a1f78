//! Per-image metadata manifest (CSV).
//!
//! Columns: `image,genotype,block,vine,cluster,angle` plus optional
//! `true_count`, `roi_x,roi_y,roi_w,roi_h` and `raster`. `image` matches the
//! mask file's `image_id`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask_io::MaskFile;
use crate::stats::TraitKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image: String,
    pub genotype: String,
    pub block: String,
    pub vine: String,
    pub cluster: String,
    pub angle: u32,
    #[serde(default)]
    pub true_count: Option<f64>,
    #[serde(default)]
    pub roi_x: Option<f64>,
    #[serde(default)]
    pub roi_y: Option<f64>,
    #[serde(default)]
    pub roi_w: Option<f64>,
    #[serde(default)]
    pub roi_h: Option<f64>,
    /// Image raster for colour sampling.
    #[serde(default)]
    pub raster: Option<PathBuf>,
}

impl ImageMeta {
    /// Placeholder for images missing from the manifest: each image is its
    /// own genotype and cluster.
    pub fn standalone(image: &str) -> Self {
        Self {
            image: image.to_string(),
            genotype: image.to_string(),
            block: String::new(),
            vine: String::new(),
            cluster: image.to_string(),
            angle: 0,
            true_count: None,
            roi_x: None,
            roi_y: None,
            roi_w: None,
            roi_h: None,
            raster: None,
        }
    }

    pub fn key(&self) -> TraitKey {
        TraitKey {
            genotype: self.genotype.clone(),
            block: self.block.clone(),
            vine: self.vine.clone(),
            cluster: self.cluster.clone(),
            angle: self.angle,
        }
    }

    /// `(x, y, w, h)` when all four ROI columns are set.
    pub fn roi(&self) -> Option<[f64; 4]> {
        Some([self.roi_x?, self.roi_y?, self.roi_w?, self.roi_h?])
    }
}

/// Metadata keyed by image id.
pub fn load_metadata(path: &Path) -> Result<BTreeMap<String, ImageMeta>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = BTreeMap::new();
    let mut keys = BTreeMap::new();
    for row in rdr.deserialize() {
        let mut m: ImageMeta = row?;
        if let Some(r) = m.raster.as_mut() {
            if r.is_relative() {
                *r = base.join(&*r);
            }
        }
        if let Some(other) = keys.insert(m.key(), m.image.clone()) {
            return Err(Error::Config(format!("images {other} and {} share the key {:?}", m.image, m.key())));
        }
        if out.insert(m.image.clone(), m).is_some() {
            return Err(Error::Config(format!("image listed twice in {}", path.display())));
        }
    }
    Ok(out)
}

/// Drops masks whose bounding-box centre falls outside the ROI.
pub fn apply_roi(file: &mut MaskFile, roi: [f64; 4]) {
    let [x, y, w, h] = roi;
    file.masks.retain(|m| {
        let cx = m.bbox[0] + m.bbox[2] / 2.0;
        let cy = m.bbox[1] + m.bbox[3] / 2.0;
        cx >= x && cx <= x + w && cy >= y && cy <= y + h
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_rows_with_optional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("meta.csv");
        std::fs::write(
            &p,
            "image,genotype,block,vine,cluster,angle,true_count,roi_x,roi_y,roi_w,roi_h,raster\n\
             a,G1,B1,V1,C1,0,80,,,,,\n\
             b,G1,B1,V1,C1,90,80,10,10,100,100,b.png\n",
        )
        .unwrap();
        let m = load_metadata(&p).unwrap();
        assert_eq!(m["a"].true_count, Some(80.0));
        assert_eq!(m["a"].roi(), None);
        assert_eq!(m["b"].roi(), Some([10.0, 10.0, 100.0, 100.0]));
        assert_eq!(m["b"].raster.as_deref(), Some(dir.path().join("b.png").as_path()));
        assert_eq!(m["b"].key().angle, 90);
    }

    #[test]
    fn duplicate_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("meta.csv");
        std::fs::write(&p, "image,genotype,block,vine,cluster,angle\na,G,B,V,C,0\nb,G,B,V,C,0\n").unwrap();
        assert!(load_metadata(&p).is_err());
    }
}
