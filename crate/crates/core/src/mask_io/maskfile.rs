//! Mask file schema: one UTF-8 JSON object per image.
//!
//! ```json
//! {"image_id": "...", "width": 640, "height": 480,
//!  "masks": [{"id": 0, "bbox": [x, y, w, h], "area": 123,
//!             "rle": {"size": [h, w], "counts": [...]},
//!             "predicted_iou": 0.98, "stability_score": 0.97}]}
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::rle::RleMask;
use crate::error::{Error, Result};

/// One instance mask as emitted by the segmenter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    #[serde(deserialize_with = "opaque_id")]
    pub id: String,
    /// `(x, y, w, h)` in pixels.
    pub bbox: [f64; 4],
    #[serde(rename = "area")]
    pub area_px: u64,
    pub rle: RleMask,
    pub predicted_iou: f64,
    #[serde(rename = "stability_score")]
    pub stability: f64,
    /// Copied from the enclosing file; not part of the per-mask wire object.
    #[serde(skip)]
    pub image_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFile {
    #[serde(deserialize_with = "opaque_id")]
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub masks: Vec<MaskRecord>,
}

fn opaque_id<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    match Value::deserialize(d)? {
        Value::String(s) => Ok(s),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!(
            "identifier must be a string or number, got {other}"
        ))),
    }
}

impl MaskRecord {
    /// Checks the record against its own RLE and the image dimensions.
    pub fn validate(&self, index: usize, height: usize, width: usize) -> Result<()> {
        let fail = |message: String| Error::Validation {
            index,
            id: self.id.clone(),
            message,
        };
        if self.rle.height != height || self.rle.width != width {
            return Err(fail(format!(
                "rle size {}x{} does not match image {}x{}",
                self.rle.height, self.rle.width, height, width
            )));
        }
        self.rle.validate().map_err(|e| fail(e.to_string()))?;
        let decoded = self.rle.foreground_count();
        if decoded != self.area_px {
            return Err(fail(format!("area {} but RLE decodes to {decoded} pixels", self.area_px)));
        }
        let tight = self.rle.bbox().map(|(x, y, w, h)| [x as f64, y as f64, w as f64, h as f64]);
        let tight = tight.unwrap_or([0.0; 4]);
        if self.bbox.iter().zip(tight.iter()).any(|(a, b)| (a - b).abs() > 0.5) {
            return Err(fail(format!("bbox {:?} does not bound the foreground {:?}", self.bbox, tight)));
        }
        for (name, v) in [("predicted_iou", self.predicted_iou), ("stability_score", self.stability)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(fail(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Parses and validates mask-file JSON text; `origin` names the source in errors.
pub fn parse_mask_file(text: &str, origin: &Path) -> Result<MaskFile> {
    let parse_err = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let root: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| parse_err("top level must be an object".into()))?;
    let field = |k: &str| obj.get(k).ok_or_else(|| parse_err(format!("missing field `{k}`")));
    let image_id = match field("image_id")? {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(parse_err("`image_id` must be a string or number".into())),
    };
    let dim = |k: &str| -> Result<usize> {
        field(k)?
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| parse_err(format!("`{k}` must be a non-negative integer")))
    };
    let (width, height) = (dim("width")?, dim("height")?);
    let raw = field("masks")?
        .as_array()
        .ok_or_else(|| parse_err("`masks` must be an array".into()))?;
    let mut masks = Vec::with_capacity(raw.len());
    for (index, value) in raw.iter().enumerate() {
        let mut rec: MaskRecord = serde_json::from_value(value.clone()).map_err(|e| {
            let id = value.get("id").map(|v| v.to_string()).unwrap_or_else(|| "?".into());
            parse_err(format!("record {index} (id {id}): {e}"))
        })?;
        rec.image_id = image_id.clone();
        rec.validate(index, height, width)?;
        masks.push(rec);
    }
    Ok(MaskFile {
        image_id,
        width,
        height,
        masks,
    })
}

/// Loads a mask file, validating every record; records keep file order.
pub fn load_mask_file(path: &Path) -> Result<MaskFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_mask_file(&text, path)
}

pub fn to_json(file: &MaskFile) -> Result<String> {
    Ok(serde_json::to_string(file)?)
}

/// Writes through a temporary file and renames into place.
pub fn write_mask_file(path: &Path, file: &MaskFile) -> Result<()> {
    write_atomic(path, to_json(file)?.as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{
      "image_id": "img-1", "width": 3, "height": 4,
      "masks": [
        {"id": 0, "bbox": [0, 1, 1, 2], "area": 2,
         "rle": {"size": [4, 3], "counts": [1, 2, 9]},
         "predicted_iou": 0.99, "stability_score": 0.97},
        {"id": "b", "bbox": [1, 0, 2, 4], "area": 8,
         "rle": {"size": [4, 3], "counts": [4, 8]},
         "predicted_iou": 0.9, "stability_score": 0.95},
        {"id": 7, "bbox": [2, 3, 1, 1], "area": 1,
         "rle": {"size": [4, 3], "counts": [11, 1]},
         "predicted_iou": 0.5, "stability_score": 0.6}
      ]}"#;

    #[test]
    fn loads_hand_written_fixture() {
        let f = parse_mask_file(FIXTURE, Path::new("fixture.json")).unwrap();
        assert_eq!(f.masks.len(), 3);
        assert_eq!(f.masks[1].id, "b");
        assert_eq!(f.masks[2].id, "7");
        assert!(f.masks.iter().all(|m| m.image_id == "img-1"));
    }

    #[test]
    fn area_mismatch_names_the_record() {
        let bad = FIXTURE.replace(r#""area": 8"#, r#""area": 9"#);
        match parse_mask_file(&bad, Path::new("x.json")) {
            Err(Error::Validation { index, id, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(id, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_violation_names_the_record() {
        let bad = FIXTURE.replace(r#""predicted_iou": 0.5,"#, "");
        let err = parse_mask_file(&bad, Path::new("x.json")).unwrap_err();
        assert!(err.to_string().contains("record 2"), "{err}");
    }

    #[test]
    fn loose_bbox_is_rejected() {
        let bad = FIXTURE.replace("[0, 1, 1, 2]", "[0, 0, 1, 3]");
        assert!(matches!(
            parse_mask_file(&bad, Path::new("x.json")),
            Err(Error::Validation { index: 0, .. })
        ));
    }

    #[test]
    fn write_then_load() {
        let f = parse_mask_file(FIXTURE, Path::new("fixture.json")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_mask_file(&p, &f).unwrap();
        assert_eq!(load_mask_file(&p).unwrap(), f);
    }
}
