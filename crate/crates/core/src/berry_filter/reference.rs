use serde::{Deserialize, Serialize};

use super::Candidate;
use crate::error::{Error, Result};

/// Expected reference circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSpec {
    pub diameter_mm: f64,
    pub min_diameter_px: f64,
    pub max_diameter_px: f64,
    pub min_circularity: f64,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            diameter_mm: 80.0,
            min_diameter_px: 100.0,
            max_diameter_px: 400.0,
            min_circularity: 0.9,
        }
    }
}

impl ReferenceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.diameter_mm > 0.0) {
            return Err(Error::Config("reference diameter_mm must be positive".into()));
        }
        if !(self.min_diameter_px > 0.0 && self.min_diameter_px <= self.max_diameter_px) {
            return Err(Error::Config("reference pixel range must satisfy 0 < min <= max".into()));
        }
        if !(self.min_circularity > 0.0 && self.min_circularity <= 1.0) {
            return Err(Error::Config("reference min_circularity must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCalibration {
    pub mm_per_px: f64,
    pub reference_mask_id: String,
    pub circularity: f64,
    /// Diameter of the equal-area disk.
    pub diameter_px: f64,
}

/// Picks the single round mask whose equal-area diameter lies in the expected
/// pixel range.
pub fn detect_reference(cands: &[&Candidate], spec: &ReferenceSpec) -> Result<ScaleCalibration> {
    spec.validate()?;
    let found: Vec<ScaleCalibration> = cands
        .iter()
        .filter_map(|c| {
            let m = c.metrics?;
            let diameter_px = 2.0 * (c.area_px() as f64 / std::f64::consts::PI).sqrt();
            let in_range = (spec.min_diameter_px..=spec.max_diameter_px).contains(&diameter_px);
            (m.circularity >= spec.min_circularity && in_range).then(|| ScaleCalibration {
                mm_per_px: spec.diameter_mm / diameter_px,
                reference_mask_id: c.id.clone(),
                circularity: m.circularity.min(1.0),
                diameter_px,
            })
        })
        .collect();
    match found.len() {
        1 => Ok(found.into_iter().next().unwrap()),
        0 => Err(Error::Calibration(format!(
            "no round mask with diameter in [{}, {}] px",
            spec.min_diameter_px, spec.max_diameter_px
        ))),
        _ => Err(Error::Calibration(format!(
            "{} reference candidates: {}",
            found.len(),
            found
                .iter()
                .map(|f| format!("{} ({:.1} px)", f.reference_mask_id, f.diameter_px))
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}
