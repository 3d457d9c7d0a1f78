//! Reduction of raw segmenter masks to single-berry masks, and detection of
//! the scale reference.
//!
//! Stages run in a fixed order: multi-berry containment, metric bounds, then
//! rounds of EFD + PCA shape-outlier rejection.

mod pipeline;
mod reference;
mod stages;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pipeline::{run_filter_pipeline, BerryMask, FilterOutcome};
pub use reference::{detect_reference, ReferenceSpec, ScaleCalibration};
pub use stages::{
    cluster_radius, decode_masks, efd_pca_outlier_filter, metric_filter, remove_multi_berry, Candidate,
    OutlierResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Share of a smaller mask's pixels that must lie inside a larger mask
    /// for the larger one to count as covering it.
    pub containment_threshold: f64,
    pub min_area_px: f64,
    pub max_area_px: f64,
    pub max_aspect: f64,
    /// In multiples of the cluster radius.
    pub max_centroid_distance: f64,
    /// Upper bound on perimeter / area (1/px); unset disables the check.
    pub max_perimeter_ratio: Option<f64>,
    /// Upper bound on perimeter / area as a multiple of its median over the
    /// masks passing the other metric checks; unset disables the check.
    pub max_relative_perimeter: Option<f64>,
    pub pca_rounds: usize,
    pub pca_sd: f64,
    pub pca_components: usize,
    pub harmonics: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            containment_threshold: 0.8,
            min_area_px: 40.0,
            max_area_px: 3000.0,
            max_aspect: 2.5,
            max_centroid_distance: 3.0,
            max_perimeter_ratio: None,
            max_relative_perimeter: Some(1.7),
            pca_rounds: 5,
            pca_sd: 4.5,
            pca_components: 10,
            harmonics: crate::morphometry::BERRY_HARMONICS,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.containment_threshold > 0.0 && self.containment_threshold <= 1.0) {
            return bad(format!("containment_threshold must be in (0, 1], got {}", self.containment_threshold));
        }
        if !(self.min_area_px >= 0.0 && self.min_area_px < self.max_area_px) {
            return bad(format!(
                "need 0 <= min_area_px < max_area_px, got {} and {}",
                self.min_area_px, self.max_area_px
            ));
        }
        if !(self.max_aspect >= 1.0) {
            return bad(format!("max_aspect must be at least 1, got {}", self.max_aspect));
        }
        if !(self.max_centroid_distance > 0.0) {
            return bad("max_centroid_distance must be positive".into());
        }
        if let Some(r) = self.max_perimeter_ratio {
            if !(r > 0.0) {
                return bad("max_perimeter_ratio must be positive".into());
            }
        }
        if let Some(r) = self.max_relative_perimeter {
            if !(r >= 1.0) {
                return bad(format!("max_relative_perimeter must be at least 1, got {r}"));
            }
        }
        if self.pca_rounds == 0 {
            return bad("pca_rounds must be at least 1".into());
        }
        if !(self.pca_sd > 0.0) {
            return bad("pca_sd must be positive".into());
        }
        if self.pca_components == 0 || self.harmonics == 0 {
            return bad("pca_components and harmonics must be at least 1".into());
        }
        Ok(())
    }

    /// Smallest population the outlier rounds will run on.
    pub fn min_outlier_population(&self) -> usize {
        (self.pca_components + 2).max(12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    MultiBerry,
    Metric,
    EfdPca,
    Kept,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::MultiBerry => "multi_berry",
            Stage::Metric => "metric",
            Stage::EfdPca => "efd_pca",
            Stage::Kept => "kept",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disposition {
    pub id: String,
    pub stage: Stage,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub removed_multi: usize,
    pub removed_metric: usize,
    pub removed_efd_pca: usize,
    pub kept: usize,
    /// One entry per input mask, in input order.
    pub dispositions: Vec<Disposition>,
    pub warnings: Vec<String>,
}

impl FilterReport {
    /// Whether the stage counts partition the input.
    pub fn is_consistent(&self) -> bool {
        self.removed_multi + self.removed_metric + self.removed_efd_pca + self.kept == self.input
            && self.dispositions.len() == self.input
    }
}
