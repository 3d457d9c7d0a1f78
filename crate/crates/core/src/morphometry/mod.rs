//! Contour geometry, elliptic Fourier descriptors and PCA.

mod efd;
mod geometry;
mod iou;
mod pca;

pub use efd::{efd_fit, efd_normalize, efd_reconstruct, reconstruction_error, EfdCoeffs};
pub use geometry::{area_moments, polygon_area, shape_metrics, ShapeMetrics};
pub use iou::{mask_iou, patch_iou};
pub use pca::{pca_fit, pca_scores, PcaModel};

/// Default harmonic count for berry outlines.
pub const BERRY_HARMONICS: usize = 10;
/// Default harmonic count for cluster hull outlines.
pub const HULL_HARMONICS: usize = 20;

/// Smoothing applied to pixel-edge outlines before measuring them.
pub const SMOOTH_HALF_WINDOW: usize = 3;
pub const SMOOTH_PASSES: usize = 3;

/// Measurement outline of a mask: the largest component's pixel-edge
/// boundary after moving-average smoothing.
pub fn mask_outline(patch: &crate::mask_io::MaskPatch) -> crate::Result<crate::mask_io::Contour> {
    crate::mask_io::extract_patch_contour(patch)?.smoothed(SMOOTH_HALF_WINDOW, SMOOTH_PASSES)
}
