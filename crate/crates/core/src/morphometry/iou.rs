use crate::error::{Error, Result};
use crate::mask_io::{BitGrid, MaskPatch};

/// Intersection over union of two same-sized masks.
pub fn mask_iou(a: &BitGrid, b: &BitGrid) -> Result<f64> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(inter as f64 / union as f64)
}

/// [`mask_iou`] over bounding-box patches of the same image.
pub fn patch_iou(a: &MaskPatch, b: &MaskPatch) -> Result<f64> {
    if a.image_height != b.image_height || a.image_width != b.image_width {
        return Err(Error::DimensionMismatch("patches come from different images".into()));
    }
    let inter = a.intersection(b);
    let union = a.count() + b.count() - inter;
    if union == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(inter as f64 / union as f64)
}
