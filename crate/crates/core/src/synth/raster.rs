//! Shape rasterisers producing bounding-box patches of a `height x width` image.

use crate::mask_io::{BitGrid, MaskPatch};
use crate::Point;

/// Rasterises `inside(x, y)` (evaluated at pixel centres) over the box
/// `[x_lo, x_hi] x [y_lo, y_hi]`, clipped to the image and trimmed to the
/// tight foreground box.
pub fn raster_fn(
    height: usize,
    width: usize,
    bounds: (f64, f64, f64, f64),
    inside: impl Fn(f64, f64) -> bool,
) -> Option<MaskPatch> {
    let (x_lo, x_hi, y_lo, y_hi) = bounds;
    let c0 = x_lo.floor().max(0.0) as usize;
    let r0 = y_lo.floor().max(0.0) as usize;
    let c1 = (x_hi.ceil().max(0.0) as usize).min(width);
    let r1 = (y_hi.ceil().max(0.0) as usize).min(height);
    if c0 >= c1 || r0 >= r1 {
        return None;
    }
    let grid = BitGrid::from_fn(r1 - r0, c1 - c0, |r, c| {
        inside((c + c0) as f64 + 0.5, (r + r0) as f64 + 0.5)
    });
    let mut patch = MaskPatch::from_full(&grid)?;
    patch.x0 += c0;
    patch.y0 += r0;
    patch.image_height = height;
    patch.image_width = width;
    Some(patch)
}

pub fn ellipse(
    height: usize,
    width: usize,
    center: Point,
    semi_major: f64,
    semi_minor: f64,
    angle: f64,
) -> Option<MaskPatch> {
    let (s, c) = angle.sin_cos();
    let r = semi_major.max(semi_minor) + 1.0;
    raster_fn(
        height,
        width,
        (center.0 - r, center.0 + r, center.1 - r, center.1 + r),
        |x, y| {
            let (dx, dy) = (x - center.0, y - center.1);
            let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
            (u / semi_major).powi(2) + (v / semi_minor).powi(2) <= 1.0
        },
    )
}

pub fn disk(height: usize, width: usize, center: Point, radius: f64) -> Option<MaskPatch> {
    ellipse(height, width, center, radius, radius, 0.0)
}

fn seg_dist2(p: Point, a: Point, b: Point) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * vx, a.1 + t * vy);
    (p.0 - qx).powi(2) + (p.1 - qy).powi(2)
}

/// Thick open polyline (stroke of half-width `half_width`).
pub fn polyline(height: usize, width: usize, pts: &[Point], half_width: f64) -> Option<MaskPatch> {
    let pad = half_width + 1.0;
    let x_lo = pts.iter().map(|p| p.0).fold(f64::MAX, f64::min) - pad;
    let x_hi = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max) + pad;
    let y_lo = pts.iter().map(|p| p.1).fold(f64::MAX, f64::min) - pad;
    let y_hi = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max) + pad;
    let hw2 = half_width * half_width;
    raster_fn(height, width, (x_lo, x_hi, y_lo, y_hi), |x, y| {
        pts.windows(2).any(|w| seg_dist2((x, y), w[0], w[1]) <= hw2)
    })
}

/// Rotated rectangle with half extents `(half_len, half_wid)`.
pub fn rectangle(
    height: usize,
    width: usize,
    center: Point,
    half_len: f64,
    half_wid: f64,
    angle: f64,
) -> Option<MaskPatch> {
    let (s, c) = angle.sin_cos();
    let r = half_len.hypot(half_wid) + 1.0;
    raster_fn(
        height,
        width,
        (center.0 - r, center.0 + r, center.1 - r, center.1 + r),
        |x, y| {
            let (dx, dy) = (x - center.0, y - center.1);
            let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
            u.abs() <= half_len && v.abs() <= half_wid
        },
    )
}

/// Pixel-wise union of patches from the same image.
pub fn union(parts: &[&MaskPatch]) -> Option<MaskPatch> {
    let first = parts.first()?;
    let x0 = parts.iter().map(|p| p.x0).min()?;
    let y0 = parts.iter().map(|p| p.y0).min()?;
    let x1 = parts.iter().map(|p| p.x0 + p.grid.width()).max()?;
    let y1 = parts.iter().map(|p| p.y0 + p.grid.height()).max()?;
    let grid = BitGrid::from_fn(y1 - y0, x1 - x0, |r, c| {
        parts.iter().any(|p| p.contains(r + y0, c + x0))
    });
    let mut patch = MaskPatch::from_full(&grid)?;
    patch.x0 += x0;
    patch.y0 += y0;
    patch.image_height = first.image_height;
    patch.image_width = first.image_width;
    Some(patch)
}

/// `a` with every pixel of `b` cleared.
pub fn subtract(a: &MaskPatch, b: &MaskPatch) -> Option<MaskPatch> {
    let grid = BitGrid::from_fn(a.grid.height(), a.grid.width(), |r, c| {
        a.grid.get(r, c) && !b.contains(r + a.y0, c + a.x0)
    });
    let mut patch = MaskPatch::from_full(&grid)?;
    patch.x0 += a.x0;
    patch.y0 += a.y0;
    patch.image_height = a.image_height;
    patch.image_width = a.image_width;
    Some(patch)
}
