use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask_io::Contour;
use crate::Point;

/// Size and shape traits of a closed outline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMetrics {
    pub area: f64,
    pub perimeter: f64,
    /// Extent along the major principal axis.
    pub length: f64,
    /// Extent along the minor principal axis.
    pub width: f64,
    pub aspect_ratio: f64,
    pub centroid: Point,
    /// `4 pi A / P^2`, 1 for a circle.
    pub circularity: f64,
}

/// Shoelace area of a counter-clockwise polygon.
pub fn polygon_area(c: &Contour) -> Result<f64> {
    if c.len() < 3 {
        return Err(Error::Degenerate("polygon needs at least 3 points".into()));
    }
    Ok(c.area())
}

/// Area, centroid and central second moments `(mu_xx, mu_yy, mu_xy)` of the
/// polygon region, per unit area.
pub fn area_moments(points: &[Point]) -> (f64, Point, (f64, f64, f64)) {
    let n = points.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % n];
        let cr = x0 * y1 - x1 * y0;
        a += cr;
        cx += (x0 + x1) * cr;
        cy += (y0 + y1) * cr;
        ixx += (x0 * x0 + x0 * x1 + x1 * x1) * cr;
        iyy += (y0 * y0 + y0 * y1 + y1 * y1) * cr;
        ixy += (x0 * y1 + 2.0 * x0 * y0 + 2.0 * x1 * y1 + x1 * y0) * cr;
    }
    a /= 2.0;
    if a == 0.0 {
        return (0.0, (0.0, 0.0), (0.0, 0.0, 0.0));
    }
    let (cx, cy) = (cx / (6.0 * a), cy / (6.0 * a));
    let mxx = ixx / (12.0 * a) - cx * cx;
    let myy = iyy / (12.0 * a) - cy * cy;
    let mxy = ixy / (24.0 * a) - cx * cy;
    (a, (cx, cy), (mxx, myy, mxy))
}

/// Principal-axis metrics of an outline, scaled by `scale` (mm per pixel).
///
/// Length and width are the extents of the vertices along the major and minor
/// axes of the region's second-moment ellipse.
pub fn shape_metrics(c: &Contour, scale: f64) -> Result<ShapeMetrics> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let pts = c.points();
    let (area, centroid, (mxx, myy, mxy)) = area_moments(pts);
    if !(area > 0.0) {
        return Err(Error::Degenerate("zero-area polygon".into()));
    }
    let theta = 0.5 * (2.0 * mxy).atan2(mxx - myy);
    let (s, co) = theta.sin_cos();
    let (mut u_lo, mut u_hi, mut v_lo, mut v_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        let (dx, dy) = (x - centroid.0, y - centroid.1);
        let u = dx * co + dy * s;
        let v = -dx * s + dy * co;
        u_lo = u_lo.min(u);
        u_hi = u_hi.max(u);
        v_lo = v_lo.min(v);
        v_hi = v_hi.max(v);
    }
    let (mut length, mut width) = (u_hi - u_lo, v_hi - v_lo);
    if width > length {
        std::mem::swap(&mut length, &mut width);
    }
    let perimeter = c.perimeter();
    Ok(ShapeMetrics {
        area: area * scale * scale,
        perimeter: perimeter * scale,
        length: length * scale,
        width: width * scale,
        aspect_ratio: if width > 0.0 { length / width } else { f64::INFINITY },
        centroid: (centroid.0 * scale, centroid.1 * scale),
        circularity: 4.0 * std::f64::consts::PI * area / (perimeter * perimeter),
    })
}
