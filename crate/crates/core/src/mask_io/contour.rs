//! Closed contours and boundary tracing on binary rasters.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::{BitGrid, MaskPatch};
use crate::error::{Error, Result};
use crate::Point;

/// A simple closed polygon stored counter-clockwise, i.e. with positive
/// shoelace area in the coordinate frame of its points. The closing edge from
/// the last point back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Contour {
    points: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Contour {
    type Error = Error;

    fn try_from(points: Vec<Point>) -> Result<Self> {
        Contour::new(points)
    }
}

impl From<Contour> for Vec<Point> {
    fn from(c: Contour) -> Self {
        c.points
    }
}

pub(crate) fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

impl Contour {
    /// Builds a contour, dropping consecutive duplicates (including a repeated
    /// closing point) and reversing clockwise input.
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        points.dedup();
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 3 {
            return Err(Error::Degenerate(format!(
                "contour needs at least 3 distinct points, got {}",
                points.len()
            )));
        }
        if signed_area(&points) < 0.0 {
            points.reverse();
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shoelace area (non-negative for a stored contour).
    pub fn area(&self) -> f64 {
        signed_area(&self.points)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| dist(self.points[i], self.points[(i + 1) % n]))
            .sum()
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        Self::new(self.points.iter().map(|&p| f(p)).collect())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self.points.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
        }
    }

    /// Rotation about the origin by `angle` radians.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            points: self
                .points
                .iter()
                .map(|&(x, y)| (c * x - s * y, s * x + c * y))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|&(x, y)| (x * factor, y * factor)).collect(),
        }
    }

    /// Same polygon with the start vertex moved to index `k`.
    pub fn rotate_start(&self, k: usize) -> Self {
        let mut points = self.points.clone();
        let n = points.len();
        points.rotate_left(k % n);
        Self { points }
    }

    /// `n` points spaced uniformly by arc length, starting at the first vertex.
    pub fn resample(&self, n: usize) -> Result<Self> {
        let total = self.perimeter();
        if total <= 0.0 || n < 3 {
            return Err(Error::Degenerate("cannot resample contour".into()));
        }
        let m = self.points.len();
        let mut out = Vec::with_capacity(n);
        let mut seg = 0usize;
        let mut seg_start = 0.0;
        let mut seg_len = dist(self.points[0], self.points[1 % m]);
        for k in 0..n {
            let target = total * k as f64 / n as f64;
            while seg_start + seg_len < target && seg + 1 < m {
                seg_start += seg_len;
                seg += 1;
                seg_len = dist(self.points[seg], self.points[(seg + 1) % m]);
            }
            let (a, b) = (self.points[seg], self.points[(seg + 1) % m]);
            let t = if seg_len > 0.0 {
                ((target - seg_start) / seg_len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
        Self::new(out)
    }

    /// Circular moving average with `half_window` neighbours on each side.
    ///
    /// Pixel-edge contours are staircases whose length overstates the true
    /// boundary by up to 4/pi; a few smoothing passes recover a boundary whose
    /// perimeter is usable for circularity and perimeter traits.
    pub fn smoothed(&self, half_window: usize, passes: usize) -> Result<Self> {
        let n = self.points.len();
        if half_window == 0 || n < 2 * half_window + 1 {
            return Ok(self.clone());
        }
        let mut pts = self.points.clone();
        let w = (2 * half_window + 1) as f64;
        for _ in 0..passes {
            let mut next = Vec::with_capacity(n);
            let (mut sx, mut sy) = (0.0, 0.0);
            for j in 0..=2 * half_window {
                let p = pts[(n + j - half_window) % n];
                sx += p.0;
                sy += p.1;
            }
            for i in 0..n {
                next.push((sx / w, sy / w));
                let drop = pts[(n + i - half_window) % n];
                let add = pts[(i + half_window + 1) % n];
                sx += add.0 - drop.0;
                sy += add.1 - drop.1;
            }
            pts = next;
        }
        Self::new(pts)
    }

    /// Vertices of the convex hull, counter-clockwise, collinear points dropped.
    pub fn convex_hull(&self) -> Vec<Point> {
        convex_hull(&self.points)
    }
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Andrew's monotone chain; output is counter-clockwise (positive shoelace).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Labels 4-connected components and returns a grid holding only the largest
/// (ties go to the component met first in row-major order).
pub fn largest_component(grid: &BitGrid) -> Option<BitGrid> {
    let (h, w) = (grid.height(), grid.width());
    let mut label = vec![0u32; h * w];
    let mut next = 0u32;
    let mut best = (0usize, 0u32);
    let mut queue = VecDeque::new();
    for start in 0..h * w {
        if !grid.as_slice()[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if grid.as_slice()[j] && label[j] == 0 {
                    label[j] = next;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
        }
        if size > best.0 {
            best = (size, next);
        }
    }
    if best.0 == 0 {
        return None;
    }
    let keep = best.1;
    Some(BitGrid::from_fn(h, w, |r, c| label[r * w + c] == keep))
}

/// Outer boundary of the largest 4-connected foreground component, traced
/// along pixel edges. Vertices are pixel corners: pixel `(row, col)` is the
/// unit square `[col, col+1] x [row, row+1]`, so the polygon area equals the
/// pixel count of the component minus any holes.
pub fn extract_contour(grid: &BitGrid) -> Result<Contour> {
    let comp = largest_component(grid).ok_or(Error::EmptyMask)?;
    trace_outer(&comp)
}

/// [`extract_contour`] on a patch, with vertices in full-image coordinates.
pub fn extract_patch_contour(patch: &MaskPatch) -> Result<Contour> {
    let c = extract_contour(&patch.grid)?;
    Ok(c.translated(patch.x0 as f64, patch.y0 as f64))
}

// Edge directions: 0 = +x, 1 = +y, 2 = -x, 3 = -y.
const STEP: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

fn trace_outer(comp: &BitGrid) -> Result<Contour> {
    let (h, w) = (comp.height(), comp.width());
    let vw = w + 1;
    let vid = |x: usize, y: usize| y * vw + x;
    // Up to two outgoing boundary edges per corner vertex (saddles have two).
    let mut out: Vec<[u8; 2]> = vec![[u8::MAX; 2]; (h + 1) * vw];
    let mut used: Vec<[bool; 2]> = vec![[false; 2]; (h + 1) * vw];
    let mut add = |x: usize, y: usize, d: u8| {
        let slot = &mut out[vid(x, y)];
        if slot[0] == u8::MAX {
            slot[0] = d;
        } else {
            slot[1] = d;
        }
    };
    for (r, c) in comp.foreground() {
        let (ri, ci) = (r as isize, c as isize);
        if !comp.get_signed(ri - 1, ci) {
            add(c, r, 0);
        }
        if !comp.get_signed(ri, ci + 1) {
            add(c + 1, r, 1);
        }
        if !comp.get_signed(ri + 1, ci) {
            add(c + 1, r + 1, 2);
        }
        if !comp.get_signed(ri, ci - 1) {
            add(c, r + 1, 3);
        }
    }

    let mut best: Option<(f64, Vec<Point>)> = None;
    for start in 0..out.len() {
        for s in 0..2 {
            if out[start][s] == u8::MAX || used[start][s] {
                continue;
            }
            let mut loop_pts = Vec::new();
            let (mut v, mut slot) = (start, s);
            loop {
                used[v][slot] = true;
                let d = out[v][slot];
                let (x, y) = ((v % vw) as i64, (v / vw) as i64);
                loop_pts.push((x as f64, y as f64));
                let (nx, ny) = (x + STEP[d as usize].0, y + STEP[d as usize].1);
                v = vid(nx as usize, ny as usize);
                // At a saddle keep hugging the current pixel: turn to d+1.
                let preferred = (d + 1) % 4;
                slot = if out[v][1] == u8::MAX || out[v][0] == preferred {
                    0
                } else if out[v][1] == preferred || used[v][0] {
                    1
                } else {
                    0
                };
                if used[v][slot] {
                    break;
                }
            }
            let a = signed_area(&loop_pts);
            if best.as_ref().map_or(true, |(ba, _)| a > *ba) {
                best = Some((a, loop_pts));
            }
        }
    }
    let (_, pts) = best.ok_or(Error::EmptyMask)?;
    Contour::new(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(radius: f64, size: usize) -> BitGrid {
        let c = size as f64 / 2.0;
        BitGrid::from_fn(size, size, |r, col| {
            let (dx, dy) = (col as f64 + 0.5 - c, r as f64 + 0.5 - c);
            dx * dx + dy * dy <= radius * radius
        })
    }

    #[test]
    fn single_pixel_is_unit_square() {
        let mut g = BitGrid::new(3, 3);
        g.set(0, 0, true);
        let c = extract_contour(&g).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.area(), 1.0);
    }

    #[test]
    fn filled_square() {
        let g = BitGrid::from_fn(12, 12, |r, c| (1..11).contains(&r) && (1..11).contains(&c));
        let c = extract_contour(&g).unwrap();
        assert_eq!(c.area(), 100.0);
        assert_eq!(c.perimeter(), 40.0);
    }

    #[test]
    fn disk_area_matches_pixel_count() {
        let g = disk(30.0, 70);
        let c = extract_contour(&g).unwrap();
        let expected = std::f64::consts::PI * 900.0;
        assert!((c.area() - expected).abs() / expected < 0.02);
        assert_eq!(c.area() as usize, g.count());
    }

    #[test]
    fn keeps_largest_component_and_ignores_holes() {
        let mut g = BitGrid::from_fn(20, 20, |r, c| (2..12).contains(&r) && (2..12).contains(&c));
        g.set(5, 5, false);
        g.set(16, 16, true);
        g.set(16, 17, true);
        let c = extract_contour(&g).unwrap();
        assert_eq!(c.area(), 100.0);
    }

    #[test]
    fn diagonal_touching_pixels_are_separate() {
        // Two 2x2 blocks touching at a corner; the larger one wins.
        let g = BitGrid::from_fn(6, 6, |r, c| ((0..2).contains(&r) && (0..2).contains(&c)) || ((2..5).contains(&r) && (2..5).contains(&c)));
        let c = extract_contour(&g).unwrap();
        assert_eq!(c.area(), 9.0);
    }

    #[test]
    fn ring_with_saddle_traces_outer_boundary() {
        // A 4-connected U-shape whose tips touch diagonally.
        let rows = ["#####", "#...#", "#..##", "#.#..", "###.."];
        let g = BitGrid::from_fn(5, 5, |r, c| rows[r].as_bytes()[c] == b'#');
        let c = extract_contour(&g).unwrap();
        assert!(c.area() >= g.count() as f64);
        for &(x, y) in c.points() {
            assert!((0.0..=5.0).contains(&x) && (0.0..=5.0).contains(&y));
        }
    }

    #[test]
    fn empty_grid_errors() {
        assert!(matches!(extract_contour(&BitGrid::new(4, 4)), Err(Error::EmptyMask)));
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let c = Contour::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(c.area() > 0.0);
        assert!(Contour::new(vec![(0.0, 0.0), (1.0, 1.0), (0.0, 0.0)]).is_err());
    }

    #[test]
    fn smoothing_recovers_circle_perimeter() {
        let g = disk(40.0, 100);
        let raw = extract_contour(&g).unwrap();
        let smooth = raw.smoothed(3, 3).unwrap();
        let circ = 4.0 * std::f64::consts::PI * smooth.area() / smooth.perimeter().powi(2);
        assert!(circ > 0.95, "circularity {circ}");
        assert!(circ <= 1.0);
    }
}
