use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::mask_io::Contour;
use crate::morphometry::{shape_metrics, ShapeMetrics};
use crate::Point;

/// Concave outline of a point set together with the concavity that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullPolygon {
    pub polygon: Contour,
    pub concavity: f64,
}

impl HullPolygon {
    pub fn area(&self) -> f64 {
        self.polygon.area()
    }

    pub fn perimeter(&self) -> f64 {
        self.polygon.perimeter()
    }
}

type Edge = (usize, usize);

fn key(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Concave hull by Delaunay erosion.
///
/// Border triangles are removed longest border edge first while that edge is
/// longer than `min + c * (max - min)` over all Delaunay edge lengths. A
/// triangle is removable only when it has one border edge and its opposite
/// vertex is not yet on the border, so the outline stays simple and keeps
/// every input point. The erosion order does not depend on `c`, hence hulls
/// are nested and the area is non-decreasing in `c`; `c = 1` gives the convex
/// hull.
pub fn concave_hull(points: &[Point], concavity: f64) -> Result<HullPolygon> {
    if !(concavity > 0.0 && concavity <= 1.0) {
        return Err(Error::InvalidArgument(format!("concavity must be in (0, 1], got {concavity}")));
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData("concave hull needs at least 3 points".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::InvalidArgument(format!("non-finite point {p:?}")));
    }
    let input: Vec<Point2<f64>> = points.iter().map(|&(x, y)| Point2::new(x, y)).collect();
    let tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::bulk_load_stable(input)
        .map_err(|e| Error::InvalidArgument(format!("triangulation failed: {e:?}")))?;
    let pos: Vec<Point> = tri.vertices().map(|v| (v.position().x, v.position().y)).collect();
    let tris: Vec<[usize; 3]> = tri
        .inner_faces()
        .map(|f| {
            let [a, b, c] = f.vertices();
            [a.fix().index(), b.fix().index(), c.fix().index()]
        })
        .collect();
    if tris.is_empty() {
        return Err(Error::Degenerate("points are collinear".into()));
    }

    let len = |e: Edge| {
        let (p, q) = (pos[e.0], pos[e.1]);
        (p.0 - q.0).hypot(p.1 - q.1)
    };
    let mut edge_tris: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (t, v) in tris.iter().enumerate() {
        for k in 0..3 {
            edge_tris.entry(key(v[k], v[(k + 1) % 3])).or_default().push(t);
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &e in edge_tris.keys() {
        let l = len(e);
        lo = lo.min(l);
        hi = hi.max(l);
    }
    let threshold = if concavity >= 1.0 { hi } else { lo + concavity * (hi - lo) };

    let mut alive = vec![true; tris.len()];
    let mut on_border = vec![false; pos.len()];
    let is_border = |e: Edge, alive: &[bool], edge_tris: &HashMap<Edge, Vec<usize>>| {
        edge_tris[&e].iter().filter(|&&t| alive[t]).count() == 1
    };
    // Heap entries: (length bits, reversed edge, triangle). Lengths are
    // non-negative so their bit patterns order like the values.
    let mut heap: BinaryHeap<(u64, Reverse<Edge>, usize)> = BinaryHeap::new();
    for (&e, ts) in &edge_tris {
        if ts.len() == 1 {
            on_border[e.0] = true;
            on_border[e.1] = true;
            heap.push((len(e).to_bits(), Reverse(e), ts[0]));
        }
    }
    while let Some((bits, Reverse(e), t)) = heap.pop() {
        if f64::from_bits(bits) <= threshold {
            break;
        }
        if !alive[t] || !is_border(e, &alive, &edge_tris) {
            continue;
        }
        let v = tris[t];
        let border_edges = (0..3)
            .filter(|&k| is_border(key(v[k], v[(k + 1) % 3]), &alive, &edge_tris))
            .count();
        let apex = *v.iter().find(|&&x| x != e.0 && x != e.1).unwrap();
        if border_edges != 1 || on_border[apex] {
            continue;
        }
        alive[t] = false;
        on_border[apex] = true;
        for k in 0..3 {
            let f = key(v[k], v[(k + 1) % 3]);
            if f == e {
                continue;
            }
            if let Some(&n) = edge_tris[&f].iter().find(|&&n| alive[n]) {
                heap.push((len(f).to_bits(), Reverse(f), n));
            }
        }
    }

    // Border edges of surviving triangles, oriented counter-clockwise.
    let mut next: HashMap<usize, usize> = HashMap::new();
    for (t, v) in tris.iter().enumerate() {
        if !alive[t] {
            continue;
        }
        for k in 0..3 {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            if is_border(key(a, b), &alive, &edge_tris) {
                next.insert(a, b);
            }
        }
    }
    let start = *next.keys().min().unwrap();
    let mut ring = vec![start];
    let mut cur = next[&start];
    while cur != start {
        ring.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| Error::Degenerate("hull boundary is not closed".into()))?;
        if ring.len() > next.len() {
            return Err(Error::Degenerate("hull boundary is not a single ring".into()));
        }
    }
    let polygon = Contour::new(ring.into_iter().map(|i| pos[i]).collect())?;
    Ok(HullPolygon { polygon, concavity })
}

/// Summed berry area over hull area.
pub fn compactness(berry_areas: &[f64], hull: &HullPolygon) -> Result<f64> {
    let a = hull.area();
    if !(a > 0.0) {
        return Err(Error::Degenerate("hull has zero area".into()));
    }
    Ok(berry_areas.iter().sum::<f64>() / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullMetrics {
    pub length: f64,
    pub width: f64,
    pub perimeter: f64,
    pub aspect: f64,
    pub area: f64,
}

/// Principal-axis extents, perimeter and area of the hull scaled by `scale`
/// (length units per pixel).
pub fn hull_metrics(hull: &HullPolygon, scale: f64) -> Result<HullMetrics> {
    let m: ShapeMetrics = shape_metrics(&hull.polygon, scale)?;
    Ok(HullMetrics {
        length: m.length,
        width: m.width,
        perimeter: m.perimeter,
        aspect: m.aspect_ratio,
        area: m.area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask_io::{convex_hull, signed_area};
    use proptest::prelude::*;

    /// Point-in-polygon by winding number; points on an edge count as inside.
    fn covers(poly: &[Point], p: Point) -> bool {
        let n = poly.len();
        let mut wn = 0i32;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
            let on_seg = cross.abs() <= 1e-9 * (1.0 + (b.0 - a.0).hypot(b.1 - a.1))
                && (p.0 - a.0) * (p.0 - b.0) <= 1e-12
                && (p.1 - a.1) * (p.1 - b.1) <= 1e-12;
            if on_seg {
                return true;
            }
            if a.1 <= p.1 {
                if b.1 > p.1 && cross > 0.0 {
                    wn += 1;
                }
            } else if b.1 <= p.1 && cross < 0.0 {
                wn -= 1;
            }
        }
        wn != 0
    }

    fn is_simple(poly: &[Point]) -> bool {
        let n = poly.len();
        let orient = |a: Point, b: Point, c: Point| (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b, c, d) = (poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]);
                let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
                if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn three_points_give_their_triangle() {
        let pts = [(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)];
        for c in [0.01, 0.5, 1.0] {
            let h = concave_hull(&pts, c).unwrap();
            assert_eq!(h.polygon.len(), 3);
            assert!((h.area() - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_at_one_is_the_bounding_square() {
        let pts: Vec<Point> = (0..100).map(|i| ((i % 10) as f64, (i / 10) as f64)).collect();
        let h = concave_hull(&pts, 1.0).unwrap();
        assert!((h.area() - 81.0).abs() < 1e-9);
    }

    #[test]
    fn l_shape_is_tighter_at_low_concavity() {
        let mut pts = Vec::new();
        for i in 0..=20 {
            for j in 0..=20 {
                if i <= 5 || j <= 5 {
                    pts.push((i as f64, j as f64));
                }
            }
        }
        let tight = concave_hull(&pts, 0.3).unwrap().area();
        let convex = concave_hull(&pts, 1.0).unwrap().area();
        assert!(tight < convex);
        assert!(tight >= 20.0 * 5.0 + 15.0 * 5.0 - 1e-9, "{tight}");
    }

    #[test]
    fn errors() {
        assert!(concave_hull(&[(0.0, 0.0), (1.0, 1.0)], 0.5).is_err());
        assert!(concave_hull(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], 0.5).is_err());
        assert!(concave_hull(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], 0.0).is_err());
        assert!(concave_hull(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], 1.5).is_err());
    }

    #[test]
    fn compactness_and_metrics() {
        let sq = HullPolygon {
            polygon: Contour::new(vec![(0.0, 0.0), (5.0, 0.0), (5.0, 2.0), (0.0, 2.0)]).unwrap(),
            concavity: 1.0,
        };
        assert!((compactness(&[1.0, 1.0], &sq).unwrap() - 0.2).abs() < 1e-12);
        let rect = HullPolygon {
            polygon: Contour::new(vec![(0.0, 0.0), (100.0, 0.0), (100.0, 40.0), (0.0, 40.0)]).unwrap(),
            concavity: 1.0,
        };
        let m = hull_metrics(&rect, 0.1).unwrap();
        assert!((m.length - 10.0).abs() < 1e-9 && (m.width - 4.0).abs() < 1e-9);
        assert!((m.aspect - 2.5).abs() < 1e-9);
        let rot = HullPolygon {
            polygon: rect.polygon.rotated(0.7),
            concavity: 1.0,
        };
        let r = hull_metrics(&rot, 0.1).unwrap();
        assert!((r.length - m.length).abs() < 1e-6 && (r.width - m.width).abs() < 1e-6);
        assert!((r.perimeter - m.perimeter).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hull_invariants(pts in prop::collection::vec((0.0f64..200.0, 0.0f64..200.0), 3..120)) {
            let hull_pts = convex_hull(&pts);
            prop_assume!(hull_pts.len() >= 3 && signed_area(&hull_pts).abs() > 1.0);
            let convex_area = signed_area(&hull_pts).abs();
            let mut last = 0.0;
            for k in 1..=10 {
                let c = k as f64 / 10.0;
                let h = concave_hull(&pts, c).unwrap();
                let poly = h.polygon.points();
                prop_assert!(is_simple(poly));
                for &p in &pts {
                    prop_assert!(covers(poly, p), "point {:?} outside at c={}", p, c);
                }
                prop_assert!(h.area() >= last - 1e-9);
                prop_assert!(h.area() <= convex_area + 1e-6);
                last = h.area();
            }
            prop_assert!((last - convex_area).abs() < 1e-6);
        }
    }
}
