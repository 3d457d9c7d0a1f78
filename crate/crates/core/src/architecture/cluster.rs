use serde::{Deserialize, Serialize};

use super::ecdf::{ecdf_descriptors, ecdf_profile, Axis, EcdfProfile};
use super::hull::{compactness, concave_hull, hull_metrics, HullPolygon};
use crate::berry_filter::BerryMask;
use crate::error::{Error, Result};
use crate::morphometry::{efd_fit, efd_normalize, pca_fit, pca_scores, PcaModel, HULL_HARMONICS};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureConfig {
    /// Concave hull parameter in `(0, 1]`; 1 is the convex hull.
    pub concavity: f64,
    pub hull_harmonics: usize,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            concavity: 0.5,
            hull_harmonics: HULL_HARMONICS,
        }
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.concavity > 0.0 && self.concavity <= 1.0) {
            return Err(Error::Config(format!("concavity must be in (0, 1], got {}", self.concavity)));
        }
        if self.hull_harmonics == 0 {
            return Err(Error::Config("hull_harmonics must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cluster-level descriptors of one view. Lengths are in mm when a scale
/// was supplied and in pixels otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArchitecture {
    pub berry_count: usize,
    pub corrected_count: Option<f64>,
    pub berry_area: f64,
    pub berry_length: f64,
    pub berry_width: f64,
    /// Largest single berry area.
    pub max_berry_area: f64,
    pub ecdf_x: Option<EcdfProfile>,
    pub ecdf_y: Option<EcdfProfile>,
    /// `F_x(25), F_x(50), F_x(75), F_y(25), F_y(50), F_y(75)`.
    pub ecdf_desc: Option<[f64; 6]>,
    /// Pixel coordinates.
    pub hull: HullPolygon,
    pub compactness: f64,
    pub cluster_area: f64,
    pub cluster_length: f64,
    pub cluster_width: f64,
    pub cluster_perimeter: f64,
    pub cluster_aspect: f64,
    pub shape_pc_scores: Vec<f64>,
    /// Length units per pixel used for the values above.
    pub scale: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Descriptors of the berries kept for one image.
pub fn analyze_cluster(
    berries: &[BerryMask],
    mm_per_px: Option<f64>,
    cfg: &ArchitectureConfig,
) -> Result<ClusterArchitecture> {
    cfg.validate()?;
    if berries.is_empty() {
        return Err(Error::InsufficientData("no berries to describe".into()));
    }
    let scale = mm_per_px.unwrap_or(1.0);
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let s2 = scale * scale;
    let centroids: Vec<Point> = berries.iter().map(|b| b.metrics.centroid).collect();
    let ecdf_x = ecdf_profile(&centroids, Axis::X).ok();
    let ecdf_y = ecdf_profile(&centroids, Axis::Y).ok();
    let ecdf_desc = match (&ecdf_x, &ecdf_y) {
        (Some(x), Some(y)) => {
            let (a, b, c) = ecdf_descriptors(x);
            let (d, e, f) = ecdf_descriptors(y);
            Some([a, b, c, d, e, f])
        }
        _ => None,
    };
    let vertices: Vec<Point> = berries.iter().flat_map(|b| b.outline.points().iter().copied()).collect();
    let hull = concave_hull(&vertices, cfg.concavity)?;
    let areas: Vec<f64> = berries.iter().map(|b| b.metrics.area).collect();
    let compact = compactness(&areas, &hull)?;
    let hm = hull_metrics(&hull, scale)?;
    Ok(ClusterArchitecture {
        berry_count: berries.len(),
        corrected_count: None,
        berry_area: mean(areas.iter().map(|a| a * s2)),
        berry_length: mean(berries.iter().map(|b| b.metrics.length * scale)),
        berry_width: mean(berries.iter().map(|b| b.metrics.width * scale)),
        max_berry_area: areas.iter().copied().fold(0.0, f64::max) * s2,
        ecdf_x,
        ecdf_y,
        ecdf_desc,
        hull,
        compactness: compact,
        cluster_area: hm.area,
        cluster_length: hm.length,
        cluster_width: hm.width,
        cluster_perimeter: hm.perimeter,
        cluster_aspect: hm.aspect,
        shape_pc_scores: Vec::new(),
        scale,
    })
}

const HULL_SAMPLES: usize = 256;

/// Normalised EFD feature row of a hull outline.
pub fn hull_features(hull: &HullPolygon, harmonics: usize) -> Result<Vec<f64>> {
    let samples = HULL_SAMPLES.max(4 * harmonics + 4);
    let e = efd_fit(&hull.polygon.resample(samples)?, harmonics)?;
    Ok(efd_normalize(&e)?.to_features())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullShapePca {
    pub model: PcaModel,
    /// Per input hull; `None` for hulls excluded as degenerate.
    pub scores: Vec<Option<Vec<f64>>>,
    pub warnings: Vec<String>,
}

/// PCA over normalised EFD descriptors of a hull population.
pub fn hull_shape_pca(hulls: &[&HullPolygon], harmonics: usize) -> Result<HullShapePca> {
    let mut warnings = Vec::new();
    let feats: Vec<Option<Vec<f64>>> = hulls
        .iter()
        .enumerate()
        .map(|(i, h)| match hull_features(h, harmonics) {
            Ok(f) => Some(f),
            Err(e) => {
                warnings.push(format!("hull {i} excluded: {e}"));
                None
            }
        })
        .collect();
    let rows: Vec<Vec<f64>> = feats.iter().flatten().cloned().collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!("hull PCA needs 3 usable hulls, got {}", rows.len())));
    }
    let model = pca_fit(&rows)?;
    let mut it = pca_scores(&model, &rows)?.into_iter();
    let scores = feats.iter().map(|f| f.as_ref().map(|_| it.next().unwrap())).collect();
    Ok(HullShapePca {
        model,
        scores,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask_io::Contour;
    use crate::morphometry::mask_outline;
    use crate::synth::{disk, ellipse};

    fn berry(id: usize, center: Point, r: f64) -> BerryMask {
        let patch = disk(600, 600, center, r).unwrap();
        let outline = mask_outline(&patch).unwrap();
        let metrics = crate::morphometry::shape_metrics(&outline, 1.0).unwrap();
        BerryMask {
            id: id.to_string(),
            patch,
            outline,
            metrics,
        }
    }

    fn ellipse_hull(a: f64, b: f64, angle: f64, offset: Point) -> HullPolygon {
        let pts: Vec<Point> = (0..200)
            .map(|k| {
                let t = k as f64 / 200.0 * std::f64::consts::TAU;
                let (x, y) = (a * t.cos(), b * t.sin());
                let (s, c) = angle.sin_cos();
                (x * c - y * s + offset.0, x * s + y * c + offset.1)
            })
            .collect();
        HullPolygon {
            polygon: Contour::new(pts).unwrap(),
            concavity: 1.0,
        }
    }

    #[test]
    fn single_berry_compactness_is_one() {
        let b = berry(0, (300.0, 300.0), 25.0);
        let arch = analyze_cluster(&[b], None, &ArchitectureConfig::default()).unwrap();
        assert!((arch.compactness - 1.0).abs() < 0.03, "{}", arch.compactness);
        assert!(arch.ecdf_desc.is_none());
        assert_eq!(arch.berry_count, 1);
    }

    #[test]
    fn dense_packing_is_more_compact_than_sparse() {
        let grid = |gap: f64| -> Vec<BerryMask> {
            (0..16).map(|i| berry(i, (150.0 + gap * (i % 4) as f64, 150.0 + gap * (i / 4) as f64), 10.0)).collect()
        };
        let cfg = ArchitectureConfig::default();
        let dense = analyze_cluster(&grid(21.0), None, &cfg).unwrap();
        let sparse = analyze_cluster(&grid(26.0), None, &cfg).unwrap();
        assert!(dense.compactness > sparse.compactness, "{} {}", dense.compactness, sparse.compactness);
        let convex = ArchitectureConfig { concavity: 1.0, ..cfg };
        let sweep: Vec<f64> = [21.0, 24.0, 28.0, 32.0, 40.0]
            .iter()
            .map(|&g| analyze_cluster(&grid(g), None, &convex).unwrap().compactness)
            .collect();
        assert!(sweep.windows(2).all(|w| w[0] > w[1]), "{sweep:?}");
    }

    #[test]
    fn scaling_changes_units_not_ratios() {
        let bs: Vec<BerryMask> = (0..9).map(|i| berry(i, (200.0 + 30.0 * (i % 3) as f64, 200.0 + 45.0 * (i / 3) as f64), 12.0)).collect();
        let cfg = ArchitectureConfig::default();
        let px = analyze_cluster(&bs, None, &cfg).unwrap();
        let mm = analyze_cluster(&bs, Some(0.25), &cfg).unwrap();
        assert!((mm.cluster_length - 0.25 * px.cluster_length).abs() < 1e-9);
        assert!((mm.berry_area - 0.0625 * px.berry_area).abs() < 1e-9);
        assert_eq!(mm.compactness, px.compactness);
        assert!(px.cluster_length > px.cluster_width);
    }

    #[test]
    fn aspect_gradient_loads_on_pc1() {
        let aspects: Vec<f64> = (0..30).map(|i| 1.2 + 1.8 * i as f64 / 29.0).collect();
        let hulls: Vec<HullPolygon> = aspects
            .iter()
            .enumerate()
            .map(|(i, &asp)| ellipse_hull(50.0 * asp.sqrt(), 50.0 / asp.sqrt(), 0.1 * i as f64, (i as f64, 0.0)))
            .collect();
        let refs: Vec<&HullPolygon> = hulls.iter().collect();
        let pca = hull_shape_pca(&refs, HULL_HARMONICS).unwrap();
        assert!(pca.model.explained[0] > 0.95);
        let pc1: Vec<f64> = pca.scores.iter().map(|s| s.as_ref().unwrap()[0]).collect();
        let r = crate::stats::pearson(&pc1, &aspects).unwrap();
        assert!(r.abs() > 0.9, "{r}");
    }

    fn winged_hull(wing: f64, side: f64) -> HullPolygon {
        let centre = if side > 0.0 { 0.35 } else { std::f64::consts::PI - 0.35 };
        let pts: Vec<Point> = (0..240)
            .map(|k| {
                let t = k as f64 / 240.0 * std::f64::consts::TAU;
                let d = (t - centre + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
                let (x, y) = (35.0 * t.cos(), 60.0 * t.sin());
                let r = x.hypot(y) + wing * (-d * d / 0.08).exp();
                (r * t.cos(), r * t.sin())
            })
            .collect();
        HullPolygon {
            polygon: Contour::new(pts).unwrap(),
            concavity: 1.0,
        }
    }

    #[test]
    fn mirrored_wings_score_opposite_signs() {
        let sizes: Vec<f64> = (0..8).map(|i| 8.0 + 2.0 * i as f64).collect();
        let hulls: Vec<HullPolygon> = sizes
            .iter()
            .flat_map(|&w| [winged_hull(w, 1.0), winged_hull(w, -1.0)])
            .collect();
        let refs: Vec<&HullPolygon> = hulls.iter().collect();
        let pca = hull_shape_pca(&refs, HULL_HARMONICS).unwrap();
        let scores: Vec<&Vec<f64>> = pca.scores.iter().map(|s| s.as_ref().unwrap()).collect();
        let side_sum = |pc: usize| (0..sizes.len()).map(|i| scores[2 * i][pc]).sum::<f64>().abs();
        let pc = (0..3).max_by(|&a, &b| side_sum(a).total_cmp(&side_sum(b))).unwrap();
        for i in 0..sizes.len() {
            let (r, l) = (scores[2 * i][pc], scores[2 * i + 1][pc]);
            assert!(r.abs() > 1e-3, "pc{pc} score {r}");
            assert!(r * l < 0.0, "pair {i}: {r} {l}");
            assert!((r + l).abs() < 0.02 * r.abs(), "pair {i}: {r} {l}");
        }
    }

    #[test]
    fn identical_hulls_have_no_variance() {
        let hulls: Vec<HullPolygon> = (0..5).map(|i| ellipse_hull(60.0, 30.0, 0.3 * i as f64, (10.0 * i as f64, 0.0))).collect();
        let refs: Vec<&HullPolygon> = hulls.iter().collect();
        let pca = hull_shape_pca(&refs, HULL_HARMONICS).unwrap();
        assert!(pca.model.total_variance() < 1e-10);
        for s in pca.scores.iter().flatten() {
            assert!(s.iter().all(|v| v.abs() < 1e-5));
        }
    }

    #[test]
    fn hull_scores_are_pose_invariant() {
        let base: Vec<HullPolygon> = (0..6).map(|i| ellipse_hull(60.0, 20.0 + 5.0 * i as f64, 0.0, (0.0, 0.0))).collect();
        let moved: Vec<HullPolygon> = base
            .iter()
            .map(|h| HullPolygon {
                polygon: h.polygon.rotated(1.1).translated(40.0, -25.0),
                concavity: 1.0,
            })
            .collect();
        let a = hull_shape_pca(&base.iter().collect::<Vec<_>>(), 10).unwrap();
        let b = hull_shape_pca(&moved.iter().collect::<Vec<_>>(), 10).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            for (u, v) in x.as_ref().unwrap().iter().zip(y.as_ref().unwrap()) {
                assert!((u - v).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_hulls_are_excluded() {
        let mut hulls: Vec<HullPolygon> = (0..4).map(|i| ellipse_hull(60.0, 20.0 + 5.0 * i as f64, 0.0, (0.0, 0.0))).collect();
        hulls.push(HullPolygon {
            polygon: Contour::new(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap(),
            concavity: 1.0,
        });
        let refs: Vec<&HullPolygon> = hulls.iter().collect();
        let pca = hull_shape_pca(&refs, HULL_HARMONICS).unwrap();
        assert_eq!(pca.scores.iter().filter(|s| s.is_some()).count(), 4 + usize::from(pca.warnings.is_empty()));
        assert!(hull_shape_pca(&refs[..2], HULL_HARMONICS).is_err());
        let _ = ellipse(10, 10, (5.0, 5.0), 2.0, 1.0, 0.0);
    }
}
