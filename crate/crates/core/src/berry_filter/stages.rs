use super::FilterConfig;
use crate::error::Result;
use crate::mask_io::{decode_rle_patch, Contour, MaskFile, MaskPatch};
use crate::morphometry::{efd_fit, efd_normalize, mask_outline, pca_fit, pca_scores, shape_metrics, ShapeMetrics};
use crate::Point;

/// A decoded mask with its measurement outline.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: String,
    pub patch: MaskPatch,
    /// `None` when no outline can be traced.
    pub outline: Option<Contour>,
    pub metrics: Option<ShapeMetrics>,
}

impl Candidate {
    pub fn new(id: String, patch: MaskPatch) -> Self {
        let outline = mask_outline(&patch).ok();
        let metrics = outline.as_ref().and_then(|c| shape_metrics(c, 1.0).ok());
        Self {
            id,
            patch,
            outline,
            metrics,
        }
    }

    pub fn area_px(&self) -> usize {
        self.patch.count()
    }
}

/// Decodes every record. Empty masks yield an empty one-pixel patch so that
/// positions stay aligned with the records.
pub fn decode_masks(file: &MaskFile) -> Result<Vec<Candidate>> {
    file.masks
        .iter()
        .map(|m| {
            let patch = decode_rle_patch(&m.rle)?.unwrap_or_else(|| MaskPatch {
                x0: 0,
                y0: 0,
                image_height: file.height,
                image_width: file.width,
                grid: crate::mask_io::BitGrid::new(1, 1),
            });
            Ok(Candidate::new(m.id.clone(), patch))
        })
        .collect()
}

/// Flags every mask that covers at least two distinct smaller masks, each to
/// at least `containment_threshold` of the smaller mask's area.
pub fn remove_multi_berry(patches: &[&MaskPatch], cfg: &FilterConfig) -> Vec<Option<String>> {
    let areas: Vec<usize> = patches.iter().map(|p| p.count()).collect();
    let overlaps_box = |a: &MaskPatch, b: &MaskPatch| {
        a.x0 < b.x0 + b.grid.width()
            && b.x0 < a.x0 + a.grid.width()
            && a.y0 < b.y0 + b.grid.height()
            && b.y0 < a.y0 + a.grid.height()
    };
    (0..patches.len())
        .map(|i| {
            let covered = (0..patches.len())
                .filter(|&j| {
                    j != i
                        && areas[j] > 0
                        && areas[j] < areas[i]
                        && overlaps_box(patches[i], patches[j])
                        && patches[i].intersection(patches[j]) as f64
                            >= cfg.containment_threshold * areas[j] as f64
                })
                .count();
            (covered >= 2).then(|| format!("covers {covered} smaller masks"))
        })
        .collect()
}

/// Medoid of `pts` and the cluster radius: the RMS distance to the medoid
/// over points within 2.5 median distances of it.
pub fn cluster_radius(pts: &[Point]) -> Option<(Point, f64)> {
    if pts.is_empty() {
        return None;
    }
    let d = |a: Point, b: Point| (a.0 - b.0).hypot(a.1 - b.1);
    let mut best = (f64::INFINITY, 0);
    for (i, &a) in pts.iter().enumerate() {
        let s: f64 = pts.iter().map(|&b| d(a, b)).sum();
        if s < best.0 {
            best = (s, i);
        }
    }
    let medoid = pts[best.1];
    let mut dist: Vec<f64> = pts.iter().map(|&p| d(medoid, p)).collect();
    dist.sort_by(f64::total_cmp);
    let median = dist[dist.len() / 2];
    let core: Vec<f64> = dist.into_iter().filter(|&x| x <= 2.5 * median).collect();
    let ms = core.iter().map(|x| x * x).sum::<f64>() / core.len() as f64;
    Some((medoid, ms.sqrt()))
}

/// Area, aspect, optional perimeter/area (absolute and relative to the
/// median) and distance-from-cluster checks.
pub fn metric_filter(cands: &[&Candidate], cfg: &FilterConfig) -> Vec<Option<String>> {
    let mut out: Vec<Option<String>> = cands
        .iter()
        .map(|c| {
            let area = c.area_px() as f64;
            let Some(m) = c.metrics else {
                return Some("no measurable outline".to_string());
            };
            if area < cfg.min_area_px {
                return Some(format!("area {area} px below {}", cfg.min_area_px));
            }
            if area > cfg.max_area_px {
                return Some(format!("area {area} px above {}", cfg.max_area_px));
            }
            if m.aspect_ratio > cfg.max_aspect {
                return Some(format!("aspect {:.2} above {}", m.aspect_ratio, cfg.max_aspect));
            }
            if let Some(limit) = cfg.max_perimeter_ratio {
                let ratio = m.perimeter / m.area;
                if ratio > limit {
                    return Some(format!("perimeter/area {ratio:.3} above {limit}"));
                }
            }
            None
        })
        .collect();
    if let Some(limit) = cfg.max_relative_perimeter {
        let alive: Vec<usize> = (0..cands.len()).filter(|&i| out[i].is_none()).collect();
        let ratios: Vec<f64> = alive
            .iter()
            .map(|&i| {
                let m = cands[i].metrics.unwrap();
                m.perimeter / m.area
            })
            .collect();
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let med = if sorted.is_empty() { 0.0 } else { crate::stats::median(&sorted) };
        if med > 0.0 {
            for (&i, &r) in alive.iter().zip(&ratios) {
                if r > limit * med {
                    out[i] = Some(format!("perimeter/area {:.2}x the median, above {limit}", r / med));
                }
            }
        }
    }
    let survivors: Vec<usize> = (0..cands.len()).filter(|&i| out[i].is_none()).collect();
    let centroids: Vec<Point> = survivors.iter().map(|&i| cands[i].metrics.unwrap().centroid).collect();
    if let Some((medoid, radius)) = cluster_radius(&centroids) {
        for (&i, &c) in survivors.iter().zip(&centroids) {
            let d = (c.0 - medoid.0).hypot(c.1 - medoid.1);
            if d > cfg.max_centroid_distance * radius {
                let k = if radius > 0.0 { d / radius } else { f64::INFINITY };
                out[i] = Some(format!("centroid {k:.2} cluster radii from medoid"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierResult {
    /// Per input outline: the 1-based round that removed it and why.
    pub removed: Vec<Option<(usize, String)>>,
    pub rounds_run: usize,
    pub warning: Option<String>,
}

const OUTLINE_SAMPLES: usize = 128;
const MIN_EIGENVALUE: f64 = 1e-12;

/// Normalised EFD feature row of an outline.
pub(crate) fn efd_features(outline: &Contour, harmonics: usize) -> Result<Vec<f64>> {
    let samples = OUTLINE_SAMPLES.max(4 * harmonics + 4);
    let e = efd_fit(&outline.resample(samples)?, harmonics)?;
    Ok(efd_normalize(&e)?.to_features())
}

/// Iterative shape-outlier rejection. Each round refits PCA on the surviving
/// outlines' normalised EFD features and removes those scoring beyond
/// `pca_sd` standard deviations on any of the first `pca_components` PCs.
pub fn efd_pca_outlier_filter(outlines: &[&Contour], cfg: &FilterConfig) -> OutlierResult {
    let n = outlines.len();
    let mut removed: Vec<Option<(usize, String)>> = vec![None; n];
    if n < cfg.min_outlier_population() {
        return OutlierResult {
            removed,
            rounds_run: 0,
            warning: Some(format!(
                "outlier rounds skipped: {n} outlines, need {}",
                cfg.min_outlier_population()
            )),
        };
    }
    let mut feats: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for (i, c) in outlines.iter().enumerate() {
        match efd_features(c, cfg.harmonics) {
            Ok(f) => feats.push(Some(f)),
            Err(e) => {
                removed[i] = Some((1, format!("no descriptors: {e}")));
                feats.push(None);
            }
        }
    }
    let mut rounds_run = 0;
    let mut warning = None;
    for round in 1..=cfg.pca_rounds {
        let alive: Vec<usize> = (0..n).filter(|&i| removed[i].is_none()).collect();
        if alive.len() < cfg.min_outlier_population() {
            warning = Some(format!("outlier rounds stopped after {rounds_run}: {} outlines left", alive.len()));
            break;
        }
        let rows: Vec<Vec<f64>> = alive.iter().map(|&i| feats[i].clone().unwrap()).collect();
        let Ok(model) = pca_fit(&rows) else {
            warning = Some("outlier rounds stopped: PCA failed".into());
            break;
        };
        let scores = pca_scores(&model, &rows).expect("rows match the fitted model");
        rounds_run = round;
        let k = cfg.pca_components.min(model.n_components());
        let mut any = false;
        for (row, &i) in scores.iter().zip(&alive) {
            for pc in 0..k {
                let ev = model.eigenvalues[pc];
                if ev < MIN_EIGENVALUE {
                    continue;
                }
                let z = row[pc] / ev.sqrt();
                if z.abs() > cfg.pca_sd {
                    removed[i] = Some((round, format!("PC{} score {z:+.2} SD in round {round}", pc + 1)));
                    any = true;
                    break;
                }
            }
        }
        if !any {
            rounds_run = cfg.pca_rounds;
            break;
        }
    }
    OutlierResult {
        removed,
        rounds_run,
        warning,
    }
}
