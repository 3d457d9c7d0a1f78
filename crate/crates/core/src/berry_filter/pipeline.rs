use super::reference::{detect_reference, ReferenceSpec, ScaleCalibration};
use super::stages::{decode_masks, efd_pca_outlier_filter, metric_filter, remove_multi_berry, Candidate};
use super::{Disposition, FilterConfig, FilterReport, Stage};
use crate::error::Result;
use crate::mask_io::{Contour, MaskFile, MaskPatch};
use crate::morphometry::ShapeMetrics;

/// A mask that survived every stage.
#[derive(Debug, Clone)]
pub struct BerryMask {
    pub id: String,
    pub patch: MaskPatch,
    pub outline: Contour,
    /// Pixel units.
    pub metrics: ShapeMetrics,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    /// In input order.
    pub berries: Vec<BerryMask>,
    pub report: FilterReport,
    /// Present when a reference was requested and exactly one was found.
    pub calibration: Option<ScaleCalibration>,
}

/// Runs multi-berry removal, metric filters and outlier rounds on one image's
/// masks, and looks for the reference circle when `reference` is given.
pub fn run_filter_pipeline(
    file: &MaskFile,
    cfg: &FilterConfig,
    reference: Option<&ReferenceSpec>,
) -> Result<FilterOutcome> {
    cfg.validate()?;
    let cands = decode_masks(file)?;
    let n = cands.len();
    let mut report = FilterReport {
        input: n,
        ..FilterReport::default()
    };
    let mut stage: Vec<Option<(Stage, String)>> = vec![None; n];

    let calibration = match reference {
        Some(spec) => {
            let all: Vec<&Candidate> = cands.iter().collect();
            match detect_reference(&all, spec) {
                Ok(c) => Some(c),
                Err(e) => {
                    report.warnings.push(e.to_string());
                    None
                }
            }
        }
        None => None,
    };

    let patches: Vec<&MaskPatch> = cands.iter().map(|c| &c.patch).collect();
    for (i, flag) in remove_multi_berry(&patches, cfg).into_iter().enumerate() {
        if let Some(reason) = flag {
            stage[i] = Some((Stage::MultiBerry, reason));
        }
    }

    let alive: Vec<usize> = (0..n).filter(|&i| stage[i].is_none()).collect();
    let refs: Vec<&Candidate> = alive.iter().map(|&i| &cands[i]).collect();
    for (&i, flag) in alive.iter().zip(metric_filter(&refs, cfg)) {
        if let Some(reason) = flag {
            stage[i] = Some((Stage::Metric, reason));
        }
    }

    let alive: Vec<usize> = (0..n).filter(|&i| stage[i].is_none()).collect();
    let outlines: Vec<&Contour> = alive.iter().map(|&i| cands[i].outline.as_ref().unwrap()).collect();
    let outliers = efd_pca_outlier_filter(&outlines, cfg);
    if let Some(w) = outliers.warning {
        report.warnings.push(w);
    }
    for (&i, flag) in alive.iter().zip(outliers.removed) {
        if let Some((_, reason)) = flag {
            stage[i] = Some((Stage::EfdPca, reason));
        }
    }

    let mut berries = Vec::new();
    for (c, s) in cands.into_iter().zip(stage) {
        let (st, reason) = s.unwrap_or((Stage::Kept, String::new()));
        match st {
            Stage::MultiBerry => report.removed_multi += 1,
            Stage::Metric => report.removed_metric += 1,
            Stage::EfdPca => report.removed_efd_pca += 1,
            Stage::Kept => report.kept += 1,
        }
        report.dispositions.push(Disposition {
            id: c.id.clone(),
            stage: st,
            reason,
        });
        if st == Stage::Kept {
            berries.push(BerryMask {
                id: c.id,
                patch: c.patch,
                outline: c.outline.unwrap(),
                metrics: c.metrics.unwrap(),
            });
        }
    }
    Ok(FilterOutcome {
        berries,
        report,
        calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_scene_2d, Decoys, MaskLabel, SceneSpec};

    #[test]
    fn empty_input_gives_zeroed_report() {
        let file = MaskFile {
            image_id: "e".into(),
            width: 10,
            height: 10,
            masks: vec![],
        };
        let out = run_filter_pipeline(&file, &FilterConfig::default(), None).unwrap();
        assert!(out.berries.is_empty());
        assert_eq!(out.report.input, 0);
        assert!(out.report.is_consistent());
    }

    #[test]
    fn forty_berries_with_three_unions() {
        let spec = SceneSpec {
            berry_count: 40,
            decoys: Decoys {
                unions: 3,
                ..Decoys::none()
            },
            seed: 21,
            ..SceneSpec::default()
        };
        let scene = gen_scene_2d(&spec).unwrap();
        let out = run_filter_pipeline(&scene.mask_file, &FilterConfig::default(), None).unwrap();
        assert!(out.report.is_consistent());
        assert_eq!(out.report.removed_multi, 3);
        for d in &out.report.dispositions {
            let label = scene.truth.label_of(&d.id).unwrap();
            assert_eq!(d.stage == Stage::MultiBerry, label == MaskLabel::Union);
        }
    }

    #[test]
    fn default_scene_recovers_the_berries_and_the_reference() {
        let spec = SceneSpec {
            seed: 2,
            ..SceneSpec::default()
        };
        let scene = gen_scene_2d(&spec).unwrap();
        let reference = ReferenceSpec {
            diameter_mm: 80.0,
            ..ReferenceSpec::default()
        };
        let out = run_filter_pipeline(&scene.mask_file, &FilterConfig::default(), Some(&reference)).unwrap();
        assert!(out.report.is_consistent());
        let kept: Vec<MaskLabel> = out.berries.iter().map(|b| scene.truth.label_of(&b.id).unwrap()).collect();
        assert!(kept.iter().all(|&l| l == MaskLabel::Berry), "{:?}", out.report.dispositions);
        assert_eq!(kept.len(), 60);
        let cal = out.calibration.unwrap();
        assert_eq!(scene.truth.label_of(&cal.reference_mask_id), Some(MaskLabel::Reference));
        assert!((cal.mm_per_px - 0.5).abs() < 0.01);
    }
}
