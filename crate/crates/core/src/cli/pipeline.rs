//! Batch pipeline: per-image filtering and architecture, then population
//! steps after a join barrier.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::metadata::{apply_roi, load_metadata, ImageMeta};
use super::output;
use crate::architecture::{
    analyze_cluster, angle_variation, hull_shape_pca, select_max_angle, AngleSeries, AngleVariation, ClusterArchitecture,
};
use crate::berry_filter::{run_filter_pipeline, FilterReport, ScaleCalibration};
use crate::error::{Error, Result};
use crate::mask_io::{load_mask_file, load_raster, median_color_patch};
use crate::stats::{correct_count, ols_fit, trait_summary, RegressionFit, TraitKey, TraitRow, TraitTable, N_TRAITS};

/// Number of hull-shape PC scores kept per cluster.
pub const HULL_PCS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageStatus {
    Ok,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image: String,
    pub path: PathBuf,
    pub status: ImageStatus,
    pub message: Option<String>,
    pub warnings: Vec<String>,
    pub masks_in: usize,
    pub masks_kept: usize,
    /// Wall-clock milliseconds per stage.
    pub stage_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub images: Vec<ImageEntry>,
    pub ok: usize,
    pub warning: usize,
    pub error: usize,
    pub population_warnings: Vec<String>,
    pub population_ms: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn has_errors(&self) -> bool {
        self.error > 0
    }
}

/// One kept berry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerryRow {
    pub image: String,
    pub berry_id: String,
    pub area: f64,
    pub length: f64,
    pub width: f64,
    pub perimeter: f64,
    pub aspect: f64,
    pub circularity: f64,
    /// Pixels.
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub color: Option<[u8; 3]>,
}

/// Per-image results kept for the population steps and the plot command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub image: String,
    pub meta: ImageMeta,
    pub units: String,
    pub calibration: Option<ScaleCalibration>,
    pub architecture: ClusterArchitecture,
    /// Berry outlines in pixels.
    pub outlines: Vec<Vec<(f64, f64)>>,
}

struct ImageOutcome {
    entry: ImageEntry,
    report: Option<FilterReport>,
    berries: Vec<BerryRow>,
    cluster: Option<ClusterRecord>,
}

fn ms(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

/// Mask files under the inputs, sorted; directories are searched
/// recursively and `*.truth.json` sidecars skipped.
pub fn discover_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for e in fs::read_dir(dir)? {
            let p = e?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if is_mask_file(&p) {
                out.push(p);
            }
        }
        Ok(())
    }
    fn is_mask_file(p: &Path) -> bool {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        name.ends_with(".json") && !name.ends_with(".truth.json") && name != "manifest.json"
    }
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else {
            out.push(p.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn fallback_id(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string()
}

fn process_image(path: &Path, cfg: &RunConfig, metadata: &BTreeMap<String, ImageMeta>) -> ImageOutcome {
    let mut entry = ImageEntry {
        image: fallback_id(path),
        path: path.to_path_buf(),
        status: ImageStatus::Ok,
        message: None,
        warnings: Vec::new(),
        masks_in: 0,
        masks_kept: 0,
        stage_ms: BTreeMap::new(),
    };
    let fail = |mut entry: ImageEntry, e: Error| {
        entry.status = ImageStatus::Error;
        entry.message = Some(e.to_string());
        ImageOutcome {
            entry,
            report: None,
            berries: Vec::new(),
            cluster: None,
        }
    };

    let t = Instant::now();
    let mut file = match load_mask_file(path) {
        Ok(f) => f,
        Err(e) => return fail(entry, e),
    };
    entry.image = file.image_id.clone();
    let meta = match metadata.get(&file.image_id) {
        Some(m) => m.clone(),
        None => {
            if !metadata.is_empty() {
                entry.warnings.push("image missing from metadata".into());
            }
            ImageMeta::standalone(&file.image_id)
        }
    };
    if let Some(roi) = meta.roi() {
        apply_roi(&mut file, roi);
    }
    entry.masks_in = file.masks.len();
    entry.stage_ms.insert("load".into(), ms(t));

    let t = Instant::now();
    let outcome = match run_filter_pipeline(&file, &cfg.filter, cfg.reference.as_ref()) {
        Ok(o) => o,
        Err(e) => return fail(entry, e),
    };
    entry.stage_ms.insert("filter".into(), ms(t));
    entry.masks_kept = outcome.berries.len();
    entry.warnings.extend(outcome.report.warnings.iter().cloned());

    let scale = outcome.calibration.as_ref().map(|c| c.mm_per_px).or(cfg.mm_per_px);
    let units = if scale.is_some() { "mm" } else { "px" };
    let s = scale.unwrap_or(1.0);

    let t = Instant::now();
    let raster = match &meta.raster {
        Some(p) => match load_raster(p) {
            Ok(r) => Some(r),
            Err(e) => {
                entry.warnings.push(format!("colour sampling skipped: {e}"));
                None
            }
        },
        None => None,
    };
    let berries: Vec<BerryRow> = outcome
        .berries
        .iter()
        .map(|b| BerryRow {
            image: file.image_id.clone(),
            berry_id: b.id.clone(),
            area: b.metrics.area * s * s,
            length: b.metrics.length * s,
            width: b.metrics.width * s,
            perimeter: b.metrics.perimeter * s,
            aspect: b.metrics.aspect_ratio,
            circularity: b.metrics.circularity,
            centroid_x: b.metrics.centroid.0,
            centroid_y: b.metrics.centroid.1,
            color: raster.as_ref().and_then(|r| median_color_patch(r, &b.patch).ok()),
        })
        .collect();
    entry.stage_ms.insert("features".into(), ms(t));

    let t = Instant::now();
    let cluster = match analyze_cluster(&outcome.berries, scale, &cfg.architecture) {
        Ok(architecture) => Some(ClusterRecord {
            image: file.image_id.clone(),
            meta,
            units: units.into(),
            calibration: outcome.calibration.clone(),
            architecture,
            outlines: outcome.berries.iter().map(|b| b.outline.points().to_vec()).collect(),
        }),
        Err(e) => {
            entry.warnings.push(format!("architecture skipped: {e}"));
            None
        }
    };
    entry.stage_ms.insert("architecture".into(), ms(t));

    if !entry.warnings.is_empty() {
        entry.status = ImageStatus::Warning;
    }
    ImageOutcome {
        entry,
        report: Some(outcome.report),
        berries,
        cluster,
    }
}

/// Physical cluster identity: the trait key without the angle.
pub type ClusterKey = (String, String, String, String);

pub fn cluster_key(k: &TraitKey) -> ClusterKey {
    (k.genotype.clone(), k.block.clone(), k.vine.clone(), k.cluster.clone())
}

pub fn cluster_label(k: &TraitKey) -> String {
    [&k.genotype, &k.block, &k.vine, &k.cluster]
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .join("/")
}

/// Series of views per physical cluster, in first-seen order.
pub fn angle_series(clusters: &[ClusterRecord]) -> Vec<(ClusterKey, AngleSeries)> {
    let mut order = Vec::new();
    let mut series: BTreeMap<ClusterKey, AngleSeries> = BTreeMap::new();
    for c in clusters {
        let k = c.meta.key();
        let ck = cluster_key(&k);
        let s = series.entry(ck.clone()).or_insert_with(|| {
            order.push(ck);
            AngleSeries {
                cluster_id: cluster_label(&k),
                angles: Vec::new(),
                counts: Vec::new(),
                max_berry_area: Vec::new(),
            }
        });
        s.angles.push(k.angle);
        s.counts.push(c.architecture.berry_count);
        s.max_berry_area.push(c.architecture.max_berry_area);
    }
    order
        .into_iter()
        .map(|k| {
            let s = series.remove(&k).unwrap();
            (k, s)
        })
        .collect()
}

fn trait_row(c: &ClusterRecord) -> TraitRow {
    let a = &c.architecture;
    let d = a.ecdf_desc;
    let e = |i: usize| d.map(|d| d[i]);
    let pc = |i: usize| a.shape_pc_scores.get(i).copied();
    let values: [Option<f64>; N_TRAITS] = [
        Some(a.berry_count as f64),
        Some(a.berry_area),
        Some(a.berry_length),
        Some(a.berry_width),
        Some(a.compactness),
        e(0),
        e(1),
        e(2),
        e(3),
        e(4),
        e(5),
        pc(0),
        pc(1),
        Some(a.cluster_area),
        Some(a.cluster_length),
        Some(a.cluster_width),
        Some(a.cluster_perimeter),
        Some(a.cluster_aspect),
    ];
    TraitRow {
        key: c.meta.key(),
        values,
    }
}

/// Fit of true count on the best-angle visible count, one pair per physical
/// cluster with a known true count.
pub fn fit_count_correction(clusters: &[ClusterRecord]) -> Result<RegressionFit> {
    let mut truth: BTreeMap<ClusterKey, f64> = BTreeMap::new();
    for c in clusters {
        if let Some(t) = c.meta.true_count {
            truth.insert(cluster_key(&c.meta.key()), t);
        }
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (key, s) in angle_series(clusters) {
        if let Some(&t) = truth.get(&key) {
            let (_, best) = select_max_angle(&s)?;
            x.push(best as f64);
            y.push(t);
        }
    }
    ols_fit(&x, &y)
}

pub struct PipelineRun {
    pub manifest: RunManifest,
    pub clusters: Vec<ClusterRecord>,
}

/// Runs the batch and writes every output table under `cfg.output`.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let metadata = match &cfg.metadata {
        Some(p) => load_metadata(p)?,
        None => BTreeMap::new(),
    };
    let files = discover_inputs(&cfg.inputs)?;
    info!("{} mask files", files.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<ImageOutcome> =
        pool.install(|| files.par_iter().map(|p| process_image(p, cfg, &metadata)).collect());

    let mut population_warnings = Vec::new();
    let mut population_ms = BTreeMap::new();
    let mut entries = Vec::with_capacity(outcomes.len());
    let mut reports = BTreeMap::new();
    let mut berries = Vec::new();
    let mut clusters = Vec::new();
    for o in outcomes {
        match o.entry.status {
            ImageStatus::Error => warn!("{}: {}", o.entry.image, o.entry.message.as_deref().unwrap_or("")),
            _ => info!("{}: {} of {} masks kept", o.entry.image, o.entry.masks_kept, o.entry.masks_in),
        }
        if let Some(r) = o.report {
            reports.insert(o.entry.image.clone(), r);
        }
        berries.extend(o.berries);
        clusters.extend(o.cluster);
        entries.push(o.entry);
    }

    let t = Instant::now();
    if clusters.len() >= 3 {
        let hulls: Vec<_> = clusters.iter().map(|c| &c.architecture.hull).collect();
        match hull_shape_pca(&hulls, cfg.architecture.hull_harmonics) {
            Ok(pca) => {
                population_warnings.extend(pca.warnings);
                for (c, s) in clusters.iter_mut().zip(pca.scores) {
                    if let Some(s) = s {
                        c.architecture.shape_pc_scores = s.into_iter().take(HULL_PCS).collect();
                    }
                }
            }
            Err(e) => population_warnings.push(format!("hull shape PCA skipped: {e}")),
        }
    } else {
        population_warnings.push(format!("hull shape PCA skipped: {} clusters (need 3)", clusters.len()));
    }
    population_ms.insert("hull_pca".to_string(), ms(t));

    let t = Instant::now();
    let mut count_fit = None;
    if clusters.iter().any(|c| c.meta.true_count.is_some()) {
        match fit_count_correction(&clusters) {
            Ok(fit) => {
                let best: BTreeMap<ClusterKey, usize> = angle_series(&clusters)
                    .into_iter()
                    .filter_map(|(k, s)| select_max_angle(&s).ok().map(|(_, c)| (k, c)))
                    .collect();
                for c in clusters.iter_mut() {
                    let b = best[&cluster_key(&c.meta.key())];
                    c.architecture.corrected_count = Some(correct_count(&fit, b as f64));
                }
                count_fit = Some(fit);
            }
            Err(e) => population_warnings.push(format!("count correction skipped: {e}")),
        }
    }
    population_ms.insert("count_correction".to_string(), ms(t));

    let series: Vec<AngleSeries> = angle_series(&clusters).into_iter().map(|(_, s)| s).collect();
    let variations: Vec<AngleVariation> = series
        .iter()
        .filter(|s| s.angles.len() >= 2)
        .filter_map(|s| match angle_variation(s) {
            Ok(v) => Some(v),
            Err(e) => {
                population_warnings.push(format!("angle variation for {}: {e}", s.cluster_id));
                None
            }
        })
        .collect();

    let t = Instant::now();
    let table = TraitTable {
        rows: clusters.iter().map(trait_row).collect(),
    };
    let summary = if clusters.len() >= 3 {
        match trait_summary(&table) {
            Ok(s) => Some(s),
            Err(e) => {
                population_warnings.push(format!("trait summary skipped: {e}"));
                None
            }
        }
    } else {
        population_warnings.push(format!("trait summary skipped: {} clusters (need 3)", clusters.len()));
        None
    };
    population_ms.insert("trait_summary".to_string(), ms(t));

    fs::create_dir_all(&cfg.output)?;
    let t = Instant::now();
    let mut outputs = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        crate::mask_io::write_atomic(&cfg.output.join(name), &bytes)?;
        outputs.push(name.to_string());
        Ok(())
    };
    emit("berries.csv", output::berries_csv(&berries)?)?;
    emit("clusters.csv", output::clusters_csv(&clusters)?)?;
    emit("dispositions.csv", output::dispositions_csv(&reports)?)?;
    emit("filter_reports.json", serde_json::to_vec_pretty(&reports)?)?;
    emit("clusters.json", serde_json::to_vec(&clusters)?)?;
    emit("angles.csv", output::angles_csv(&series, &variations)?)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    emit("traits.csv", buf)?;
    if let Some(s) = &summary {
        let mut buf = Vec::new();
        crate::stats::write_correlations_csv(s, &mut buf)?;
        emit("correlations.csv", buf)?;
        let mut buf = Vec::new();
        crate::stats::write_repeatability_csv(s, &mut buf)?;
        emit("repeatability.csv", buf)?;
    }
    if let Some(fit) = &count_fit {
        emit("count_fit.json", serde_json::to_vec_pretty(fit)?)?;
    }
    population_ms.insert("write".to_string(), ms(t));

    let count = |st: ImageStatus| entries.iter().filter(|e| e.status == st).count();
    let manifest = RunManifest {
        schema_version: super::config::SCHEMA_VERSION,
        config_hash: cfg.hash(),
        ok: count(ImageStatus::Ok),
        warning: count(ImageStatus::Warning),
        error: count(ImageStatus::Error),
        images: entries,
        population_warnings,
        population_ms,
        outputs,
    };
    crate::mask_io::write_atomic(&cfg.output.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(PipelineRun { manifest, clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architecture::ArchitectureConfig;
    use crate::mask_io::write_mask_file;
    use crate::synth::{gen_scene_2d, SceneSpec};

    fn corpus(dir: &Path, n: u64) {
        for seed in 0..n {
            let spec = SceneSpec {
                berry_count: 40,
                seed,
                ..SceneSpec::default()
            };
            let s = gen_scene_2d(&spec).unwrap();
            write_mask_file(&dir.join(format!("{}.json", s.truth.scene_id)), &s.mask_file).unwrap();
        }
    }

    #[test]
    fn discovers_sorted_json_without_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        for n in ["b.json", "a.json", "a.truth.json", "notes.txt"] {
            fs::write(dir.path().join(n), "{}").unwrap();
        }
        let found = discover_inputs(&[dir.path().to_path_buf()]).unwrap();
        let names: Vec<_> = found.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
        assert_eq!(names, ["a.json", "b.json"]);
    }

    #[test]
    fn small_batch_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in");
        fs::create_dir(&input).unwrap();
        corpus(&input, 3);
        fs::write(input.join("broken.json"), "{not json").unwrap();
        let mut cfg = RunConfig::new(vec![input], dir.path().join("out"));
        cfg.reference = Some(Default::default());
        cfg.architecture = ArchitectureConfig::default();
        let run = cmd_pipeline(&cfg).unwrap();
        let m = &run.manifest;
        assert_eq!(m.images.len(), 4);
        assert_eq!(m.error, 1);
        assert_eq!(m.ok + m.warning, 3);
        for c in &run.clusters {
            assert_eq!((c.architecture.berry_count, c.units.as_str()), (40, "mm"), "{:?}", m.images);
        }
        assert!(run.clusters.iter().all(|c| c.architecture.shape_pc_scores.len() == HULL_PCS));
        let berries = fs::read_to_string(dir.path().join("out/berries.csv")).unwrap();
        assert_eq!(berries.lines().count(), 1 + 3 * 40);
        for f in ["clusters.csv", "traits.csv", "correlations.csv", "manifest.json"] {
            assert!(dir.path().join("out").join(f).exists(), "{f}");
        }
    }
}
