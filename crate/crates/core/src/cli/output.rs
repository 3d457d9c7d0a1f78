//! CSV encoders for the pipeline tables.

use std::collections::BTreeMap;

use super::pipeline::{BerryRow, ClusterRecord};
use crate::architecture::{AngleSeries, AngleVariation};
use crate::berry_filter::FilterReport;
use crate::error::Result;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
}

pub fn berries_csv(rows: &[BerryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "image", "berry_id", "area", "length", "width", "perimeter", "aspect", "circularity", "centroid_x", "centroid_y",
        "r", "g", "b",
    ])?;
    for r in rows {
        let c = |i: usize| r.color.map(|c| c[i].to_string()).unwrap_or_default();
        w.write_record([
            r.image.clone(),
            r.berry_id.clone(),
            r.area.to_string(),
            r.length.to_string(),
            r.width.to_string(),
            r.perimeter.to_string(),
            r.aspect.to_string(),
            r.circularity.to_string(),
            r.centroid_x.to_string(),
            r.centroid_y.to_string(),
            c(0),
            c(1),
            c(2),
        ])?;
    }
    finish(w)
}

pub const CLUSTER_COLUMNS: [&str; 30] = [
    "image", "genotype", "block", "vine", "cluster", "angle", "units", "mm_per_px", "berry_count", "corrected_count",
    "berry_area", "berry_length", "berry_width", "max_berry_area", "compactness", "ecdf_x25", "ecdf_x50", "ecdf_x75",
    "ecdf_y25", "ecdf_y50", "ecdf_y75", "cluster_area", "cluster_length", "cluster_width", "cluster_perimeter",
    "cluster_aspect", "hull_pc1", "hull_pc2", "hull_pc3", "hull_pc4",
];

pub fn clusters_csv(rows: &[ClusterRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CLUSTER_COLUMNS)?;
    for c in rows {
        let a = &c.architecture;
        let m = &c.meta;
        let mut rec = vec![
            c.image.clone(),
            m.genotype.clone(),
            m.block.clone(),
            m.vine.clone(),
            m.cluster.clone(),
            m.angle.to_string(),
            c.units.clone(),
            opt((c.units == "mm").then_some(a.scale)),
            a.berry_count.to_string(),
            opt(a.corrected_count),
            a.berry_area.to_string(),
            a.berry_length.to_string(),
            a.berry_width.to_string(),
            a.max_berry_area.to_string(),
            a.compactness.to_string(),
        ];
        rec.extend((0..6).map(|i| opt(a.ecdf_desc.map(|d| d[i]))));
        rec.extend(
            [a.cluster_area, a.cluster_length, a.cluster_width, a.cluster_perimeter, a.cluster_aspect]
                .iter()
                .map(|v| v.to_string()),
        );
        rec.extend((0..4).map(|i| opt(a.shape_pc_scores.get(i).copied())));
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn dispositions_csv(reports: &BTreeMap<String, FilterReport>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image", "mask_id", "stage", "reason"])?;
    for (image, r) in reports {
        for d in &r.dispositions {
            w.write_record([image.as_str(), &d.id, d.stage.as_str(), &d.reason])?;
        }
    }
    finish(w)
}

/// One row per view; ratios are empty for clusters without a 0 degree view
/// or with a single view.
pub fn angles_csv(series: &[AngleSeries], variations: &[AngleVariation]) -> Result<Vec<u8>> {
    let by_id: BTreeMap<&str, &AngleVariation> = variations.iter().map(|v| (v.cluster_id.as_str(), v)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cluster", "angle", "count", "max_berry_area", "count_ratio", "area_ratio"])?;
    for s in series {
        let v = by_id.get(s.cluster_id.as_str());
        for i in 0..s.angles.len() {
            w.write_record([
                s.cluster_id.clone(),
                s.angles[i].to_string(),
                s.counts[i].to_string(),
                s.max_berry_area[i].to_string(),
                opt(v.map(|v| v.count_ratio[i])),
                opt(v.map(|v| v.area_ratio[i])),
            ])?;
        }
    }
    finish(w)
}
