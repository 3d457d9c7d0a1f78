//! Plain-text summary of a completed run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::pipeline::{ImageStatus, RunManifest};
use crate::berry_filter::FilterReport;
use crate::error::{Error, Result};
use crate::stats::{median, RegressionFit};

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>> {
    let p = dir.join(name);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Summary of berry counts, filter attrition and repeatability.
pub fn cmd_report(results: &Path) -> Result<String> {
    let manifest: RunManifest = read_json(results, "manifest.json")?
        .ok_or_else(|| Error::InvalidArgument(format!("missing table manifest.json in {}", results.display())))?;
    let reports: BTreeMap<String, FilterReport> = read_json(results, "filter_reports.json")?.unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(out, "images: {} ({} ok, {} warning, {} error)", manifest.images.len(), manifest.ok, manifest.warning, manifest.error);
    for e in manifest.images.iter().filter(|e| e.status == ImageStatus::Error) {
        let _ = writeln!(out, "  error {}: {}", e.image, e.message.as_deref().unwrap_or(""));
    }

    let mut counts: Vec<f64> = manifest
        .images
        .iter()
        .filter(|e| e.status != ImageStatus::Error)
        .map(|e| e.masks_kept as f64)
        .collect();
    counts.sort_by(f64::total_cmp);
    if counts.is_empty() {
        let _ = writeln!(out, "berries per image: none");
    } else {
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let _ = writeln!(
            out,
            "berries per image: mean {mean:.2}, median {}, range {}-{}, total {}",
            median(&counts),
            counts[0],
            counts[counts.len() - 1],
            counts.iter().sum::<f64>()
        );
    }

    let mut total = FilterReport::default();
    for r in reports.values() {
        total.input += r.input;
        total.removed_multi += r.removed_multi;
        total.removed_metric += r.removed_metric;
        total.removed_efd_pca += r.removed_efd_pca;
        total.kept += r.kept;
    }
    let _ = writeln!(out, "filter attrition over {} masks:", total.input);
    for (name, n) in [
        ("multi_berry", total.removed_multi),
        ("metric", total.removed_metric),
        ("efd_pca", total.removed_efd_pca),
        ("kept", total.kept),
    ] {
        let _ = writeln!(out, "  {name:<12} {n:>8} ({:.1}%)", pct(n, total.input));
    }
    if total.kept == 0 {
        let _ = writeln!(out, "  attrition reached 100%: no berries kept");
    }

    if let Some(fit) = read_json::<RegressionFit>(results, "count_fit.json")? {
        let _ = writeln!(
            out,
            "count correction: true = {:.4} + {:.4} * best-angle count (adj R2 {:.4}, n {})",
            fit.beta0, fit.beta1, fit.adj_r2, fit.n
        );
    }

    let rep = results.join("repeatability.csv");
    if rep.exists() {
        let _ = writeln!(out, "repeatability:");
        let mut rdr = csv::Reader::from_path(rep)?;
        for row in rdr.records() {
            let row = row?;
            let value = if row[3].is_empty() { "n/a".to_string() } else { format!("{:.3}", row[3].parse::<f64>().unwrap_or(f64::NAN)) };
            let _ = writeln!(out, "  {:<18} {value}", &row[0]);
        }
    }
    for w in &manifest.population_warnings {
        let _ = writeln!(out, "note: {w}");
    }
    Ok(out)
}
