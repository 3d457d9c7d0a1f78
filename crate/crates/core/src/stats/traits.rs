use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regression::pearson;
use super::repeatability::{repeatability, RepeatabilityResult};
use crate::error::{Error, Result};

pub const TRAIT_NAMES: [&str; 18] = [
    "berry_count",
    "berry_area",
    "berry_length",
    "berry_width",
    "compactness",
    "ecdf_x25",
    "ecdf_x50",
    "ecdf_x75",
    "ecdf_y25",
    "ecdf_y50",
    "ecdf_y75",
    "hull_pc1",
    "hull_pc2",
    "cluster_area",
    "cluster_length",
    "cluster_width",
    "cluster_perimeter",
    "cluster_aspect",
];

pub const N_TRAITS: usize = TRAIT_NAMES.len();

const KEY_COLUMNS: [&str; 5] = ["genotype", "block", "vine", "cluster", "angle"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TraitKey {
    pub genotype: String,
    pub block: String,
    pub vine: String,
    pub cluster: String,
    pub angle: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitRow {
    pub key: TraitKey,
    /// In `TRAIT_NAMES` order; `None` when not measurable.
    pub values: [Option<f64>; N_TRAITS],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraitTable {
    pub rows: Vec<TraitRow>,
}

pub fn trait_index(name: &str) -> Option<usize> {
    TRAIT_NAMES.iter().position(|&n| n == name)
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl TraitTable {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.rows {
            if !seen.insert(&r.key) {
                return Err(Error::InvalidArgument(format!("duplicate trait row {:?}", r.key)));
            }
            if r.values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite trait in row {:?}", r.key)));
            }
        }
        Ok(())
    }

    /// Values of one trait with their genotype labels, skipping gaps.
    pub fn column(&self, trait_idx: usize) -> (Vec<f64>, Vec<&str>) {
        self.rows
            .iter()
            .filter_map(|r| r.values[trait_idx].map(|v| (v, r.key.genotype.as_str())))
            .unzip()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(KEY_COLUMNS.iter().chain(TRAIT_NAMES.iter()))?;
        for r in &self.rows {
            let mut rec = vec![
                r.key.genotype.clone(),
                r.key.block.clone(),
                r.key.vine.clone(),
                r.key.cluster.clone(),
                r.key.angle.to_string(),
            ];
            rec.extend(r.values.iter().map(|&v| fmt_value(v)));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let expected: Vec<&str> = KEY_COLUMNS.iter().chain(TRAIT_NAMES.iter()).copied().collect();
        if header != expected {
            return Err(Error::InvalidArgument(format!("trait table header {header:?} does not match {expected:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let angle = rec[4]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad angle {:?}", &rec[4])))?;
            let mut values = [None; N_TRAITS];
            for (i, v) in values.iter_mut().enumerate() {
                let cell = rec[5 + i].trim();
                if !cell.is_empty() {
                    *v = Some(cell.parse().map_err(|_| Error::InvalidArgument(format!("bad value {cell:?}")))?);
                }
            }
            rows.push(TraitRow {
                key: TraitKey {
                    genotype: rec[0].to_string(),
                    block: rec[1].to_string(),
                    vine: rec[2].to_string(),
                    cluster: rec[3].to_string(),
                    angle,
                },
                values,
            });
        }
        let t = TraitTable { rows };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenotypeStats {
    pub genotype: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitStats {
    pub name: String,
    /// Ascending by mean, ties by genotype name.
    pub genotypes: Vec<GenotypeStats>,
    /// `None` when there are too few groups or replicates.
    pub repeatability: Option<RepeatabilityResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitSummary {
    pub traits: Vec<TraitStats>,
    /// Pairwise-complete Pearson matrix; `None` where undefined.
    pub correlations: Vec<Vec<Option<f64>>>,
}

pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn genotype_stats(genotype: &str, mut v: Vec<f64>) -> GenotypeStats {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    GenotypeStats {
        genotype: genotype.to_string(),
        n,
        mean,
        median: median(&v),
        min: v[0],
        max: v[n - 1],
        sd,
    }
}

fn trait_stats(t: &TraitTable, idx: usize) -> TraitStats {
    let (values, labels) = t.column(idx);
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (&v, &l) in values.iter().zip(&labels) {
        groups.entry(l).or_default().push(v);
    }
    let mut genotypes: Vec<GenotypeStats> = groups.into_iter().map(|(g, v)| genotype_stats(g, v)).collect();
    genotypes.sort_by(|a, b| a.mean.total_cmp(&b.mean).then_with(|| a.genotype.cmp(&b.genotype)));
    TraitStats {
        name: TRAIT_NAMES[idx].to_string(),
        genotypes,
        repeatability: repeatability(&values, &labels).ok(),
    }
}

fn pairwise(t: &TraitTable, i: usize, j: usize) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = t
        .rows
        .iter()
        .filter_map(|r| Some((r.values[i]?, r.values[j]?)))
        .unzip();
    pearson(&x, &y).ok()
}

/// Per-genotype distributions, repeatability per trait and the trait
/// correlation matrix.
pub fn trait_summary(t: &TraitTable) -> Result<TraitSummary> {
    if t.rows.is_empty() {
        return Err(Error::InsufficientData("trait table is empty".into()));
    }
    t.validate()?;
    let traits: Vec<TraitStats> = (0..N_TRAITS).into_par_iter().map(|i| trait_stats(t, i)).collect();
    let mut correlations = vec![vec![None; N_TRAITS]; N_TRAITS];
    let upper: Vec<(usize, usize, Option<f64>)> = (0..N_TRAITS)
        .flat_map(|i| (i..N_TRAITS).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| (i, j, pairwise(t, i, j)))
        .collect();
    for (i, j, r) in upper {
        correlations[i][j] = r;
        correlations[j][i] = r;
    }
    Ok(TraitSummary { traits, correlations })
}

/// Correlation matrix as CSV with a leading `trait` column.
pub fn write_correlations_csv<W: Write>(s: &TraitSummary, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("trait").chain(TRAIT_NAMES.iter().copied()))?;
    for (i, row) in s.correlations.iter().enumerate() {
        let mut rec = vec![TRAIT_NAMES[i].to_string()];
        rec.extend(row.iter().map(|&v| fmt_value(v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_repeatability_csv<W: Write>(s: &TraitSummary, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trait", "var_g", "var_e", "repeatability", "n_groups", "n0"])?;
    for t in &s.traits {
        let r = t.repeatability;
        out.write_record([
            t.name.clone(),
            fmt_value(r.map(|r| r.var_g)),
            fmt_value(r.map(|r| r.var_e)),
            fmt_value(r.map(|r| r.repeatability)),
            r.map(|r| r.n_groups.to_string()).unwrap_or_default(),
            fmt_value(r.map(|r| r.n_per_group_effective)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn key(g: usize, rep: usize) -> TraitKey {
        TraitKey {
            genotype: format!("G{g}"),
            block: "B1".into(),
            vine: "V1".into(),
            cluster: format!("C{rep}"),
            angle: 0,
        }
    }

    fn table(f: impl Fn(usize, usize) -> [Option<f64>; N_TRAITS], groups: usize, reps: usize) -> TraitTable {
        TraitTable {
            rows: (0..groups)
                .flat_map(|g| (0..reps).map(move |r| (g, r)))
                .map(|(g, r)| TraitRow { key: key(g, r), values: f(g, r) })
                .collect(),
        }
    }

    #[test]
    fn csv_round_trip_keeps_gaps() {
        let t = table(
            |g, r| {
                let mut v = [Some(g as f64 + 0.25 * r as f64); N_TRAITS];
                v[3] = None;
                v
            },
            3,
            2,
        );
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with("genotype,block,vine,cluster,angle,berry_count,"));
        assert_eq!(TraitTable::read_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn duplicates_and_bad_headers_rejected() {
        let mut t = table(|_, _| [Some(1.0); N_TRAITS], 2, 1);
        t.rows[1].key = t.rows[0].key.clone();
        assert!(t.validate().is_err());
        assert!(TraitTable::read_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(trait_summary(&TraitTable::default()).is_err());
    }

    #[test]
    fn separated_trait_and_duplicate_columns() {
        let t = table(
            |g, r| {
                let mut v = [None; N_TRAITS];
                v[0] = Some(10.0 * g as f64);
                v[1] = Some(g as f64 + r as f64);
                v[2] = v[1];
                v
            },
            4,
            3,
        );
        let s = trait_summary(&t).unwrap();
        assert_eq!(s.traits[0].repeatability.unwrap().repeatability, 1.0);
        assert_eq!(s.correlations[1][2], Some(1.0));
        assert_eq!(s.correlations[2][1], Some(1.0));
        assert_eq!(s.correlations[0][0], Some(1.0));
        assert!(s.correlations[5][5].is_none());
        assert!(s.traits[5].repeatability.is_none());
    }

    #[test]
    fn genotypes_ordered_by_mean() {
        let t = table(|g, _| [Some(((g * 7) % 5) as f64); N_TRAITS], 5, 2);
        let s = trait_summary(&t).unwrap();
        let means: Vec<f64> = s.traits[0].genotypes.iter().map(|g| g.mean).collect();
        assert!(means.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(s.traits[0].genotypes[0].n, 2);
    }

    #[test]
    fn planted_traits_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let planted = [0.2, 0.5, 0.8];
        let mut rows = Vec::new();
        for g in 0..150 {
            let effects: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            for r in 0..5 {
                let mut v = [None; N_TRAITS];
                for (i, &h) in planted.iter().enumerate() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v[i] = Some(effects[i] * f64::sqrt(h) + e * f64::sqrt(1.0 - h));
                }
                rows.push(TraitRow { key: key(g, r), values: v });
            }
        }
        let s = trait_summary(&TraitTable { rows }).unwrap();
        for (i, &h) in planted.iter().enumerate() {
            let got = s.traits[i].repeatability.unwrap().repeatability;
            assert!((got - h).abs() < 0.08, "trait {i}: {got} vs {h}");
        }
        let mut buf = Vec::new();
        write_correlations_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), N_TRAITS + 1);
        let mut buf = Vec::new();
        write_repeatability_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), N_TRAITS + 1);
    }
}
