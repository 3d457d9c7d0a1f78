use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-way random-effects variance components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityResult {
    pub var_g: f64,
    pub var_e: f64,
    pub repeatability: f64,
    pub n_groups: usize,
    /// Effective group size `n0`.
    pub n_per_group_effective: f64,
}

/// ANOVA sums of squares and degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaTable {
    pub ss_between: f64,
    pub ss_within: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub n0: f64,
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaTable> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    if k < 2 {
        return Err(Error::InsufficientData(format!("repeatability needs at least 2 groups, got {k}")));
    }
    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    if n_total <= k {
        return Err(Error::InsufficientData("repeatability needs replicated observations".into()));
    }
    if groups.iter().flat_map(|g| g.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("observations must be finite".into()));
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n_total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in &groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let n = n_total as f64;
    let sum_sq: f64 = groups.iter().map(|g| (g.len() * g.len()) as f64).sum();
    Ok(AnovaTable {
        ss_between,
        ss_within,
        df_between: (k - 1) as f64,
        df_within: n - k as f64,
        n0: (n - sum_sq / n) / (k - 1) as f64,
    })
}

fn components(t: &AnovaTable, n_groups: usize) -> RepeatabilityResult {
    let ms_between = t.ss_between / t.df_between;
    let ms_within = if t.df_within > 0.0 { t.ss_within / t.df_within } else { 0.0 };
    let var_g = ((ms_between - ms_within) / t.n0).max(0.0);
    let var_e = ms_within;
    let repeatability = if var_g <= 0.0 {
        0.0
    } else if var_e <= 0.0 {
        1.0
    } else {
        (var_g / (var_g + var_e)).clamp(0.0, 1.0)
    };
    RepeatabilityResult {
        var_g,
        var_e,
        repeatability,
        n_groups,
        n_per_group_effective: t.n0,
    }
}

/// Repeatability from observations already split into groups.
pub fn repeatability_groups(groups: &[Vec<f64>]) -> Result<RepeatabilityResult> {
    let t = one_way_anova(groups)?;
    Ok(components(&t, groups.iter().filter(|g| !g.is_empty()).count()))
}

fn split<'a>(values: &[f64], labels: &[&'a str]) -> Result<BTreeMap<&'a str, Vec<f64>>> {
    if values.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} values, {} labels", values.len(), labels.len())));
    }
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (&v, &l) in values.iter().zip(labels) {
        groups.entry(l).or_default().push(v);
    }
    Ok(groups)
}

/// One-way model with genotype as the random effect.
pub fn repeatability(values: &[f64], genotypes: &[&str]) -> Result<RepeatabilityResult> {
    let groups: Vec<Vec<f64>> = split(values, genotypes)?.into_values().collect();
    repeatability_groups(&groups)
}

/// Genotype random effect with fixed block effects removed first.
/// Block means are subtracted and the within-genotype degrees of freedom
/// reduced by `blocks - 1`.
pub fn repeatability_blocked(values: &[f64], genotypes: &[&str], blocks: &[&str]) -> Result<RepeatabilityResult> {
    let by_block = split(values, blocks)?;
    let grand = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let block_mean: BTreeMap<&str, f64> = by_block
        .iter()
        .map(|(&b, v)| (b, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let adjusted: Vec<f64> = values.iter().zip(blocks).map(|(v, b)| v - block_mean[b] + grand).collect();
    let groups: Vec<Vec<f64>> = split(&adjusted, genotypes)?.into_values().collect();
    let mut t = one_way_anova(&groups)?;
    t.df_within -= (by_block.len().saturating_sub(1)) as f64;
    if t.df_within <= 0.0 {
        return Err(Error::InsufficientData("no residual degrees of freedom after block adjustment".into()));
    }
    Ok(components(&t, groups.len()))
}
