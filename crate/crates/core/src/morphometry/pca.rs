//! Principal component analysis on the covariance of mean-centred rows.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One unit-length loading vector per component, in component order.
    pub loadings: Vec<Vec<f64>>,
    /// Component variances (sample covariance, `n - 1` denominator), descending.
    pub eigenvalues: Vec<f64>,
    /// Fraction of total variance per component.
    pub explained: Vec<f64>,
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.loadings.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Projects one observation onto every component.
    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.mean.len()
            )));
        }
        Ok(self
            .loadings
            .iter()
            .map(|l| l.iter().zip(row).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect())
    }
}

/// Fits a PCA model. Each loading vector's largest-magnitude entry is made
/// positive so repeated fits agree on signs.
pub fn pca_fit(rows: &[Vec<f64>]) -> Result<PcaModel> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("PCA needs at least 2 rows, got {n}")));
    }
    let p = rows[0].len();
    if p == 0 {
        return Err(Error::InsufficientData("PCA needs at least 1 feature".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != p) {
        return Err(Error::DimensionMismatch(format!("row {bad} has {} features, expected {p}", rows[bad].len())));
    }
    let mut mean = vec![0.0; p];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centred = DMatrix::from_fn(n, p, |i, j| rows[i][j] - mean[j]);
    let cov = (centred.transpose() * &centred) / (n as f64 - 1.0);
    let total: f64 = cov.diagonal().iter().sum();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut loadings = Vec::with_capacity(p);
    let mut eigenvalues = Vec::with_capacity(p);
    for &k in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() + 1e-12 { x } else { best });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        loadings.push(v);
        eigenvalues.push(eig.eigenvalues[k].max(0.0));
    }
    let explained = eigenvalues
        .iter()
        .map(|&l| if total > 0.0 { l / total } else { 0.0 })
        .collect();
    Ok(PcaModel {
        mean,
        loadings,
        eigenvalues,
        explained,
    })
}

/// Score matrix: one row of component scores per observation.
pub fn pca_scores(model: &PcaModel, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter().map(|r| model.project(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn points_on_a_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let m = pca_fit(&rows).unwrap();
        assert!((m.explained[0] - 1.0).abs() < 1e-12);
        assert!(m.eigenvalues[1].abs() < 1e-10);
        let l = &m.loadings[0];
        assert!((l[1] / l[0] - 2.0).abs() < 1e-9);
        assert!(l[1] > 0.0);
    }

    #[test]
    fn isotropic_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                vec![x, y]
            })
            .collect();
        let m = pca_fit(&rows).unwrap();
        for e in &m.explained {
            assert!((e - 0.5).abs() < 0.05);
        }
    }

    fn random_rows(seed: u64, n: usize, p: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..p).map(|j| { let z: f64 = StandardNormal.sample(&mut rng); z * (j + 1) as f64 }).collect::<Vec<f64>>())
            .collect()
    }

    #[test]
    fn full_rank_reconstruction_and_orthonormality() {
        let rows = random_rows(3, 30, 5);
        let m = pca_fit(&rows).unwrap();
        let scores = pca_scores(&m, &rows).unwrap();
        for (row, s) in rows.iter().zip(&scores) {
            for j in 0..5 {
                let rec: f64 = m.mean[j] + (0..5).map(|k| s[k] * m.loadings[k][j]).sum::<f64>();
                assert!((rec - row[j]).abs() < 1e-8);
            }
        }
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = m.loadings[a].iter().zip(&m.loadings[b]).map(|(x, y)| x * y).sum();
                assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let var_total: f64 = (0..5)
            .map(|j| rows.iter().map(|r| (r[j] - m.mean[j]).powi(2)).sum::<f64>() / 29.0)
            .sum();
        assert!((m.total_variance() - var_total).abs() < 1e-8 * var_total);
    }

    #[test]
    fn scores_of_mean_and_training_rows() {
        let rows = random_rows(5, 25, 4);
        let m = pca_fit(&rows).unwrap();
        assert!(m.project(&m.mean).unwrap().iter().all(|s| s.abs() < 1e-12));
        let scores = pca_scores(&m, &rows).unwrap();
        for k in 0..4 {
            let mean: f64 = scores.iter().map(|s| s[k]).sum::<f64>() / 25.0;
            assert!(mean.abs() < 1e-10);
        }
        // held-out row against a hand-written dot product
        let held = vec![1.0, -2.0, 0.5, 3.0];
        let s = m.project(&held).unwrap();
        let manual: f64 = (0..4).map(|j| (held[j] - m.mean[j]) * m.loadings[1][j]).sum();
        assert!((s[1] - manual).abs() < 1e-12);
        assert!(m.project(&[1.0]).is_err());
    }

    #[test]
    fn needs_two_rows() {
        assert!(pca_fit(&[vec![1.0, 2.0]]).is_err());
    }
}
