use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// Number of samples in a profile.
pub const ECDF_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    /// Grows from the peduncle (top) to the tip.
    Y,
}

/// Cumulative share of berries at scaled coordinates `1..=100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfProfile {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl EcdfProfile {
    /// Value at scaled coordinate `t` in `1..=100`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }
}

/// Coordinates min-max scaled to `[0, 100]`; `F(t)` counts berries with
/// scaled coordinate `<= t`.
pub fn ecdf_profile(centroids: &[Point], axis: Axis) -> Result<EcdfProfile> {
    let coords: Vec<f64> = centroids
        .iter()
        .map(|p| match axis {
            Axis::X => p.0,
            Axis::Y => p.1,
        })
        .collect();
    if coords.len() < 2 {
        return Err(Error::InsufficientData("ECDF needs at least 2 berries".into()));
    }
    let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 0.0) {
        return Err(Error::Degenerate("berry centroids have zero extent on the axis".into()));
    }
    let mut scaled: Vec<f64> = coords.iter().map(|c| (c - lo) / (hi - lo) * 100.0).collect();
    scaled.sort_by(f64::total_cmp);
    let n = scaled.len() as f64;
    let mut values = Vec::with_capacity(ECDF_SAMPLES);
    let mut k = 0;
    for t in 1..=ECDF_SAMPLES {
        let limit = t as f64 + 1e-9;
        while k < scaled.len() && scaled[k] <= limit {
            k += 1;
        }
        values.push(k as f64 / n);
    }
    values[ECDF_SAMPLES - 1] = 1.0;
    Ok(EcdfProfile { axis, values })
}

/// `(F(25), F(50), F(75))`.
pub fn ecdf_descriptors(p: &EcdfProfile) -> (f64, f64, f64) {
    (p.at(25), p.at(50), p.at(75))
}

/// Profile shape classes used to colour ECDF plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EcdfClass {
    /// Berries concentrated towards low coordinates.
    Green,
    /// Berries concentrated towards high coordinates.
    Purple,
    /// Close to uniform.
    Gray,
    Unclassified,
}

pub fn ecdf_class(desc: (f64, f64, f64)) -> EcdfClass {
    let (f25, f50, f75) = desc;
    if f25 > 0.3 && f75 > 0.8 {
        EcdfClass::Green
    } else if f25 < 0.2 && f75 < 0.7 {
        EcdfClass::Purple
    } else if (0.2..=0.3).contains(&f25) && (0.45..=0.55).contains(&f50) && (0.7..=0.8).contains(&f75) {
        EcdfClass::Gray
    } else {
        EcdfClass::Unclassified
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counting_oracle(xs: &[f64], t: f64) -> f64 {
        let (lo, hi) = xs.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        xs.iter().filter(|&&x| (x - lo) / (hi - lo) * 100.0 <= t + 1e-9).count() as f64 / xs.len() as f64
    }

    #[test]
    fn uniform_placement_is_diagonal() {
        let pts: Vec<Point> = (0..=100).map(|i| (0.0, i as f64)).collect();
        let p = ecdf_profile(&pts, Axis::Y).unwrap();
        for t in 1..=100 {
            assert!((p.at(t) - t as f64 / 100.0).abs() <= 0.01);
        }
        let (a, b, c) = ecdf_descriptors(&p);
        assert!((a - 0.25).abs() <= 0.01 && (b - 0.5).abs() <= 0.01 && (c - 0.75).abs() <= 0.01);
        assert_eq!(ecdf_class((a, b, c)), EcdfClass::Gray);
    }

    #[test]
    fn step_function() {
        let n = 20;
        let mut pts: Vec<Point> = (0..n - 1).map(|_| (0.0, 0.0)).collect();
        pts.push((100.0, 0.0));
        let p = ecdf_profile(&pts, Axis::X).unwrap();
        for t in 1..=99 {
            assert_eq!(p.at(t), (n - 1) as f64 / n as f64);
        }
        assert_eq!(p.at(100), 1.0);
    }

    #[test]
    fn left_skew_reads_three_quarters_at_25() {
        let mut pts = Vec::new();
        for i in 0..75 {
            pts.push((i as f64 / 75.0 * 24.0, 0.0));
        }
        for i in 0..25 {
            pts.push((30.0 + i as f64 / 24.0 * 70.0, 0.0));
        }
        let p = ecdf_profile(&pts, Axis::X).unwrap();
        assert!((p.at(25) - 0.75).abs() < 0.011);
        assert_eq!(ecdf_class(ecdf_descriptors(&p)), EcdfClass::Green);
    }

    #[test]
    fn classes_on_constructed_descriptors() {
        assert_eq!(ecdf_class((0.35, 0.6, 0.85)), EcdfClass::Green);
        assert_eq!(ecdf_class((0.15, 0.4, 0.65)), EcdfClass::Purple);
        assert_eq!(ecdf_class((0.25, 0.5, 0.75)), EcdfClass::Gray);
        assert_eq!(ecdf_class((0.25, 0.6, 0.75)), EcdfClass::Unclassified);
        assert_eq!(ecdf_class((0.35, 0.6, 0.75)), EcdfClass::Unclassified);
    }

    #[test]
    fn errors() {
        assert!(ecdf_profile(&[(1.0, 2.0)], Axis::X).is_err());
        assert!(ecdf_profile(&[(1.0, 2.0), (1.0, 5.0)], Axis::X).is_err());
    }

    proptest! {
        #[test]
        fn monotone_terminal_one_and_matches_counting(xs in prop::collection::vec(-500.0f64..500.0, 2..80)) {
            prop_assume!(xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min) > 1e-6);
            let pts: Vec<Point> = xs.iter().map(|&x| (x, 0.0)).collect();
            let p = ecdf_profile(&pts, Axis::X).unwrap();
            prop_assert_eq!(p.values.len(), 100);
            prop_assert_eq!(p.at(100), 1.0);
            for w in p.values.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for t in 1..100 {
                prop_assert_eq!(p.at(t), counting_oracle(&xs, t as f64));
            }
        }

        #[test]
        fn mirror_identity(xs in prop::collection::vec(0.0f64..1000.0, 3..60)) {
            prop_assume!(xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min) > 1.0);
            let n = xs.len() as f64;
            let pts: Vec<Point> = xs.iter().map(|&x| (x, 0.0)).collect();
            let mirrored: Vec<Point> = xs.iter().map(|&x| (-x, 0.0)).collect();
            let f = ecdf_profile(&pts, Axis::X).unwrap();
            let g = ecdf_profile(&mirrored, Axis::X).unwrap();
            for t in 1..100 {
                prop_assert!((g.at(t) - (1.0 - f.at(100 - t))).abs() <= 1.0 / n + 1e-12);
            }
        }
    }
}
