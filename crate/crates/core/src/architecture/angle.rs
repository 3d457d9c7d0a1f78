use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-angle results for one physical cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSeries {
    pub cluster_id: String,
    /// Degrees, distinct.
    pub angles: Vec<u32>,
    pub counts: Vec<usize>,
    pub max_berry_area: Vec<f64>,
}

impl AngleSeries {
    pub fn validate(&self) -> Result<()> {
        let n = self.angles.len();
        if self.counts.len() != n || self.max_berry_area.len() != n {
            return Err(Error::InvalidArgument("angle series columns differ in length".into()));
        }
        for (i, a) in self.angles.iter().enumerate() {
            if self.angles[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("angle {a} repeated")));
            }
        }
        if self.counts.contains(&0) {
            return Err(Error::InvalidArgument("angle counts must be positive".into()));
        }
        Ok(())
    }
}

/// Ratios relative to the 0° view, in the series' angle order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleVariation {
    pub cluster_id: String,
    pub angles: Vec<u32>,
    pub count_ratio: Vec<f64>,
    pub area_ratio: Vec<f64>,
}

pub fn angle_variation(s: &AngleSeries) -> Result<AngleVariation> {
    s.validate()?;
    if s.angles.len() < 2 {
        return Err(Error::InsufficientData("angle variation needs at least 2 angles".into()));
    }
    let base = s
        .angles
        .iter()
        .position(|&a| a == 0)
        .ok_or_else(|| Error::InvalidArgument(format!("cluster {} has no 0 degree view", s.cluster_id)))?;
    let c0 = s.counts[base] as f64;
    let a0 = s.max_berry_area[base];
    Ok(AngleVariation {
        cluster_id: s.cluster_id.clone(),
        angles: s.angles.clone(),
        count_ratio: s.counts.iter().map(|&c| c as f64 / c0).collect(),
        area_ratio: s
            .max_berry_area
            .iter()
            .map(|&a| if a0 > 0.0 { a / a0 } else { f64::NAN })
            .collect(),
    })
}

/// Angle with the largest count; ties go to the smallest angle.
pub fn select_max_angle(s: &AngleSeries) -> Result<(u32, usize)> {
    s.validate()?;
    s.angles
        .iter()
        .copied()
        .zip(s.counts.iter().copied())
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .ok_or_else(|| Error::InsufficientData("empty angle series".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(angles: &[u32], counts: &[usize]) -> AngleSeries {
        AngleSeries {
            cluster_id: "c".into(),
            angles: angles.to_vec(),
            counts: counts.to_vec(),
            max_berry_area: counts.iter().map(|&c| c as f64 * 2.0).collect(),
        }
    }

    #[test]
    fn ratios_relative_to_zero() {
        let v = angle_variation(&series(&[0, 90, 180, 270], &[40, 60, 40, 60])).unwrap();
        assert_eq!(v.count_ratio, vec![1.0, 1.5, 1.0, 1.5]);
        assert_eq!(v.area_ratio, vec![1.0, 1.5, 1.0, 1.5]);
        let shuffled = angle_variation(&series(&[90, 0], &[30, 20])).unwrap();
        assert_eq!(shuffled.count_ratio, vec![1.5, 1.0]);
    }

    #[test]
    fn variation_errors() {
        assert!(angle_variation(&series(&[90, 180], &[1, 2])).is_err());
        assert!(angle_variation(&series(&[0], &[1])).is_err());
        assert!(angle_variation(&series(&[0, 0], &[1, 2])).is_err());
        assert!(angle_variation(&series(&[0, 90], &[0, 2])).is_err());
    }

    #[test]
    fn max_angle() {
        assert_eq!(select_max_angle(&series(&[0, 90, 180, 270], &[40, 60, 40, 55])).unwrap(), (90, 60));
        assert_eq!(select_max_angle(&series(&[0, 90, 180, 270], &[5, 5, 5, 5])).unwrap(), (0, 5));
        assert_eq!(select_max_angle(&series(&[270, 90], &[5, 5])).unwrap(), (90, 5));
        assert_eq!(select_max_angle(&series(&[180], &[7])).unwrap(), (180, 7));
        assert!(select_max_angle(&series(&[], &[])).is_err());
    }
}
