//! Cluster-level descriptors computed from filtered berries.

mod angle;
mod cluster;
mod ecdf;
mod hull;

pub use angle::{angle_variation, select_max_angle, AngleSeries, AngleVariation};
pub use cluster::{analyze_cluster, hull_features, hull_shape_pca, ArchitectureConfig, ClusterArchitecture, HullShapePca};
pub use ecdf::{ecdf_class, ecdf_descriptors, ecdf_profile, Axis, EcdfClass, EcdfProfile, ECDF_SAMPLES};
pub use hull::{compactness, concave_hull, hull_metrics, HullMetrics, HullPolygon};
