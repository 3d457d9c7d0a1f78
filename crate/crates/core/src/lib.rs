//! Batch morphometrics for grape-cluster instance masks.
//!
//! The engine consumes instance-segmentation mask files (COCO run-length
//! encoded), reduces them to true-berry masks and derives per-berry features
//! and cluster-architecture descriptors: ECDF profiles of berry positions,
//! concave hulls and compactness, hull-shape PCA, occlusion-corrected berry
//! counts and repeatability statistics.
//!
//! Module map:
//!
//! * [`mask_io`] - RLE codec, mask files, contour tracing, colour sampling
//! * [`morphometry`] - polygon geometry, elliptic Fourier descriptors, PCA, IoU
//! * [`berry_filter`] - multi-berry removal, metric filters, EFD/PCA outliers
//! * [`architecture`] - ECDFs, concave hulls, compactness, hull-shape PCA
//! * [`stats`] - regression correction, correlation, repeatability
//! * [`synth`] - labelled 2D scenes and 3D sphere-packed clusters
//! * [`cli`] - batch orchestration behind the `berrymorph` binary

pub mod architecture;
pub mod berry_filter;
pub mod cli;
pub mod error;
pub mod mask_io;
pub mod morphometry;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// A point in image (pixel) or millimetre coordinates; `y` grows downward.
pub type Point = (f64, f64);
