//! Ground-truth scene generators: labelled single-view mask scenes and
//! sphere-packed clusters viewed from four angles.

mod raster;
mod scene2d;
mod scene3d;

pub use raster::{disk, ellipse, polyline, raster_fn, rectangle, subtract, union};
pub use scene2d::{gen_scene_2d, Decoys, LabeledMask, Layout, MaskLabel, SceneSpec, SceneTruth, SynthScene};
#[cfg(test)]
pub(crate) use scene2d::zigzag;
pub use scene3d::{
    gen_scene_3d, project_visibility, project_with, view_scene, visible_counts, Projection, Scene3d, Sphere,
    VisibleBerry, VIEW_ANGLES, VISIBILITY_THRESHOLD,
};
