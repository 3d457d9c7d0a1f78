//! Mask ingestion: RLE codec, mask files, contours and colour sampling.

mod color;
mod contour;
mod grid;
mod maskfile;
mod rle;

pub use color::{load_raster, median_color, median_color_patch};
pub use contour::{convex_hull, extract_contour, extract_patch_contour, largest_component, Contour};
pub use grid::{BitGrid, MaskPatch};
pub use maskfile::{load_mask_file, parse_mask_file, to_json, write_mask_file, MaskFile, MaskRecord};
pub(crate) use maskfile::write_atomic;
pub use rle::{decode_rle, decode_rle_patch, encode_patch, encode_rle, RleMask};
pub(crate) use contour::dist;
#[cfg(test)]
pub(crate) use contour::signed_area;
