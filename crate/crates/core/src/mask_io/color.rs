use std::path::Path;

use image::RgbImage;

use super::grid::{BitGrid, MaskPatch};
use crate::error::{Error, Result};

pub fn load_raster(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    Ok(img.to_rgb8())
}

fn median(values: &mut [u8]) -> u8 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        ((values[n / 2 - 1] as u16 + values[n / 2] as u16 + 1) / 2) as u8
    }
}

fn median_over(raster: &RgbImage, pixels: impl Iterator<Item = (usize, usize)>) -> Result<[u8; 3]> {
    let mut channels: [Vec<u8>; 3] = Default::default();
    for (row, col) in pixels {
        let p = raster.get_pixel(col as u32, row as u32);
        for k in 0..3 {
            channels[k].push(p[k]);
        }
    }
    if channels[0].is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok([
        median(&mut channels[0]),
        median(&mut channels[1]),
        median(&mut channels[2]),
    ])
}

/// Channel-wise median colour of the foreground pixels. Even-sized samples use
/// the rounded mean of the two middle values.
pub fn median_color(raster: &RgbImage, grid: &BitGrid) -> Result<[u8; 3]> {
    if (raster.height() as usize) < grid.height() || (raster.width() as usize) < grid.width() {
        return Err(Error::DimensionMismatch(format!(
            "raster {}x{} smaller than mask {}x{}",
            raster.height(),
            raster.width(),
            grid.height(),
            grid.width()
        )));
    }
    median_over(raster, grid.foreground())
}

/// [`median_color`] for a patch in full-image coordinates.
pub fn median_color_patch(raster: &RgbImage, patch: &MaskPatch) -> Result<[u8; 3]> {
    if (raster.height() as usize) < patch.image_height || (raster.width() as usize) < patch.image_width {
        return Err(Error::DimensionMismatch(format!(
            "raster {}x{} smaller than mask image {}x{}",
            raster.height(),
            raster.width(),
            patch.image_height,
            patch.image_width
        )));
    }
    median_over(
        raster,
        patch.grid.foreground().map(|(r, c)| (r + patch.y0, c + patch.x0)),
    )
}
