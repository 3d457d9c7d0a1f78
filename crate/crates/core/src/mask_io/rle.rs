//! COCO run-length codec with integer-list counts.
//!
//! Pixels are visited column-major (`k = col * height + row`); runs alternate
//! background/foreground starting with background, so a mask whose first pixel
//! is foreground begins with a zero-length run.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::grid::{BitGrid, MaskPatch};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct RleWire {
    size: [usize; 2],
    counts: Vec<u32>,
}

impl Serialize for RleMask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RleWire {
            size: [self.height, self.width],
            counts: self.counts.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RleMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = RleWire::deserialize(d)?;
        Ok(RleMask {
            height: w.size[0],
            width: w.size[1],
            counts: w.counts,
        })
    }
}

impl RleMask {
    /// Checks the run-sum and zero-run invariants.
    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.iter().map(|&c| c as u64).sum();
        let expected = self.height as u64 * self.width as u64;
        if total != expected {
            return Err(Error::MalformedRle(format!(
                "run lengths sum to {total}, expected {}x{} = {expected}",
                self.height, self.width
            )));
        }
        if let Some(i) = self.counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::MalformedRle(format!("zero-length run at index {}", i + 1)));
        }
        Ok(())
    }

    /// Sum of the odd-indexed (foreground) runs.
    pub fn foreground_count(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    /// Tight `(x, y, w, h)` bounding box of the foreground, `None` when empty.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let h = self.height;
        if h == 0 {
            return None;
        }
        let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0usize, usize::MAX, 0usize);
        let mut pos = 0usize;
        for (i, &c) in self.counts.iter().enumerate() {
            let c = c as usize;
            if i % 2 == 1 && c > 0 {
                let first = pos;
                let last = pos + c - 1;
                let (fc, fr) = (first / h, first % h);
                let (lc, lr) = (last / h, last % h);
                x0 = x0.min(fc);
                x1 = x1.max(lc);
                if fc == lc {
                    y0 = y0.min(fr);
                    y1 = y1.max(lr);
                } else {
                    // a run crossing a column boundary touches both the last
                    // and the first row
                    y0 = 0;
                    y1 = h - 1;
                }
            }
            pos += c;
        }
        if x0 == usize::MAX {
            None
        } else {
            Some((x0, y0, x1 - x0 + 1, y1 - y0 + 1))
        }
    }
}

/// Decodes to a full-size grid.
pub fn decode_rle(rle: &RleMask) -> Result<BitGrid> {
    rle.validate()?;
    let h = rle.height;
    let mut grid = BitGrid::new(rle.height, rle.width);
    let mut pos = 0usize;
    for (i, &c) in rle.counts.iter().enumerate() {
        let c = c as usize;
        if i % 2 == 1 {
            for k in pos..pos + c {
                grid.set(k % h, k / h, true);
            }
        }
        pos += c;
    }
    Ok(grid)
}

/// Decodes only the foreground bounding box. Cost is proportional to the
/// number of runs plus the patch area, not the image size.
pub fn decode_rle_patch(rle: &RleMask) -> Result<Option<MaskPatch>> {
    rle.validate()?;
    let Some((x0, y0, w, hh)) = rle.bbox() else {
        return Ok(None);
    };
    let h = rle.height;
    let mut grid = BitGrid::new(hh, w);
    let mut pos = 0usize;
    for (i, &c) in rle.counts.iter().enumerate() {
        let c = c as usize;
        if i % 2 == 1 {
            for k in pos..pos + c {
                grid.set(k % h - y0, k / h - x0, true);
            }
        }
        pos += c;
    }
    Ok(Some(MaskPatch {
        x0,
        y0,
        image_height: rle.height,
        image_width: rle.width,
        grid,
    }))
}

/// Encodes a full-size grid.
pub fn encode_rle(grid: &BitGrid) -> RleMask {
    let (h, w) = (grid.height(), grid.width());
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for col in 0..w {
        for row in 0..h {
            let v = grid.get(row, col);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        height: h,
        width: w,
        counts,
    }
}

/// Encodes a patch as a full-image RLE without materialising the full grid.
pub fn encode_patch(patch: &MaskPatch) -> RleMask {
    let h = patch.image_height;
    let (ph, pw) = (patch.grid.height(), patch.grid.width());
    let mut counts = Vec::new();
    let mut current = false;
    // Background pixels accumulated before the first patch column.
    let mut run: u64 = (patch.x0 * h) as u64;
    for col in 0..pw {
        // rows above the patch in this column
        let above = patch.y0 as u64;
        let below = (h - patch.y0 - ph) as u64;
        if current && above > 0 {
            counts.push(run as u32);
            run = 0;
            current = false;
        }
        if !current {
            run += above;
        }
        for row in 0..ph {
            let v = patch.grid.get(row, col);
            if v != current {
                counts.push(run as u32);
                run = 0;
                current = v;
            }
            run += 1;
        }
        if below > 0 {
            if current {
                counts.push(run as u32);
                run = 0;
                current = false;
            }
            run += below;
        }
    }
    let trailing = ((patch.image_width - patch.x0 - pw) * h) as u64;
    if trailing > 0 {
        if current {
            counts.push(run as u32);
            run = 0;
        }
        run += trailing;
    }
    counts.push(run as u32);
    RleMask {
        height: h,
        width: patch.image_width,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn leading_zero_run_is_all_foreground() {
        let g = decode_rle(&RleMask { height: 2, width: 2, counts: vec![0, 4] }).unwrap();
        assert_eq!(g.count(), 4);
    }

    #[test]
    fn single_background_run() {
        let g = decode_rle(&RleMask { height: 2, width: 2, counts: vec![4] }).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn column_major_order() {
        let g = decode_rle(&RleMask { height: 3, width: 2, counts: vec![1, 2, 3] }).unwrap();
        let fg: Vec<_> = g.foreground().collect();
        assert_eq!(fg, vec![(1, 0), (2, 0)]);
    }

    #[test]
    fn encode_trivial_grids() {
        assert_eq!(encode_rle(&BitGrid::new(2, 2)).counts, vec![4]);
        assert_eq!(encode_rle(&BitGrid::from_fn(2, 2, |_, _| true)).counts, vec![0, 4]);
    }

    #[test]
    fn run_sum_mismatch_is_rejected() {
        let err = decode_rle(&RleMask { height: 2, width: 2, counts: vec![1, 2] }).unwrap_err();
        assert!(matches!(err, Error::MalformedRle(_)));
        let err = decode_rle(&RleMask { height: 2, width: 2, counts: vec![1, 0, 3] }).unwrap_err();
        assert!(matches!(err, Error::MalformedRle(_)));
    }

    #[test]
    fn bbox_across_columns() {
        // 4x3, foreground at (row 3, col 0) and (row 0, col 1)
        let rle = RleMask { height: 4, width: 3, counts: vec![3, 2, 7] };
        assert_eq!(rle.bbox(), Some((0, 0, 2, 4)));
        let rle = RleMask { height: 4, width: 3, counts: vec![5, 1, 6] };
        assert_eq!(rle.bbox(), Some((1, 1, 1, 1)));
    }

    fn grid_strategy() -> impl Strategy<Value = BitGrid> {
        (1usize..12, 1usize..12, any::<u64>(), 0.0f64..1.0).prop_map(|(h, w, seed, p)| {
            let mut state = seed | 1;
            BitGrid::from_fn(h, w, |_, _| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 1000) as f64 / 1000.0 < p
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip(g in grid_strategy()) {
            let rle = encode_rle(&g);
            rle.validate().unwrap();
            prop_assert_eq!(rle.foreground_count() as usize, g.count());
            prop_assert_eq!(&decode_rle(&rle).unwrap(), &g);
            prop_assert_eq!(encode_rle(&decode_rle(&rle).unwrap()), rle.clone());
            if let Some(patch) = MaskPatch::from_full(&g) {
                prop_assert_eq!(encode_patch(&patch), rle.clone());
                prop_assert_eq!(decode_rle_patch(&rle).unwrap().unwrap(), patch.clone());
                prop_assert_eq!(rle.bbox().unwrap(), patch.bbox());
            } else {
                prop_assert!(rle.bbox().is_none());
            }
        }
    }
}
