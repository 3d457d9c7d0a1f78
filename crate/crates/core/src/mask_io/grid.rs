/// Dense binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BitGrid {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Self {
            height,
            width,
            bits,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    /// Like [`get`](Self::get) but out-of-range coordinates read as background.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.bits[row as usize * self.width + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// `(row, col)` of every foreground pixel in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / width, i % width))
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }
}

/// A mask restricted to the bounding box of its foreground, remembering where
/// that box sits inside the full image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPatch {
    /// Column of the patch's left edge in the full image.
    pub x0: usize,
    /// Row of the patch's top edge in the full image.
    pub y0: usize,
    pub image_height: usize,
    pub image_width: usize,
    pub grid: BitGrid,
}

impl MaskPatch {
    pub fn count(&self) -> usize {
        self.grid.count()
    }

    /// Full-image coordinate test.
    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.y0
            && col >= self.x0
            && row < self.y0 + self.grid.height()
            && col < self.x0 + self.grid.width()
            && self.grid.get(row - self.y0, col - self.x0)
    }

    /// Tight bounding box `(x, y, w, h)` of the foreground in image pixels.
    pub fn bbox(&self) -> (usize, usize, usize, usize) {
        (self.x0, self.y0, self.grid.width(), self.grid.height())
    }

    /// Number of pixels set in both patches.
    pub fn intersection(&self, other: &MaskPatch) -> usize {
        let x_lo = self.x0.max(other.x0);
        let y_lo = self.y0.max(other.y0);
        let x_hi = (self.x0 + self.grid.width()).min(other.x0 + other.grid.width());
        let y_hi = (self.y0 + self.grid.height()).min(other.y0 + other.grid.height());
        if x_lo >= x_hi || y_lo >= y_hi {
            return 0;
        }
        let mut n = 0;
        for row in y_lo..y_hi {
            for col in x_lo..x_hi {
                if self.grid.get(row - self.y0, col - self.x0)
                    && other.grid.get(row - other.y0, col - other.x0)
                {
                    n += 1;
                }
            }
        }
        n
    }

    /// Expands the patch into a full-image grid.
    pub fn to_full(&self) -> BitGrid {
        let mut full = BitGrid::new(self.image_height, self.image_width);
        for (row, col) in self.grid.foreground() {
            full.set(row + self.y0, col + self.x0, true);
        }
        full
    }

    /// Crops a full-image grid to its foreground bounding box. `None` when empty.
    pub fn from_full(grid: &BitGrid) -> Option<Self> {
        let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
        for (row, col) in grid.foreground() {
            r0 = r0.min(row);
            r1 = r1.max(row);
            c0 = c0.min(col);
            c1 = c1.max(col);
        }
        if r0 == usize::MAX {
            return None;
        }
        let sub = BitGrid::from_fn(r1 - r0 + 1, c1 - c0 + 1, |r, c| grid.get(r + r0, c + c0));
        Some(Self {
            x0: c0,
            y0: r0,
            image_height: grid.height(),
            image_width: grid.width(),
            grid: sub,
        })
    }
}
