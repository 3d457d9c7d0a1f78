//! Labelled single-view mask scenes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::raster::{disk, ellipse, polyline, raster_fn, rectangle, union};
use crate::error::{Error, Result};
use crate::mask_io::{encode_patch, MaskFile, MaskPatch, MaskRecord};
use crate::Point;

/// Overall outline of the generated cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Cylindrical,
    Conical,
    Globular,
    /// Conical body plus a lateral lobe. `offset` is the lobe centre's
    /// lateral distance in body half-widths, `size` the fraction of berries
    /// placed in the lobe.
    Winged { offset: f64, size: f64 },
}

impl Layout {
    pub fn winged() -> Self {
        Layout::Winged {
            offset: 1.3,
            size: 0.3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layout::Cylindrical => "cylindrical",
            Layout::Conical => "conical",
            Layout::Globular => "globular",
            Layout::Winged { .. } => "winged",
        }
    }

    /// Length over width of the body outline.
    fn elongation(&self) -> f64 {
        match self {
            Layout::Cylindrical => 1.8,
            Layout::Conical | Layout::Winged { .. } => 1.6,
            Layout::Globular => 1.15,
        }
    }

    /// Body half-width at relative height `v` (0 = top), unit maximum.
    pub(crate) fn profile(&self, v: f64) -> f64 {
        if !(0.0..=1.0).contains(&v) {
            return 0.0;
        }
        let cap = (1.0 - (2.0 * v - 1.0).powi(6)).max(0.0).sqrt();
        match self {
            Layout::Cylindrical => cap,
            Layout::Conical | Layout::Winged { .. } => (1.0 - 0.6 * v) * cap,
            Layout::Globular => (1.0 - (2.0 * v - 1.0).powi(2)).max(0.0).sqrt(),
        }
    }
}

/// Decoy masks injected next to the berries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Decoys {
    /// Masks covering two neighbouring berries and the gap between them.
    pub unions: usize,
    /// Small blobs well outside the cluster.
    pub stains: usize,
    /// Thin zigzag stem pieces inside the cluster.
    pub rachis: usize,
    pub clamp: bool,
    pub reference: bool,
}

impl Default for Decoys {
    fn default() -> Self {
        Self {
            unions: 5,
            stains: 4,
            rachis: 3,
            clamp: true,
            reference: true,
        }
    }
}

impl Decoys {
    pub fn none() -> Self {
        Self {
            unions: 0,
            stains: 0,
            rachis: 0,
            clamp: false,
            reference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub berry_count: usize,
    /// Mean equivalent-disk radius.
    pub berry_radius_px: f64,
    /// Half-range of the uniform radius jitter.
    pub radius_jitter_px: f64,
    /// Berry ellipses draw their aspect ratio from `[1, max_berry_aspect]`.
    pub max_berry_aspect: f64,
    pub layout: Layout,
    pub decoys: Decoys,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub reference_diameter_px: f64,
    /// Physical size of one pixel; used to place 3D clusters.
    pub mm_per_px: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            berry_count: 60,
            berry_radius_px: 11.0,
            radius_jitter_px: 1.5,
            max_berry_aspect: 1.3,
            layout: Layout::Conical,
            decoys: Decoys::default(),
            seed: 0,
            width: 1200,
            height: 1400,
            reference_diameter_px: 160.0,
            mm_per_px: 0.5,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.berry_count == 0 {
            return bad("berry_count must be at least 1");
        }
        if !(self.berry_radius_px - self.radius_jitter_px > 2.0) {
            return bad("berry radius must stay above 2 px");
        }
        if self.radius_jitter_px < 0.0 {
            return bad("radius_jitter_px must be non-negative");
        }
        if !(self.max_berry_aspect >= 1.0) {
            return bad("max_berry_aspect must be at least 1");
        }
        if self.width < 64 || self.height < 64 {
            return bad("canvas must be at least 64 x 64");
        }
        if !(self.mm_per_px > 0.0) || !(self.reference_diameter_px > 0.0) {
            return bad("mm_per_px and reference_diameter_px must be positive");
        }
        if let Layout::Winged { offset, size } = self.layout {
            if !(offset > 0.0) || !(size > 0.0 && size < 1.0) {
                return bad("winged layout needs offset > 0 and size in (0, 1)");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskLabel {
    Berry,
    Union,
    Stain,
    Rachis,
    Clamp,
    Reference,
}

impl MaskLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            MaskLabel::Berry => "berry",
            MaskLabel::Union => "union",
            MaskLabel::Stain => "stain",
            MaskLabel::Rachis => "rachis",
            MaskLabel::Clamp => "clamp",
            MaskLabel::Reference => "reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMask {
    pub id: String,
    pub label: MaskLabel,
}

/// Sidecar ground truth written next to a generated mask file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub scene_id: String,
    pub labels: Vec<LabeledMask>,
    pub true_count: usize,
    /// Visible berry count per view angle in degrees; empty for flat scenes.
    #[serde(default)]
    pub per_angle_visible: BTreeMap<u32, usize>,
    #[serde(default)]
    pub berry_centers: Vec<Point>,
    #[serde(default)]
    pub berry_areas: Vec<u64>,
}

impl SceneTruth {
    pub fn label_of(&self, id: &str) -> Option<MaskLabel> {
        self.labels.iter().find(|l| l.id == id).map(|l| l.label)
    }

    pub fn ids_with(&self, label: MaskLabel) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|l| l.label == label)
            .map(|l| l.id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub mask_file: MaskFile,
    pub truth: SceneTruth,
}

#[derive(Debug, Clone, Copy)]
struct Berry {
    center: Point,
    semi_major: f64,
    semi_minor: f64,
    angle: f64,
}

/// Builds a mask record from a patch with plausible segmenter scores.
pub(crate) fn patch_record(id: String, image_id: &str, patch: &MaskPatch, rng: &mut ChaCha8Rng) -> MaskRecord {
    let (x, y, w, h) = patch.bbox();
    MaskRecord {
        id,
        bbox: [x as f64, y as f64, w as f64, h as f64],
        area_px: patch.count() as u64,
        rle: encode_patch(patch),
        predicted_iou: rng.random_range(0.88..0.99),
        stability: rng.random_range(0.90..0.99),
        image_id: image_id.to_string(),
    }
}

/// Uniformly shuffles `items` and assigns ids in the new order.
pub(crate) fn assemble(
    scene_id: &str,
    height: usize,
    width: usize,
    mut items: Vec<(MaskLabel, MaskPatch)>,
    rng: &mut ChaCha8Rng,
) -> (MaskFile, Vec<LabeledMask>) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
    let mut masks = Vec::with_capacity(items.len());
    let mut labels = Vec::with_capacity(items.len());
    for (k, (label, patch)) in items.iter().enumerate() {
        let id = format!("m{k:04}");
        masks.push(patch_record(id.clone(), scene_id, patch, rng));
        labels.push(LabeledMask { id, label: *label });
    }
    let file = MaskFile {
        image_id: scene_id.to_string(),
        width,
        height,
        masks,
    };
    (file, labels)
}

/// Root-mean-square distance of `pts` to their medoid.
pub(crate) fn medoid_rms(pts: &[Point]) -> (Point, f64) {
    let d = |a: Point, b: Point| (a.0 - b.0).hypot(a.1 - b.1);
    let medoid = pts
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let sa: f64 = pts.iter().map(|&p| d(a, p)).sum();
            let sb: f64 = pts.iter().map(|&p| d(b, p)).sum();
            sa.total_cmp(&sb)
        })
        .unwrap_or((0.0, 0.0));
    let ms = pts.iter().map(|&p| d(medoid, p).powi(2)).sum::<f64>() / pts.len().max(1) as f64;
    (medoid, ms.sqrt())
}

struct Region {
    layout: Layout,
    center_x: f64,
    top: f64,
    half_width: f64,
    length: f64,
}

impl Region {
    fn inside(&self, p: Point) -> bool {
        let v = (p.1 - self.top) / self.length;
        (p.0 - self.center_x).abs() <= self.half_width * self.layout.profile(v)
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.center_x - self.half_width,
            self.center_x + self.half_width,
            self.top,
            self.top + self.length,
        )
    }
}

struct Lobe {
    center: Point,
    semi_x: f64,
    semi_y: f64,
}

impl Lobe {
    fn inside(&self, p: Point) -> bool {
        ((p.0 - self.center.0) / self.semi_x).powi(2) + ((p.1 - self.center.1) / self.semi_y).powi(2)
            <= 1.0
    }
}

const FILL: f64 = 0.5;
const SPACING: f64 = 0.9;

fn place_berries(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<Berry>, Region)> {
    let n = spec.berry_count;
    let mut sizes: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            let j = spec.radius_jitter_px;
            let r = spec.berry_radius_px + if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 };
            let aspect = if spec.max_berry_aspect > 1.0 {
                rng.random_range(1.0..=spec.max_berry_aspect)
            } else {
                1.0
            };
            (r * aspect.sqrt(), r / aspect.sqrt(), rng.random_range(0.0..PI))
        })
        .collect();
    sizes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (n_lobe, lobe_offset) = match spec.layout {
        Layout::Winged { offset, size } => (((n as f64) * size).round() as usize, offset),
        _ => (0, 0.0),
    };
    let n_lobe = n_lobe.min(n.saturating_sub(1));
    let berry_area = |s: &(f64, f64, f64)| PI * s.0 * s.1;
    // lobe berries are every k-th entry so both groups span the size range
    let in_lobe: Vec<bool> = (0..n)
        .map(|i| n_lobe > 0 && (i * n_lobe) / n != ((i + 1) * n_lobe) / n)
        .collect();
    let body_area: f64 = sizes.iter().zip(&in_lobe).filter(|(_, &l)| !l).map(|(s, _)| berry_area(s)).sum();
    let lobe_area: f64 = sizes.iter().zip(&in_lobe).filter(|(_, &l)| l).map(|(s, _)| berry_area(s)).sum();

    let steps = 400;
    let integral: f64 =
        (0..steps).map(|i| 2.0 * spec.layout.profile((i as f64 + 0.5) / steps as f64)).sum::<f64>() / steps as f64;
    let elong = spec.layout.elongation();
    let (cx, cy) = (spec.width as f64 / 2.0, spec.height as f64 / 2.0);
    let mut scale = 1.0;
    for _ in 0..12 {
        let w = scale * (body_area / FILL / (2.0 * elong * integral)).sqrt();
        let region = Region {
            layout: spec.layout,
            center_x: cx,
            top: cy - elong * w,
            half_width: w,
            length: 2.0 * elong * w,
        };
        let lobe = (n_lobe > 0).then(|| {
            let sx = scale * (lobe_area / FILL / (PI * 1.4)).sqrt();
            Lobe {
                center: (cx + lobe_offset * w, region.top + 0.3 * region.length),
                semi_x: sx,
                semi_y: 1.4 * sx,
            }
        });
        let mut x_hi = region.bounds().1;
        if let Some(l) = &lobe {
            x_hi = x_hi.max(l.center.0 + l.semi_x);
        }
        let margin = 2.0 * spec.berry_radius_px;
        if region.bounds().0 < margin
            || x_hi > spec.width as f64 - margin
            || region.top < margin
            || region.top + region.length > spec.height as f64 - margin
        {
            return Err(Error::Infeasible(format!(
                "{n} berries of radius {} px do not fit a {}x{} canvas",
                spec.berry_radius_px, spec.width, spec.height
            )));
        }
        let mut placed: Vec<Berry> = Vec::with_capacity(n);
        let mut ok = true;
        for (i, s) in sizes.iter().enumerate() {
            let (bx0, bx1, by0, by1) = match (&lobe, in_lobe[i]) {
                (Some(l), true) => (
                    l.center.0 - l.semi_x,
                    l.center.0 + l.semi_x,
                    l.center.1 - l.semi_y,
                    l.center.1 + l.semi_y,
                ),
                _ => region.bounds(),
            };
            let mut found = None;
            for _ in 0..600 {
                let p = (rng.random_range(bx0..=bx1), rng.random_range(by0..=by1));
                let inside = match (&lobe, in_lobe[i]) {
                    (Some(l), true) => l.inside(p),
                    _ => region.inside(p),
                };
                if inside
                    && placed.iter().all(|b| {
                        (b.center.0 - p.0).hypot(b.center.1 - p.1) >= SPACING * (b.semi_major + s.0)
                    })
                {
                    found = Some(p);
                    break;
                }
            }
            match found {
                Some(center) => placed.push(Berry {
                    center,
                    semi_major: s.0,
                    semi_minor: s.1,
                    angle: s.2,
                }),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok((placed, region));
        }
        scale *= 1.06;
    }
    Err(Error::Infeasible(format!("could not pack {n} berries")))
}

/// Vertices of a rachis-like zigzag of 3-4 segments.
pub(crate) fn zigzag(start: Point, heading: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let segments = rng.random_range(3..=4);
    let mut pts = vec![start];
    let mut sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    for _ in 0..segments {
        let turn = rng.random_range(50f64..70.0).to_radians();
        let len = rng.random_range(11.0..15.0);
        let dir = heading + sign * turn;
        let last = *pts.last().unwrap();
        pts.push((last.0 + len * dir.cos(), last.1 + len * dir.sin()));
        sign = -sign;
    }
    pts
}

/// Generates a labelled scene. Deterministic for a fixed spec.
pub fn gen_scene_2d(spec: &SceneSpec) -> Result<SynthScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, w) = (spec.height, spec.width);
    let scene_id = format!("synth-{}-{}", spec.layout.name(), spec.seed);
    let (berries, region) = place_berries(spec, &mut rng)?;
    let mut items: Vec<(MaskLabel, MaskPatch)> = Vec::new();
    let mut berry_patches = Vec::with_capacity(berries.len());
    for b in &berries {
        let p = ellipse(h, w, b.center, b.semi_major, b.semi_minor, b.angle)
            .ok_or_else(|| Error::Infeasible("berry outside canvas".into()))?;
        berry_patches.push(p);
    }
    let centers: Vec<Point> = berries.iter().map(|b| b.center).collect();
    let (medoid, rms) = medoid_rms(&centers);

    let mut used = vec![false; berries.len()];
    for _ in 0..spec.decoys.unions {
        let free: Vec<usize> = (0..berries.len()).filter(|&i| !used[i]).collect();
        if free.len() < 2 {
            break;
        }
        let i = free[rng.random_range(0..free.len())];
        let d = |j: usize| (centers[i].0 - centers[j].0).hypot(centers[i].1 - centers[j].1);
        let j = free.iter().copied().filter(|&j| j != i).min_by(|&a, &b| d(a).total_cmp(&d(b))).unwrap();
        used[i] = true;
        used[j] = true;
        let half = 0.6 * berries[i].semi_minor.min(berries[j].semi_minor);
        let bridge = polyline(h, w, &[centers[i], centers[j]], half)
            .ok_or_else(|| Error::Infeasible("union bridge outside canvas".into()))?;
        let u = union(&[&berry_patches[i], &berry_patches[j], &bridge]).unwrap();
        items.push((MaskLabel::Union, u));
    }

    let mut rachis_placed = 0;
    let mut attempts = 0;
    while rachis_placed < spec.decoys.rachis {
        attempts += 1;
        if attempts > 2000 {
            return Err(Error::Infeasible("could not place rachis fragments".into()));
        }
        let (x0, x1, y0, y1) = region.bounds();
        let start = (rng.random_range(x0..=x1), rng.random_range(y0..=y1));
        if !region.inside(start) {
            continue;
        }
        let pts = zigzag(start, rng.random_range(0.0..2.0 * PI), &mut rng);
        let Some(patch) = polyline(h, w, &pts, 2.2) else {
            continue;
        };
        let area = patch.count() as f64;
        if berry_patches.iter().any(|b| b.intersection(&patch) as f64 > 0.5 * area) {
            continue;
        }
        items.push((MaskLabel::Rachis, patch));
        rachis_placed += 1;
    }

    let mut blocked: Vec<(Point, f64)> = Vec::new();
    if spec.decoys.clamp {
        let center = (region.center_x, region.top - 2.0 * spec.berry_radius_px - 10.0);
        let clamp = rectangle(h, w, center, 48.0, 8.0, 0.0)
            .ok_or_else(|| Error::Infeasible("clamp outside canvas".into()))?;
        blocked.push((center, 50.0));
        items.push((MaskLabel::Clamp, clamp));
    }
    if spec.decoys.reference {
        let r = spec.reference_diameter_px / 2.0;
        let center = (r + 20.0, r + 20.0);
        if (center.0 - medoid.0).hypot(center.1 - medoid.1) < r + 4.0 * rms {
            return Err(Error::Infeasible("reference circle overlaps the cluster".into()));
        }
        let circle =
            disk(h, w, center, r).ok_or_else(|| Error::Infeasible("reference outside canvas".into()))?;
        blocked.push((center, r));
        items.push((MaskLabel::Reference, circle));
    }
    let mut stains = 0;
    let mut attempts = 0;
    while stains < spec.decoys.stains {
        attempts += 1;
        if attempts > 5000 {
            return Err(Error::Infeasible("no room for stains outside the cluster".into()));
        }
        let theta = rng.random_range(0.0..2.0 * PI);
        let dist = rng.random_range(4.2..5.0) * rms;
        let c = (medoid.0 + dist * theta.cos(), medoid.1 + dist * theta.sin());
        let reach = 20.0;
        if c.0 < reach || c.1 < reach || c.0 > w as f64 - reach || c.1 > h as f64 - reach {
            continue;
        }
        if blocked.iter().any(|&(b, r)| (b.0 - c.0).hypot(b.1 - c.1) < r + 2.0 * reach) {
            continue;
        }
        let (x1, x2, x3) = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(0..2));
        let blobs = [
            (c, rng.random_range(4.0..8.0)),
            ((c.0 + x1, c.1 + x2), rng.random_range(3.0..6.0)),
            ((c.0 - x2, c.1 + x1), rng.random_range(3.0..5.0)),
        ];
        let used_blobs = &blobs[..2 + x3];
        let stain = raster_fn(h, w, (c.0 - reach, c.0 + reach, c.1 - reach, c.1 + reach), |x, y| {
            used_blobs.iter().any(|&(p, r)| (x - p.0).hypot(y - p.1) <= r)
        })
        .unwrap();
        blocked.push((c, reach));
        items.push((MaskLabel::Stain, stain));
        stains += 1;
    }

    let berry_areas: Vec<u64> = berry_patches.iter().map(|p| p.count() as u64).collect();
    for p in berry_patches {
        items.push((MaskLabel::Berry, p));
    }
    let (mask_file, labels) = assemble(&scene_id, h, w, items, &mut rng);
    Ok(SynthScene {
        mask_file,
        truth: SceneTruth {
            scene_id,
            labels,
            true_count: berries.len(),
            per_angle_visible: BTreeMap::new(),
            berry_centers: centers,
            berry_areas,
        },
    })
}
