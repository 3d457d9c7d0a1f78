//! Sphere-packed clusters and their orthographic views.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::raster::{disk, rectangle};
use super::scene2d::{assemble, LabeledMask, Layout, MaskLabel, SceneSpec, SceneTruth, SynthScene};
use crate::error::{Error, Result};
use crate::mask_io::{BitGrid, MaskPatch};

/// The four imaging angles in degrees.
pub const VIEW_ANGLES: [u32; 4] = [0, 90, 180, 270];

/// Minimum unoccluded share of a projected disk for the berry to count as visible.
pub const VISIBILITY_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    /// `(x, y, z)` in mm; `y` grows downwards along the rachis.
    pub center: [f64; 3],
    pub radius: f64,
    pub in_wing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene3d {
    pub scene_id: String,
    pub spheres: Vec<Sphere>,
    pub mm_per_px: f64,
    /// Rachis axis as top and bottom points in mm.
    pub axis: ([f64; 3], [f64; 3]),
    /// Wing branch axis, when present.
    pub wing_axis: Option<([f64; 3], [f64; 3])>,
}

impl Scene3d {
    pub fn true_count(&self) -> usize {
        self.spheres.len()
    }

    /// Builds a scene from explicit spheres.
    pub fn from_spheres(scene_id: &str, spheres: Vec<Sphere>, mm_per_px: f64) -> Result<Self> {
        if !(mm_per_px > 0.0) {
            return Err(Error::InvalidArgument("mm_per_px must be positive".into()));
        }
        for (i, a) in spheres.iter().enumerate() {
            if !(a.radius > 0.0) {
                return Err(Error::InvalidArgument(format!("sphere {i} has non-positive radius")));
            }
            for b in &spheres[..i] {
                if dist3(a.center, b.center) < a.radius + b.radius - 1e-9 {
                    return Err(Error::InvalidArgument(format!("sphere {i} interpenetrates another")));
                }
            }
        }
        let (y0, y1) = spheres.iter().fold((f64::MAX, f64::MIN), |(lo, hi), s| {
            (lo.min(s.center[1]), hi.max(s.center[1]))
        });
        Ok(Self {
            scene_id: scene_id.to_string(),
            spheres,
            mm_per_px,
            axis: ([0.0, y0.min(0.0), 0.0], [0.0, y1.max(0.0), 0.0]),
            wing_axis: None,
        })
    }

    /// Largest distance of any sphere surface from the rachis axis.
    fn radial_extent(&self) -> f64 {
        self.spheres
            .iter()
            .map(|s| s.center[0].hypot(s.center[2]) + s.radius)
            .fold(0.0, f64::max)
    }

    fn vertical_extent(&self) -> (f64, f64) {
        self.spheres.iter().fold((f64::MAX, f64::MIN), |(lo, hi), s| {
            (lo.min(s.center[1] - s.radius), hi.max(s.center[1] + s.radius))
        })
    }
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

const GAP: f64 = 2.05;

/// Largest multiple of four whose ring of radius `rho` keeps neighbours
/// `GAP * r` apart.
fn ring_size(rho: f64, r: f64) -> usize {
    let mut m = 0;
    let mut cand = 4;
    while 2.0 * rho * (PI / cand as f64).sin() >= GAP * r {
        m = cand;
        cand += 4;
    }
    m
}

/// Concentric rings filling a disk of outer sphere-centre radius `rho_out`,
/// mirror symmetric about both horizontal axes.
fn level_slots(cx: f64, rho_out: f64, y: f64, r: f64, out: &mut Vec<[f64; 3]>) {
    let mut rho = rho_out.max(0.0);
    let no_ring = rho < 1.45 * r;
    while rho >= 1.45 * r {
        let m = ring_size(rho, r);
        for k in 0..m {
            let a = PI / m as f64 + 2.0 * PI * k as f64 / m as f64;
            out.push([cx + rho * a.cos(), y, rho * a.sin()]);
        }
        rho -= GAP * r;
    }
    if no_ring || (rho >= 0.0 && rho < 1.45 * r) {
        out.push([cx, y, 0.0]);
    }
}

fn stack(cx: f64, y0: f64, radius_at: impl Fn(usize) -> f64, n: usize, r: f64) -> (Vec<[f64; 3]>, usize) {
    let mut slots = Vec::new();
    let mut level = 0;
    while slots.len() < n {
        level_slots(cx, radius_at(level) - r, y0 + level as f64 * GAP * r, r, &mut slots);
        level += 1;
    }
    slots.truncate(n);
    (slots, level)
}

/// Packs `spec.berry_count` spheres around a vertical rachis. Sphere radius
/// in mm is `berry_radius_px * mm_per_px`.
pub fn gen_scene_3d(spec: &SceneSpec) -> Result<Scene3d> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x3d3d_3d3d);
    let r = spec.berry_radius_px * spec.mm_per_px;
    let n = spec.berry_count;
    let (n_wing, wing_offset) = match spec.layout {
        Layout::Winged { offset, size } => (((n as f64) * size).round() as usize, offset),
        _ => (0, 0.0),
    };
    let n_wing = n_wing.min(n.saturating_sub(1));
    let n_main = n - n_wing;
    let min_outer = (1.45 + 1.0) * r;
    let r0 = r * (2.45 + 0.4 * (n_main as f64).cbrt());

    // First pass sizes the stack with a full-width profile; the second reuses
    // its level count to place the tapering profile.
    let (_, guess) = stack(0.0, 0.0, |_| r0, n_main, r);
    let mut levels = guess;
    let mut main = Vec::new();
    for _ in 0..4 {
        let denom = (levels.max(2) - 1) as f64;
        let (slots, used) = stack(
            0.0,
            0.0,
            |l| (r0 * spec.layout.profile_3d((l as f64 / denom).min(1.0))).max(min_outer),
            n_main,
            r,
        );
        main = slots;
        if used == levels {
            break;
        }
        levels = used;
    }
    let height = (levels.max(1) - 1) as f64 * GAP * r;
    let mut centers = main;
    let mut in_wing = vec![false; centers.len()];
    let mut wing_axis = None;
    if n_wing > 0 {
        let rw = (r * (2.45 + 0.4 * (n_wing as f64).cbrt())).max(min_outer);
        let xw = r0 + wing_offset.max(1.0) * rw + 0.3 * r;
        let y_top = 0.15 * height;
        // The wing sits on the +z side: edge-on at 0/180 degrees, in profile
        // at 90/270 degrees.
        let (slots, wl) = stack(xw, y_top, |_| rw, n_wing, r);
        let y_bot = y_top + (wl.max(1) - 1) as f64 * GAP * r;
        wing_axis = Some(([0.0, y_top, xw], [0.0, y_bot, xw]));
        in_wing.extend(std::iter::repeat_n(true, slots.len()));
        centers.extend(slots.into_iter().map(|[x, y, z]| [z, y, x]));
    }

    // Slots are pairwise valid; a jittered move is kept only if it stays
    // clear of every other sphere's current position.
    let mut pos = centers;
    for i in 0..pos.len() {
        for _ in 0..10 {
            let mut p = pos[i];
            for v in p.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += 0.08 * r * z;
            }
            if pos.iter().enumerate().all(|(j, &q)| j == i || dist3(p, q) >= 2.0 * r) {
                pos[i] = p;
                break;
            }
        }
    }
    let spheres: Vec<Sphere> = pos
        .into_iter()
        .zip(in_wing)
        .map(|(center, in_wing)| Sphere {
            center,
            radius: r,
            in_wing,
        })
        .collect();
    Ok(Scene3d {
        scene_id: format!("synth3d-{}-{}", spec.layout.name(), spec.seed),
        spheres,
        mm_per_px: spec.mm_per_px,
        axis: ([0.0, 0.0, 0.0], [0.0, height, 0.0]),
        wing_axis,
    })
}

impl Layout {
    /// Outer radius profile of the 3D body at relative height `v`.
    fn profile_3d(&self, v: f64) -> f64 {
        match self {
            Layout::Cylindrical => 1.0,
            Layout::Conical | Layout::Winged { .. } => 1.0 - 0.4 * v,
            Layout::Globular => (1.0 - (2.0 * v - 1.0).powi(2)).max(0.0).sqrt().max(0.55),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibleBerry {
    pub sphere: usize,
    /// Unoccluded share of the projected disk.
    pub fraction: f64,
    /// Unoccluded pixels.
    pub patch: MaskPatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub angle: u32,
    pub height: usize,
    pub width: usize,
    /// Unoccluded share for every sphere, in scene order.
    pub fractions: Vec<f64>,
    /// Spheres passing the visibility threshold.
    pub visible: Vec<VisibleBerry>,
    pub true_count: usize,
}

impl Projection {
    pub fn visible_count(&self) -> usize {
        self.visible.len()
    }
}

/// Common image frame for all views of a scene: `(height, width, px_per_mm,
/// column of the axis, row of y = 0)`.
fn frame(scene: &Scene3d, margin_px: f64) -> (usize, usize, f64, f64, f64) {
    let ppm = 1.0 / scene.mm_per_px;
    let radial = scene.radial_extent();
    let (y_lo, y_hi) = scene.vertical_extent();
    let width = (2.0 * radial * ppm + 2.0 * margin_px).ceil() as usize;
    let height = ((y_hi - y_lo) * ppm + 2.0 * margin_px).ceil() as usize;
    (height.max(1), width.max(1), ppm, width as f64 / 2.0, margin_px - y_lo * ppm)
}

/// Orthographic view from `angle` degrees about the rachis. The camera at 0°
/// looks along `-z`; positive angles turn the cluster clockwise seen from above.
pub fn project_visibility(scene: &Scene3d, angle: u32) -> Result<Projection> {
    project_with(scene, angle, 8.0, VISIBILITY_THRESHOLD)
}

pub fn project_with(scene: &Scene3d, angle: u32, margin_px: f64, threshold: f64) -> Result<Projection> {
    if !VIEW_ANGLES.contains(&angle) {
        return Err(Error::InvalidArgument(format!("angle {angle} is not one of 0/90/180/270")));
    }
    let (height, width, ppm, ax, ay) = frame(scene, margin_px);
    let (s, c) = (angle as f64).to_radians().sin_cos();
    let n = scene.spheres.len();
    let mut depth = vec![f64::NEG_INFINITY; height * width];
    let mut owner = vec![usize::MAX; height * width];
    let mut disk_px = vec![0usize; n];
    let mut boxes = Vec::with_capacity(n);
    for (i, sp) in scene.spheres.iter().enumerate() {
        let [x, y, z] = sp.center;
        let u = ax + (x * c - z * s) * ppm;
        let v = ay + y * ppm;
        let d = x * s + z * c;
        let rp = sp.radius * ppm;
        let c0 = (u - rp).floor().max(0.0) as usize;
        let c1 = ((u + rp).ceil() as usize).min(width);
        let r0 = (v - rp).floor().max(0.0) as usize;
        let r1 = ((v + rp).ceil() as usize).min(height);
        boxes.push((r0, r1, c0, c1));
        for row in r0..r1 {
            for col in c0..c1 {
                let (du, dv) = (col as f64 + 0.5 - u, row as f64 + 0.5 - v);
                let q = rp * rp - du * du - dv * dv;
                if q < 0.0 {
                    continue;
                }
                disk_px[i] += 1;
                let surface = d + q.sqrt() / ppm;
                let k = row * width + col;
                if surface > depth[k] {
                    depth[k] = surface;
                    owner[k] = i;
                }
            }
        }
    }
    let mut fractions = vec![0.0; n];
    let mut visible = Vec::new();
    for (i, &(r0, r1, c0, c1)) in boxes.iter().enumerate() {
        if r0 >= r1 || c0 >= c1 || disk_px[i] == 0 {
            continue;
        }
        let grid = BitGrid::from_fn(r1 - r0, c1 - c0, |r, cc| owner[(r + r0) * width + cc + c0] == i);
        let own = grid.count();
        fractions[i] = own as f64 / disk_px[i] as f64;
        if fractions[i] >= threshold {
            if let Some(mut patch) = MaskPatch::from_full(&grid) {
                patch.x0 += c0;
                patch.y0 += r0;
                patch.image_height = height;
                patch.image_width = width;
                visible.push(VisibleBerry {
                    sphere: i,
                    fraction: fractions[i],
                    patch,
                });
            }
        }
    }
    Ok(Projection {
        angle,
        height,
        width,
        fractions,
        visible,
        true_count: n,
    })
}

/// Visible counts at all four angles.
pub fn visible_counts(scene: &Scene3d) -> Result<BTreeMap<u32, usize>> {
    VIEW_ANGLES
        .iter()
        .map(|&a| Ok((a, project_visibility(scene, a)?.visible_count())))
        .collect()
}

/// Renders one view as a labelled mask scene: visible berries plus optional
/// clamp and reference circle of `reference_diameter_px`.
pub fn view_scene(scene: &Scene3d, angle: u32, spec: &SceneSpec) -> Result<SynthScene> {
    let ref_d = spec.reference_diameter_px;
    let decoy_margin = if spec.decoys.reference { ref_d + 60.0 } else { 40.0 };
    let proj = project_with(scene, angle, decoy_margin, VISIBILITY_THRESHOLD)?;
    let counts = visible_counts(scene)?;
    let (h, w) = (proj.height, proj.width + if spec.decoys.reference { ref_d as usize + 40 } else { 0 });
    let mut items: Vec<(MaskLabel, MaskPatch)> = Vec::new();
    let mut centers = Vec::new();
    let mut areas = Vec::new();
    for vb in &proj.visible {
        let mut p = vb.patch.clone();
        p.image_width = w;
        let (x, y, pw, ph) = p.bbox();
        centers.push((x as f64 + pw as f64 / 2.0, y as f64 + ph as f64 / 2.0));
        areas.push(p.count() as u64);
        items.push((MaskLabel::Berry, p));
    }
    if spec.decoys.clamp {
        let top = decoy_margin - 30.0;
        if let Some(cl) = rectangle(h, w, (proj.width as f64 / 2.0, top.max(10.0)), 48.0, 8.0, 0.0) {
            items.push((MaskLabel::Clamp, cl));
        }
    }
    if spec.decoys.reference {
        let r = ref_d / 2.0;
        let center = (w as f64 - r - 20.0, r + 20.0);
        let circle = disk(h, w, center, r).ok_or_else(|| Error::Infeasible("reference outside canvas".into()))?;
        items.push((MaskLabel::Reference, circle));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(31).wrapping_add(angle as u64));
    let image_id = format!("{}-a{angle}", scene.scene_id);
    let (mask_file, labels): (_, Vec<LabeledMask>) = assemble(&image_id, h, w, items, &mut rng);
    Ok(SynthScene {
        mask_file,
        truth: SceneTruth {
            scene_id: image_id,
            labels,
            true_count: scene.true_count(),
            per_angle_visible: counts,
            berry_centers: centers,
            berry_areas: areas,
        },
    })
}
