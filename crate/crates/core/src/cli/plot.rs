//! SVG 1.1 plots of pipeline results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::{angle_series, cluster_key, ClusterRecord};
use crate::architecture::{concave_hull, Axis, EcdfProfile};
use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Ecdf,
    Hulls,
    Pca,
    Angle,
}

/// Concavity values drawn by the hull plot, loosest first.
pub const HULL_SWEEP: [f64; 4] = [1.0, 0.7, 0.4, 0.2];

const PANEL: f64 = 260.0;
const PAD: f64 = 30.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Svg {
    buf: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        let _ = write!(
            buf,
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
             width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        Self { buf }
    }

    pub fn path(&mut self, d: &str, stroke: &str, fill: &str, width: f64) {
        let _ = writeln!(
            self.buf,
            "<path d=\"{d}\" stroke=\"{stroke}\" fill=\"{fill}\" stroke-width=\"{width:.2}\"/>"
        );
    }

    pub fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.buf, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"{fill}\"/>");
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str) {
        let esc = s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.buf,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"11\">{esc}</text>"
        );
    }

    pub fn frame(&mut self, x: f64, y: f64, w: f64, h: f64) {
        let _ = writeln!(
            self.buf,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"none\" stroke=\"#999\"/>"
        );
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

fn polygon_d(points: &[Point], map: impl Fn(Point) -> Point) -> String {
    let mut d = String::new();
    for (i, &p) in points.iter().enumerate() {
        let (x, y) = map(p);
        let _ = write!(d, "{}{x:.2} {y:.2} ", if i == 0 { "M" } else { "L" });
    }
    d.push('Z');
    d
}

/// Staircase through the 100 samples of a profile inside a square panel.
pub fn staircase_d(p: &EcdfProfile, x0: f64, y0: f64, size: f64) -> String {
    let sx = |t: f64| x0 + t / 100.0 * size;
    let sy = |v: f64| y0 + size - v * size;
    let mut d = format!("M{:.2} {:.2}", sx(0.0), sy(0.0));
    let mut prev = 0.0;
    for (i, &v) in p.values.iter().enumerate() {
        let t = (i + 1) as f64;
        let _ = write!(d, " H{:.2}", sx(t));
        if v != prev {
            let _ = write!(d, " V{:.2}", sy(v));
            prev = v;
        }
    }
    d
}

fn safe_name(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Affine map of a point set's bounding box into a panel, preserving aspect.
fn fit(points: &[Point], x0: f64, y0: f64, size: f64) -> impl Fn(Point) -> Point {
    let (mut lx, mut ly, mut hx, mut hy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in points {
        lx = lx.min(x);
        ly = ly.min(y);
        hx = hx.max(x);
        hy = hy.max(y);
    }
    let s = size / (hx - lx).max(hy - ly).max(1e-9);
    move |(x, y)| (x0 + (x - lx) * s, y0 + (y - ly) * s)
}

pub fn load_clusters(results: &Path) -> Result<Vec<ClusterRecord>> {
    let p = results.join("clusters.json");
    let text = fs::read_to_string(&p)
        .map_err(|e| Error::InvalidArgument(format!("missing table clusters.json in {}: {e}", results.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// ECDF staircases of every view of one physical cluster, x and y panels.
pub fn ecdf_svg(title: &str, views: &[&ClusterRecord]) -> String {
    let mut svg = Svg::new(2.0 * PANEL + 3.0 * PAD, PANEL + 2.5 * PAD);
    svg.text(PAD, PAD * 0.6, title);
    for (k, axis) in [Axis::X, Axis::Y].into_iter().enumerate() {
        let x0 = PAD + k as f64 * (PANEL + PAD);
        svg.frame(x0, PAD, PANEL, PANEL);
        svg.text(x0, PAD + PANEL + 18.0, if k == 0 { "x" } else { "y" });
        for (i, v) in views.iter().enumerate() {
            let p = match axis {
                Axis::X => &v.architecture.ecdf_x,
                Axis::Y => &v.architecture.ecdf_y,
            };
            let Some(p) = p else { continue };
            svg.path(&staircase_d(p, x0, PAD, PANEL), PALETTE[i % PALETTE.len()], "none", 1.5);
            if k == 1 {
                svg.text(x0 + PANEL - 60.0, PAD + 14.0 * (i + 1) as f64, &format!("{} deg", v.meta.angle));
            }
        }
    }
    svg.finish()
}

/// Berry outlines with the hull at each concavity of `HULL_SWEEP`.
/// Returns the SVG and the hull areas in sweep order.
pub fn hulls_svg(c: &ClusterRecord) -> Result<(String, Vec<f64>)> {
    let all: Vec<Point> = c.outlines.iter().flatten().copied().collect();
    let mut svg = Svg::new(HULL_SWEEP.len() as f64 * (PANEL + PAD) + PAD, PANEL + 2.5 * PAD);
    svg.text(PAD, PAD * 0.6, &c.image);
    let mut areas = Vec::new();
    for (k, &conc) in HULL_SWEEP.iter().enumerate() {
        let x0 = PAD + k as f64 * (PANEL + PAD);
        let map = fit(&all, x0, PAD, PANEL);
        for o in &c.outlines {
            svg.path(&polygon_d(o, &map), "#555", "#cfe8cf", 0.6);
        }
        let hull = concave_hull(&all, conc)?;
        areas.push(hull.area());
        svg.path(&polygon_d(hull.polygon.points(), &map), "#d62728", "none", 1.2);
        svg.text(x0, PAD + PANEL + 18.0, &format!("c = {conc}, area = {:.0} px", hull.area()));
    }
    Ok((svg.finish(), areas))
}

pub fn pca_svg(clusters: &[ClusterRecord]) -> Result<String> {
    let coords: Vec<Point> = clusters
        .iter()
        .filter_map(|c| {
            let s = &c.architecture.shape_pc_scores;
            (s.len() >= 2).then(|| (s[0], s[1]))
        })
        .collect();
    if coords.is_empty() {
        return Err(Error::InsufficientData("no hull PC scores in clusters.json".into()));
    }
    let mut svg = Svg::new(PANEL + 2.0 * PAD, PANEL + 2.5 * PAD);
    svg.frame(PAD, PAD, PANEL, PANEL);
    svg.text(PAD, PAD * 0.6, "hull shape PC1 vs PC2");
    let flipped: Vec<Point> = coords.iter().map(|&(x, y)| (x, -y)).collect();
    let map = fit(&flipped, PAD + 5.0, PAD + 5.0, PANEL - 10.0);
    for &p in &flipped {
        let (u, v) = map(p);
        svg.circle(u, v, 3.0, "#1f77b4");
    }
    svg.text(PAD, PAD + PANEL + 18.0, "PC1 (right), PC2 (up)");
    Ok(svg.finish())
}

pub fn angle_svg(clusters: &[ClusterRecord]) -> Result<String> {
    let series: Vec<_> = angle_series(clusters)
        .into_iter()
        .map(|(_, s)| s)
        .filter(|s| s.angles.len() >= 2 && s.angles.contains(&0))
        .collect();
    if series.is_empty() {
        return Err(Error::InsufficientData("no multi-angle clusters in clusters.json".into()));
    }
    let mut svg = Svg::new(PANEL + 2.0 * PAD, PANEL + 2.5 * PAD);
    svg.frame(PAD, PAD, PANEL, PANEL);
    svg.text(PAD, PAD * 0.6, "berry count relative to 0 deg");
    let sx = |a: u32| PAD + a as f64 / 270.0 * PANEL;
    let sy = |r: f64| PAD + PANEL - (r / 2.0).clamp(0.0, 1.0) * PANEL;
    svg.path(&format!("M{:.2} {:.2} H{:.2}", PAD, sy(1.0), PAD + PANEL), "#999", "none", 0.8);
    for (i, s) in series.iter().enumerate() {
        let v = crate::architecture::angle_variation(s)?;
        let mut order: Vec<usize> = (0..v.angles.len()).collect();
        order.sort_by_key(|&k| v.angles[k]);
        let mut d = String::new();
        for (j, &k) in order.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(v.angles[k]), sy(v.count_ratio[k]));
        }
        svg.path(d.trim_end(), PALETTE[i % PALETTE.len()], "none", 1.0);
    }
    svg.text(PAD, PAD + PANEL + 18.0, "0 / 90 / 180 / 270 deg; ratio axis 0..2");
    Ok(svg.finish())
}

/// Writes the requested plots under `out` and returns their paths.
pub fn cmd_plot(results: &Path, kind: PlotKind, out: &Path) -> Result<Vec<PathBuf>> {
    let clusters = load_clusters(results)?;
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let p = out.join(name);
        crate::mask_io::write_atomic(&p, body.as_bytes())?;
        written.push(p);
        Ok(())
    };
    match kind {
        PlotKind::Ecdf => {
            for (key, s) in angle_series(&clusters) {
                let views: Vec<&ClusterRecord> = clusters.iter().filter(|c| cluster_key(&c.meta.key()) == key).collect();
                emit(format!("ecdf_{}.svg", safe_name(&s.cluster_id)), ecdf_svg(&s.cluster_id, &views))?;
            }
        }
        PlotKind::Hulls => {
            for c in &clusters {
                emit(format!("hulls_{}.svg", safe_name(&c.image)), hulls_svg(c)?.0)?;
            }
        }
        PlotKind::Pca => emit("pca.svg".into(), pca_svg(&clusters)?)?,
        PlotKind::Angle => emit("angle.svg".into(), angle_svg(&clusters)?)?,
    }
    Ok(written)
}
