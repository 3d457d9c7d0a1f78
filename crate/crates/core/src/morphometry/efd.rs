//! Elliptic Fourier descriptors (Kuhl & Giardina) over the arc-length
//! parameterisation of a closed polygon.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask_io::{dist, Contour};

/// Harmonic coefficients `(a, b, c, d)` per harmonic, with
/// `x(t) = A0 + sum a_h cos(h t) + b_h sin(h t)` and
/// `y(t) = C0 + sum c_h cos(h t) + d_h sin(h t)`, `t` in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfdCoeffs {
    pub coeffs: Vec<[f64; 4]>,
    pub offset: (f64, f64),
}

impl EfdCoeffs {
    pub fn harmonics(&self) -> usize {
        self.coeffs.len()
    }

    /// Flattened `[a1, b1, c1, d1, a2, ...]`, the feature vector used for PCA.
    pub fn to_features(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|h| h.iter().copied()).collect()
    }

    /// Point on the outline at parameter `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (mut x, mut y) = self.offset;
        for (k, [a, b, c, d]) in self.coeffs.iter().enumerate() {
            let (s, co) = ((k + 1) as f64 * t).sin_cos();
            x += a * co + b * s;
            y += c * co + d * s;
        }
        (x, y)
    }
}

/// Fits `harmonics` elliptic Fourier harmonics to a closed contour.
pub fn efd_fit(contour: &Contour, harmonics: usize) -> Result<EfdCoeffs> {
    if harmonics == 0 {
        return Err(Error::InvalidArgument("harmonic count must be at least 1".into()));
    }
    let pts = contour.points();
    let n = pts.len();
    if n < 2 * harmonics + 2 {
        return Err(Error::InsufficientData(format!(
            "{harmonics} harmonics need at least {} contour points, got {n}",
            2 * harmonics + 2
        )));
    }
    // Segment deltas and cumulative arc length, closing back to the start.
    let mut dx = Vec::with_capacity(n);
    let mut dy = Vec::with_capacity(n);
    let mut dt = Vec::with_capacity(n);
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let len = dist(p, q);
        if len > 0.0 {
            dx.push(q.0 - p.0);
            dy.push(q.1 - p.1);
            dt.push(len);
        }
    }
    let mut t = Vec::with_capacity(dt.len() + 1);
    t.push(0.0);
    for &d in &dt {
        t.push(t.last().unwrap() + d);
    }
    let total = *t.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::Degenerate("contour has zero length".into()));
    }

    let mut coeffs = Vec::with_capacity(harmonics);
    for h in 1..=harmonics {
        let hf = h as f64;
        let k = total / (2.0 * hf * hf * PI * PI);
        let w = 2.0 * hf * PI / total;
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        let (mut s_prev, mut c_prev) = (0.0f64, 1.0f64);
        for i in 0..dt.len() {
            let (s_cur, c_cur) = (w * t[i + 1]).sin_cos();
            let (dc, ds) = (c_cur - c_prev, s_cur - s_prev);
            let (ux, uy) = (dx[i] / dt[i], dy[i] / dt[i]);
            a += ux * dc;
            b += ux * ds;
            c += uy * dc;
            d += uy * ds;
            s_prev = s_cur;
            c_prev = c_cur;
        }
        coeffs.push([k * a, k * b, k * c, k * d]);
    }

    // Arc-length mean of the piecewise-linear outline.
    let (mut ox, mut oy) = (0.0, 0.0);
    let mut seg = 0;
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let len = dist(p, q);
        if len > 0.0 {
            ox += len * (p.0 + q.0) / 2.0;
            oy += len * (p.1 + q.1) / 2.0;
            seg += 1;
        }
    }
    debug_assert_eq!(seg, dt.len());
    Ok(EfdCoeffs {
        coeffs,
        offset: (ox / total, oy / total),
    })
}

fn rotate_param(h: [f64; 4], angle: f64) -> [f64; 4] {
    // [a b; c d] * [cos -sin; sin cos]
    let (s, co) = angle.sin_cos();
    let [a, b, c, d] = h;
    [a * co + b * s, -a * s + b * co, c * co + d * s, -c * s + d * co]
}

fn rotate_plane(h: [f64; 4], angle: f64) -> [f64; 4] {
    // [cos sin; -sin cos] * [a b; c d]
    let (s, co) = angle.sin_cos();
    let [a, b, c, d] = h;
    [co * a + s * c, co * b + s * d, -s * a + co * c, -s * b + co * d]
}

/// Normalises for size, orientation, starting point and position.
///
/// After normalisation the first harmonic is `(1, 0, 0, d1)` with
/// `0 < |d1| <= 1`. The start-point phase is only defined modulo pi; the two
/// candidates differ by the sign of every even harmonic, and the one whose
/// largest even-harmonic `a`/`d` coefficient is positive is kept (falling back
/// to `b`/`c` coefficients for shapes without such terms). The `a`/`d` rule
/// is invariant under reflection about the major axis, so mirror-image shapes
/// land on matching branches.
pub fn efd_normalize(e: &EfdCoeffs) -> Result<EfdCoeffs> {
    let Some(&[a, b, c, d]) = e.coeffs.first() else {
        return Err(Error::Degenerate("no harmonics".into()));
    };
    if !(a * a + b * b + c * c + d * d > 1e-24) {
        return Err(Error::Degenerate("first harmonic vanishes".into()));
    }
    let theta = 0.5 * (2.0 * (a * b + c * d)).atan2(a * a + c * c - b * b - d * d);
    let shifted: Vec<[f64; 4]> = e
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, &h)| rotate_param(h, (k + 1) as f64 * theta))
        .collect();
    let psi = shifted[0][2].atan2(shifted[0][0]);
    let mut out: Vec<[f64; 4]> = shifted.iter().map(|&h| rotate_plane(h, psi)).collect();
    let scale = out[0][0];
    if !(scale > 0.0) {
        return Err(Error::Degenerate("first harmonic has no extent".into()));
    }
    for h in &mut out {
        for v in h.iter_mut() {
            *v /= scale;
        }
    }
    out[0][1] = 0.0;
    out[0][2] = 0.0;
    out[0][0] = 1.0;

    let pick = |idx: [usize; 2]| {
        out.iter()
            .enumerate()
            .filter(|(k, _)| (k + 1) % 2 == 0)
            .flat_map(|(_, h)| idx.map(|i| h[i]))
            .fold(0.0f64, |best, v| if v.abs() > best.abs() + 1e-12 { v } else { best })
    };
    let mut lead = pick([0, 3]);
    if lead.abs() < 1e-9 {
        lead = pick([1, 2]);
    }
    if lead < 0.0 {
        for (k, h) in out.iter_mut().enumerate() {
            if (k + 1) % 2 == 0 {
                for v in h.iter_mut() {
                    *v = -*v;
                }
            }
        }
    }
    Ok(EfdCoeffs {
        coeffs: out,
        offset: (0.0, 0.0),
    })
}

/// Evaluates the series at `n` uniformly spaced parameter values.
pub fn efd_reconstruct(e: &EfdCoeffs, n: usize) -> Result<Contour> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 points, got {n}")));
    }
    Contour::new(
        (0..n)
            .map(|k| e.eval(2.0 * PI * k as f64 / n as f64))
            .collect(),
    )
}

/// Root-mean-square distance between the contour sampled uniformly by arc
/// length from its first vertex and the series evaluated at the matching
/// parameters. Non-increasing in the harmonic count up to sampling error.
pub fn reconstruction_error(contour: &Contour, e: &EfdCoeffs, samples: usize) -> Result<f64> {
    let reference = contour.resample(samples)?;
    let n = reference.len();
    let total: f64 = reference
        .points()
        .iter()
        .enumerate()
        .map(|(k, &p)| dist(p, e.eval(2.0 * PI * k as f64 / n as f64)).powi(2))
        .sum();
    Ok((total / n as f64).sqrt())
}
