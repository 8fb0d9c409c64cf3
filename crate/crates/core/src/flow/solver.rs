use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::imaging::Frame;

/// Coarse-to-fine variational flow parameters. `smoothness_weight` is the
/// regularizer alpha for intensities in [0, 255].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FlowParams {
    pub smoothness_weight: f64,
    pub iterations_per_level: u32,
    pub pyramid_levels: u32,
    pub pyramid_scale: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            smoothness_weight: 15.0,
            iterations_per_level: 100,
            pyramid_levels: 4,
            pyramid_scale: 0.5,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothness_weight > 0.0 && self.smoothness_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothness_weight must be positive, got {}",
                self.smoothness_weight
            )));
        }
        if self.iterations_per_level == 0 {
            return Err(Error::InvalidParameter(
                "iterations_per_level must be at least 1".to_string(),
            ));
        }
        if self.pyramid_levels == 0 {
            return Err(Error::InvalidParameter(
                "pyramid_levels must be at least 1".to_string(),
            ));
        }
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pyramid_scale must lie in (0, 1), got {}",
                self.pyramid_scale
            )));
        }
        Ok(())
    }
}

/// Dense flow between two frames of equal size.
pub trait FlowEstimator: Send + Sync {
    fn estimate(&self, prev: &Frame, next: &Frame) -> Result<FlowField>;
}

/// Brightness-constancy + quadratic-smoothness flow, solved coarse to fine.
///
/// Each level linearizes the warped residual once, then runs red-black block
/// Gauss-Seidel sweeps that solve the exact 2x2 system per pixel. Exact
/// blockwise minimization makes the level energy non-increasing across
/// iterations, and the fixed sweep order makes results deterministic.
#[derive(Debug, Clone)]
pub struct VariationalFlow {
    params: FlowParams,
}

impl VariationalFlow {
    pub fn new(params: FlowParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    /// Estimate flow and record the energy after every iteration at the
    /// finest level.
    pub fn estimate_with_energies(
        &self,
        prev: &Frame,
        next: &Frame,
    ) -> Result<(FlowField, Vec<f64>)> {
        self.run(prev, next, true)
    }

    fn run(
        &self,
        prev: &Frame,
        next: &Frame,
        record_energy: bool,
    ) -> Result<(FlowField, Vec<f64>)> {
        if prev.width() != next.width() || prev.height() != next.height() {
            return Err(Error::DimensionMismatch(
                prev.width(),
                prev.height(),
                next.width(),
                next.height(),
            ));
        }
        let g1 = Plane::from_frame(prev);
        let g2 = Plane::from_frame(next);
        let pyr1 = build_pyramid(g1, &self.params);
        let pyr2 = build_pyramid(g2, &self.params);
        debug_assert_eq!(pyr1.len(), pyr2.len());

        let mut u: Vec<f64> = Vec::new();
        let mut v: Vec<f64> = Vec::new();
        let mut energies = Vec::new();
        for (level_idx, (l1, l2)) in pyr1.iter().zip(&pyr2).enumerate().rev() {
            let (w, h) = (l1.w, l1.h);
            if u.is_empty() {
                u = vec![0.0; w * h];
                v = vec![0.0; w * h];
            } else {
                let prev_level = &pyr1[level_idx + 1];
                let sx = w as f64 / prev_level.w as f64;
                let sy = h as f64 / prev_level.h as f64;
                u = resize_f64(&u, prev_level.w, prev_level.h, w, h)
                    .into_iter()
                    .map(|x| x * sx)
                    .collect();
                v = resize_f64(&v, prev_level.w, prev_level.h, w, h)
                    .into_iter()
                    .map(|x| x * sy)
                    .collect();
            }

            let warped = warp(l2, &u, &v);
            // Spatial gradients of the average of source and warped target;
            // central differences with replicated borders.
            let avg = average(l1, &warped);
            let (ix, iy) = gradients(&avg);
            let it: Vec<f64> = warped
                .v
                .iter()
                .zip(&l1.v)
                .map(|(&a, &b)| (a - b) as f64)
                .collect();
            // Residual constant for total flow: It - Ix*u0 - Iy*v0.
            let ct: Vec<f64> = (0..w * h)
                .map(|i| it[i] - ix[i] * u[i] - iy[i] * v[i])
                .collect();

            let alpha2 = self.params.smoothness_weight * self.params.smoothness_weight;
            let record = record_energy && level_idx == 0;
            for _ in 0..self.params.iterations_per_level {
                sweep_color(&mut u, &mut v, &ix, &iy, &ct, w, h, alpha2, 0);
                sweep_color(&mut u, &mut v, &ix, &iy, &ct, w, h, alpha2, 1);
                if record {
                    energies.push(energy(&u, &v, &ix, &iy, &ct, w, h, alpha2));
                }
            }
        }

        let (w, h) = (pyr1[0].w as u32, pyr1[0].h as u32);
        let mut data = Vec::with_capacity(u.len() * 2);
        for i in 0..u.len() {
            data.push(u[i] as f32);
            data.push(v[i] as f32);
        }
        Ok((FlowField::from_data(w, h, data)?, energies))
    }
}

impl FlowEstimator for VariationalFlow {
    fn estimate(&self, prev: &Frame, next: &Frame) -> Result<FlowField> {
        self.run(prev, next, false).map(|(f, _)| f)
    }
}

/// Convenience wrapper for one-off estimates.
pub fn estimate_flow(prev: &Frame, next: &Frame, params: &FlowParams) -> Result<FlowField> {
    VariationalFlow::new(params.clone())?.estimate(prev, next)
}

/// Estimator lookup by configuration name.
pub fn estimator_by_name(name: &str, params: FlowParams) -> Result<Box<dyn FlowEstimator>> {
    match name {
        "variational" => Ok(Box::new(VariationalFlow::new(params)?)),
        other => Err(Error::InvalidParameter(format!(
            "unknown flow estimator '{other}', available: variational"
        ))),
    }
}

/// Grayscale plane in f32, row-major.
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f32>,
}

impl Plane {
    fn from_frame(frame: &Frame) -> Self {
        let v = frame
            .pixels()
            .chunks_exact(3)
            .map(|px| {
                (0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64) as f32
            })
            .collect();
        Self {
            w: frame.width() as usize,
            h: frame.height() as usize,
            v,
        }
    }

    #[inline]
    fn sample(&self, x: f32, y: f32) -> f32 {
        let x = x.clamp(0.0, (self.w - 1) as f32);
        let y = y.clamp(0.0, (self.h - 1) as f32);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.w - 1);
        let y1 = (y0 + 1).min(self.h - 1);
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let top = self.v[y0 * self.w + x0] * (1.0 - fx) + self.v[y0 * self.w + x1] * fx;
        let bot = self.v[y1 * self.w + x0] * (1.0 - fx) + self.v[y1 * self.w + x1] * fx;
        top * (1.0 - fy) + bot * fy
    }
}

/// Level sizes shrink by `pyramid_scale`; levels below 8x8 are dropped. The
/// full-resolution level always stays.
fn level_dims(w: usize, h: usize, params: &FlowParams) -> Vec<(usize, usize)> {
    let mut dims = vec![(w, h)];
    let (mut cw, mut ch) = (w as f64, h as f64);
    for _ in 1..params.pyramid_levels {
        cw *= params.pyramid_scale;
        ch *= params.pyramid_scale;
        let (rw, rh) = (cw.round() as usize, ch.round() as usize);
        if rw < 8 || rh < 8 {
            break;
        }
        dims.push((rw, rh));
    }
    dims
}

fn build_pyramid(base: Plane, params: &FlowParams) -> Vec<Plane> {
    let dims = level_dims(base.w, base.h, params);
    let mut pyramid = vec![base];
    for &(w, h) in &dims[1..] {
        let prev = pyramid.last().expect("base level present");
        let blurred = blur3(prev);
        pyramid.push(resize_plane(&blurred, w, h));
    }
    pyramid
}

/// 3x3 binomial blur with replicated borders; presmoothing before decimation.
fn blur3(p: &Plane) -> Plane {
    let (w, h) = (p.w, p.h);
    let mut tmp = vec![0.0f32; w * h];
    for r in 0..h {
        for c in 0..w {
            let l = p.v[r * w + c.saturating_sub(1)];
            let m = p.v[r * w + c];
            let rt = p.v[r * w + (c + 1).min(w - 1)];
            tmp[r * w + c] = 0.25 * l + 0.5 * m + 0.25 * rt;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for r in 0..h {
        let up = r.saturating_sub(1);
        let dn = (r + 1).min(h - 1);
        for c in 0..w {
            out[r * w + c] = 0.25 * tmp[up * w + c] + 0.5 * tmp[r * w + c] + 0.25 * tmp[dn * w + c];
        }
    }
    Plane { w, h, v: out }
}

fn resize_plane(p: &Plane, w: usize, h: usize) -> Plane {
    let sx = p.w as f32 / w as f32;
    let sy = p.h as f32 / h as f32;
    let mut v = Vec::with_capacity(w * h);
    for r in 0..h {
        let y = (r as f32 + 0.5) * sy - 0.5;
        for c in 0..w {
            let x = (c as f32 + 0.5) * sx - 0.5;
            v.push(p.sample(x, y));
        }
    }
    Plane { w, h, v }
}

fn resize_f64(data: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    let sx = sw as f64 / dw as f64;
    let sy = sh as f64 / dh as f64;
    let mut out = Vec::with_capacity(dw * dh);
    for r in 0..dh {
        let y = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let fy = y - y0 as f64;
        for c in 0..dw {
            let x = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let fx = x - x0 as f64;
            let top = data[y0 * sw + x0] * (1.0 - fx) + data[y0 * sw + x1] * fx;
            let bot = data[y1 * sw + x0] * (1.0 - fx) + data[y1 * sw + x1] * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

fn warp(p: &Plane, u: &[f64], v: &[f64]) -> Plane {
    let (w, h) = (p.w, p.h);
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            out.push(p.sample(c as f32 + u[i] as f32, r as f32 + v[i] as f32));
        }
    }
    Plane { w, h, v: out }
}

fn average(a: &Plane, b: &Plane) -> Plane {
    let v = a.v.iter().zip(&b.v).map(|(&x, &y)| 0.5 * (x + y)).collect();
    Plane { w: a.w, h: a.h, v }
}

/// Central differences with replicated borders, promoted to f64.
fn gradients(p: &Plane) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (p.w, p.h);
    let mut ix = vec![0.0f64; w * h];
    let mut iy = vec![0.0f64; w * h];
    for r in 0..h {
        let up = r.saturating_sub(1);
        let dn = (r + 1).min(h - 1);
        for c in 0..w {
            let lf = c.saturating_sub(1);
            let rt = (c + 1).min(w - 1);
            let i = r * w + c;
            ix[i] = 0.5 * (p.v[r * w + rt] as f64 - p.v[r * w + lf] as f64);
            iy[i] = 0.5 * (p.v[dn * w + c] as f64 - p.v[up * w + c] as f64);
        }
    }
    (ix, iy)
}

/// One red-black half-sweep: solve the exact 2x2 system at every pixel of
/// the given color. Interior pixels take the branch-free path.
#[allow(clippy::too_many_arguments)]
fn sweep_color(
    u: &mut [f64],
    v: &mut [f64],
    ix: &[f64],
    iy: &[f64],
    ct: &[f64],
    w: usize,
    h: usize,
    alpha2: f64,
    color: usize,
) {
    for r in 0..h {
        let row = r * w;
        let interior_row = r > 0 && r + 1 < h;
        let start = (r + color) & 1;
        for c in (start..w).step_by(2) {
            let i = row + c;
            let (n, su, sv) = if interior_row && c > 0 && c + 1 < w {
                (
                    4.0,
                    u[i - 1] + u[i + 1] + u[i - w] + u[i + w],
                    v[i - 1] + v[i + 1] + v[i - w] + v[i + w],
                )
            } else {
                let mut n = 0.0;
                let mut su = 0.0;
                let mut sv = 0.0;
                if c > 0 {
                    n += 1.0;
                    su += u[i - 1];
                    sv += v[i - 1];
                }
                if c + 1 < w {
                    n += 1.0;
                    su += u[i + 1];
                    sv += v[i + 1];
                }
                if r > 0 {
                    n += 1.0;
                    su += u[i - w];
                    sv += v[i - w];
                }
                if r + 1 < h {
                    n += 1.0;
                    su += u[i + w];
                    sv += v[i + w];
                }
                if n == 0.0 {
                    // 1x1 image: smoothness vanishes and the data term alone
                    // is rank deficient, so leave the initialization.
                    continue;
                }
                (n, su, sv)
            };
            let a = ix[i];
            let b = iy[i];
            let k = ct[i];
            let an = alpha2 * n;
            let a11 = a * a + an;
            let a12 = a * b;
            let a22 = b * b + an;
            let r1 = alpha2 * su - a * k;
            let r2 = alpha2 * sv - b * k;
            let det = a11 * a22 - a12 * a12;
            u[i] = (a22 * r1 - a12 * r2) / det;
            v[i] = (a11 * r2 - a12 * r1) / det;
        }
    }
}

/// Level energy: data residual squared plus alpha^2 times squared forward
/// differences of the flow.
#[allow(clippy::too_many_arguments)]
fn energy(
    u: &[f64],
    v: &[f64],
    ix: &[f64],
    iy: &[f64],
    ct: &[f64],
    w: usize,
    h: usize,
    alpha2: f64,
) -> f64 {
    let mut e = 0.0;
    for i in 0..w * h {
        let r = ix[i] * u[i] + iy[i] * v[i] + ct[i];
        e += r * r;
    }
    let mut s = 0.0;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                let du = u[i + 1] - u[i];
                let dv = v[i + 1] - v[i];
                s += du * du + dv * dv;
            }
            if r + 1 < h {
                let du = u[i + w] - u[i];
                let dv = v[i + w] - v[i];
                s += du * du + dv * dv;
            }
        }
    }
    e + alpha2 * s
}
