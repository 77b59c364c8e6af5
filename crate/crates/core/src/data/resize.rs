//! Separable bicubic resampling (a = -0.5) with optional antialiasing.
//!
//! When shrinking with antialiasing the cubic kernel is stretched by the
//! inverse scale, so every output pixel integrates over its full footprint.
//! Source coordinates past the border are clamped to the edge.

use crate::error::{Error, Result};

use super::image::ImageRGB;

const A: f64 = -0.5;

fn cubic(x: f64) -> f64 {
    let ax = x.abs();
    let ax2 = ax * ax;
    let ax3 = ax2 * ax;
    if ax <= 1.0 {
        (A + 2.0) * ax3 - (A + 3.0) * ax2 + 1.0
    } else if ax < 2.0 {
        A * ax3 - 5.0 * A * ax2 + 8.0 * A * ax - 4.0 * A
    } else {
        0.0
    }
}

/// Per-output-pixel source indices and normalised weights along one axis.
struct Contributions {
    taps: usize,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

fn contributions(in_len: usize, out_len: usize, scale: f64, antialias: bool) -> Contributions {
    let shrink = antialias && scale < 1.0;
    let kernel_width = if shrink { 4.0 / scale } else { 4.0 };
    let taps = kernel_width.ceil() as usize + 2;
    let mut indices = Vec::with_capacity(out_len * taps);
    let mut weights = Vec::with_capacity(out_len * taps);
    for o in 0..out_len {
        // pixel centres line up: (o + 0.5) / scale = u + 0.5
        let u = (o as f64 + 0.5) / scale - 0.5;
        let left = (u - kernel_width / 2.0).floor() as i64;
        let start = weights.len();
        for t in 0..taps {
            let idx = left + t as i64;
            let d = u - idx as f64;
            let w = if shrink { scale * cubic(scale * d) } else { cubic(d) };
            indices.push(idx.clamp(0, in_len as i64 - 1) as usize);
            weights.push(w);
        }
        let sum: f64 = weights[start..].iter().sum();
        weights[start..].iter_mut().for_each(|w| *w /= sum);
    }
    Contributions {
        taps,
        indices,
        weights,
    }
}

/// Resizes to exactly `out_h x out_w`.
pub fn bicubic_resize_to(
    img: &ImageRGB,
    out_h: usize,
    out_w: usize,
    antialias: bool,
) -> Result<ImageRGB> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::Argument(format!(
            "bicubic target size {out_h}x{out_w} must be positive"
        )));
    }
    let (in_h, in_w) = img.dims();
    if in_h == 0 || in_w == 0 {
        return Err(Error::dim("cannot resize an empty image"));
    }
    let rows = contributions(in_h, out_h, out_h as f64 / in_h as f64, antialias);
    let cols = contributions(in_w, out_w, out_w as f64 / in_w as f64, antialias);

    let mut out = ImageRGB::new(out_h, out_w);
    let mut tmp = vec![0.0; out_h * in_w];
    for c in 0..3 {
        let src = img.plane(c);
        // vertical pass first, then horizontal
        for o in 0..out_h {
            let idx = &rows.indices[o * rows.taps..(o + 1) * rows.taps];
            let wts = &rows.weights[o * rows.taps..(o + 1) * rows.taps];
            let dst = &mut tmp[o * in_w..(o + 1) * in_w];
            dst.fill(0.0);
            for (&i, &w) in idx.iter().zip(wts) {
                for (d, &s) in dst.iter_mut().zip(&src[i * in_w..(i + 1) * in_w]) {
                    *d += w * s;
                }
            }
        }
        let plane = out.plane_mut(c);
        for y in 0..out_h {
            let row = &tmp[y * in_w..(y + 1) * in_w];
            for x in 0..out_w {
                let idx = &cols.indices[x * cols.taps..(x + 1) * cols.taps];
                let wts = &cols.weights[x * cols.taps..(x + 1) * cols.taps];
                plane[y * out_w + x] = idx.iter().zip(wts).map(|(&i, &w)| w * row[i]).sum();
            }
        }
    }
    Ok(out)
}

/// Resizes by a positive factor; output sides are `ceil(side * factor)`.
pub fn bicubic_resize(img: &ImageRGB, factor: f64, antialias: bool) -> Result<ImageRGB> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::Argument(format!(
            "resize factor must be positive, got {factor}"
        )));
    }
    let out_h = (img.height() as f64 * factor - 1e-9).ceil() as usize;
    let out_w = (img.width() as f64 * factor - 1e-9).ceil() as usize;
    bicubic_resize_to(img, out_h, out_w, antialias)
}

/// Bicubic LR synthesis: shrink an HR image by an integer `scale`.
pub fn downscale(hr: &ImageRGB, scale: usize, antialias: bool) -> Result<ImageRGB> {
    if scale == 0 {
        return Err(Error::Argument("scale must be >= 1".into()));
    }
    bicubic_resize_to(hr, hr.height() / scale, hr.width() / scale, antialias)
}

/// Bicubic upscaling by an integer factor.
pub fn upscale(lr: &ImageRGB, scale: usize) -> Result<ImageRGB> {
    bicubic_resize_to(lr, lr.height() * scale, lr.width() * scale, true)
}
