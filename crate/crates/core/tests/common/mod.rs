#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use fc2n::data::ImageRGB;
use fc2n::eval::Upscaler;
use fc2n::model::ModelConfig;
use fc2n::tensor::{Shape, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

/// Frozen values from `tests/fixtures/reference_values.txt`, keyed by the
/// line's leading fields.
pub fn reference_values() -> HashMap<String, f64> {
    let text = std::fs::read_to_string(fixture("reference_values.txt")).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (key, value) = l.rsplit_once(' ').unwrap();
            (key.to_string(), value.parse().unwrap())
        })
        .collect()
}

pub fn random_tensor(shape: Shape, seed: u64) -> Tensor4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor4::from_fn(shape, |_, _, _, _| rng.random_range(-1.0..1.0))
}

/// n = m = 2 with widths 8/32.
pub fn tiny_config(scale: usize) -> ModelConfig {
    ModelConfig {
        n: 2,
        m: 2,
        base_width: 8,
        expand_width: 32,
        ..ModelConfig::lightweight(scale)
    }
}

/// Same-padded cross-correlation written as plain nested loops.
pub fn conv_oracle(input: &Tensor4<f64>, kernel: &Tensor4<f64>, bias: &Tensor4<f64>) -> Tensor4<f64> {
    let s = input.shape();
    let k = kernel.shape().n;
    let c_out = kernel.shape().c;
    let pad = (k / 2) as i64;
    Tensor4::from_fn(Shape::new(s.n, s.h, s.w, c_out), |n, y, x, co| {
        let mut acc = bias.at(0, 0, 0, co);
        for ky in 0..k {
            for kx in 0..k {
                let iy = y as i64 + ky as i64 - pad;
                let ix = x as i64 + kx as i64 - pad;
                if iy < 0 || ix < 0 || iy >= s.h as i64 || ix >= s.w as i64 {
                    continue;
                }
                for ci in 0..s.c {
                    acc += input.at(n, iy as usize, ix as usize, ci) * kernel.at(ky, kx, ci, co);
                }
            }
        }
        acc
    })
}

pub fn max_abs_diff(a: &Tensor4<f64>, b: &Tensor4<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest per-sample difference between two images of equal size.
pub fn image_diff(a: &ImageRGB, b: &ImageRGB) -> f64 {
    assert_eq!(a.dims(), b.dims());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Index-formula versions of the eight transforms, written independently
/// of the library: `(h, v, r)` = horizontal flip, vertical flip, then a
/// clockwise quarter turn.
pub fn transform(img: &ImageRGB, h: bool, v: bool, r: bool) -> ImageRGB {
    let (hh, ww) = img.dims();
    let flipped = ImageRGB::from_fn(hh, ww, |c, y, x| {
        img.at(c, if v { hh - 1 - y } else { y }, if h { ww - 1 - x } else { x })
    });
    if r {
        ImageRGB::from_fn(ww, hh, |c, y, x| flipped.at(c, hh - 1 - x, y))
    } else {
        flipped
    }
}

pub fn untransform(img: &ImageRGB, h: bool, v: bool, r: bool) -> ImageRGB {
    let (hh, ww) = img.dims();
    let unrotated = if r {
        ImageRGB::from_fn(ww, hh, |c, y, x| img.at(c, x, ww - 1 - y))
    } else {
        img.clone()
    };
    let (hh, ww) = unrotated.dims();
    ImageRGB::from_fn(hh, ww, |c, y, x| {
        unrotated.at(c, if v { hh - 1 - y } else { y }, if h { ww - 1 - x } else { x })
    })
}

pub fn geo_oracle<U: Upscaler>(model: &U, lr: &ImageRGB) -> ImageRGB {
    let mut outs = Vec::new();
    for bits in 0..8 {
        let (h, v, r) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
        let sr = model.upscale(&transform(lr, h, v, r)).unwrap();
        outs.push(untransform(&sr, h, v, r));
    }
    let (hh, ww) = outs[0].dims();
    ImageRGB::from_fn(hh, ww, |c, y, x| outs.iter().map(|o| o.at(c, y, x)).sum::<f64>() / 8.0)
}

pub fn range_oracle(lr: &ImageRGB, f: impl Fn(&ImageRGB) -> ImageRGB) -> ImageRGB {
    let y = f(lr);
    let inv = f(&lr.map(|v| 255.0 - v));
    ImageRGB::from_fn(y.height(), y.width(), |c, r, x| 0.5 * (y.at(c, r, x) + 255.0 - inv.at(c, r, x)))
}
