//! Procedural test images for runs without a benchmark dataset on disk.
//!
//! Each image is a smooth colour gradient overlaid with antialiased discs,
//! rotated rectangles, thin strokes and a striped texture patch, so it has
//! flat regions, edges at many orientations and some high-frequency detail.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::image::ImageRGB;

enum Shape {
    Disc { cy: f64, cx: f64, r: f64 },
    Rect { cy: f64, cx: f64, hh: f64, hw: f64, cos: f64, sin: f64 },
    Stroke { y0: f64, x0: f64, y1: f64, x1: f64, half: f64 },
    Stripes { cy: f64, cx: f64, r: f64, freq: f64, cos: f64, sin: f64 },
}

struct Layer {
    shape: Shape,
    color: [f64; 3],
    alt: [f64; 3],
}

impl Layer {
    /// Colour at `(y, x)` if the layer covers it.
    fn sample(&self, y: f64, x: f64) -> Option<[f64; 3]> {
        match self.shape {
            Shape::Disc { cy, cx, r } => {
                ((y - cy).powi(2) + (x - cx).powi(2) <= r * r).then_some(self.color)
            }
            Shape::Rect { cy, cx, hh, hw, cos, sin } => {
                let (dy, dx) = (y - cy, x - cx);
                let u = dx * cos + dy * sin;
                let v = -dx * sin + dy * cos;
                (u.abs() <= hw && v.abs() <= hh).then_some(self.color)
            }
            Shape::Stroke { y0, x0, y1, x1, half } => {
                let (vy, vx) = (y1 - y0, x1 - x0);
                let len2 = vy * vy + vx * vx;
                let t = (((y - y0) * vy + (x - x0) * vx) / len2).clamp(0.0, 1.0);
                let (py, px) = (y0 + t * vy, x0 + t * vx);
                ((y - py).powi(2) + (x - px).powi(2) <= half * half).then_some(self.color)
            }
            Shape::Stripes { cy, cx, r, freq, cos, sin } => {
                if (y - cy).powi(2) + (x - cx).powi(2) > r * r {
                    return None;
                }
                let phase = (x * cos + y * sin) * freq;
                Some(if phase.sin() >= 0.0 { self.color } else { self.alt })
            }
        }
    }
}

fn color(rng: &mut impl Rng) -> [f64; 3] {
    [
        rng.random_range(10.0..245.0),
        rng.random_range(10.0..245.0),
        rng.random_range(10.0..245.0),
    ]
}

/// Deterministic `height x width` image for `seed`, values in `[0, 255]`.
pub fn synthetic_image(height: usize, width: usize, seed: u64) -> ImageRGB {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a6e);
    let (h, w) = (height as f64, width as f64);
    let size = h.min(w);
    let base = color(&mut rng);
    let gy = [
        rng.random_range(-60.0..60.0),
        rng.random_range(-60.0..60.0),
        rng.random_range(-60.0..60.0),
    ];
    let gx = [
        rng.random_range(-60.0..60.0),
        rng.random_range(-60.0..60.0),
        rng.random_range(-60.0..60.0),
    ];

    let count = 6 + (height * width / 900).min(18);
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let cy = rng.random_range(0.0..h);
        let cx = rng.random_range(0.0..w);
        let angle = rng.random_range(0.0..PI);
        let shape = match i % 4 {
            0 => Shape::Disc {
                cy,
                cx,
                r: rng.random_range(0.05..0.25) * size,
            },
            1 => Shape::Rect {
                cy,
                cx,
                hh: rng.random_range(0.04..0.2) * size,
                hw: rng.random_range(0.04..0.3) * size,
                cos: angle.cos(),
                sin: angle.sin(),
            },
            2 => {
                let len = rng.random_range(0.2..0.7) * size;
                Shape::Stroke {
                    y0: cy,
                    x0: cx,
                    y1: cy + len * angle.sin(),
                    x1: cx + len * angle.cos(),
                    half: rng.random_range(0.6..2.5),
                }
            }
            _ => Shape::Stripes {
                cy,
                cx,
                r: rng.random_range(0.08..0.22) * size,
                freq: rng.random_range(0.35..1.1),
                cos: angle.cos(),
                sin: angle.sin(),
            },
        };
        layers.push(Layer {
            shape,
            color: color(&mut rng),
            alt: color(&mut rng),
        });
    }

    // 4x4 supersampling per pixel
    const SS: usize = 4;
    let mut img = ImageRGB::new(height, width);
    for y in 0..height {
        for x in 0..width {
            let mut acc = [0.0; 3];
            for sy in 0..SS {
                for sx in 0..SS {
                    let py = y as f64 + (sy as f64 + 0.5) / SS as f64;
                    let px = x as f64 + (sx as f64 + 0.5) / SS as f64;
                    let mut c = [0.0; 3];
                    for k in 0..3 {
                        c[k] = base[k] + gy[k] * (py / h - 0.5) + gx[k] * (px / w - 0.5);
                    }
                    for layer in &layers {
                        if let Some(lc) = layer.sample(py, px) {
                            c = lc;
                        }
                    }
                    for k in 0..3 {
                        acc[k] += c[k];
                    }
                }
            }
            for (k, a) in acc.iter().enumerate() {
                img.set(k, y, x, (a / (SS * SS) as f64).clamp(0.0, 255.0).round());
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = synthetic_image(32, 48, 3);
        assert_eq!(a, synthetic_image(32, 48, 3));
        assert_ne!(a, synthetic_image(32, 48, 4));
        assert!(a.data().iter().all(|&v| (0.0..=255.0).contains(&v) && v.fract() == 0.0));
    }
}
