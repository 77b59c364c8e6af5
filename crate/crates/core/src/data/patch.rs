use rand::Rng;

use crate::error::{Error, Result};

use super::image::ImageRGB;

/// Aligned LR/HR training crops; the HR origin is `scale` times the LR origin.
#[derive(Clone, PartialEq, Debug)]
pub struct PatchPair {
    pub lr: ImageRGB,
    pub hr: ImageRGB,
    /// Top-left corner of the LR crop in its source image, `(y, x)`.
    pub lr_origin: (usize, usize),
}

/// Uniformly random aligned crop of `p x p` LR pixels.
///
/// Returns [`Error::ImageTooSmall`] when the LR image cannot hold a patch,
/// which samplers treat as "skip this image".
pub fn extract_patch_pair(
    hr: &ImageRGB,
    lr: &ImageRGB,
    p: usize,
    scale: usize,
    rng: &mut impl Rng,
) -> Result<PatchPair> {
    let (lh, lw) = lr.dims();
    if hr.dims() != (lh * scale, lw * scale) {
        return Err(Error::dim(format!(
            "HR {}x{} is not x{scale} of LR {lh}x{lw}",
            hr.height(),
            hr.width()
        )));
    }
    if p == 0 || lh < p || lw < p {
        return Err(Error::ImageTooSmall {
            height: lh,
            width: lw,
            patch: p,
        });
    }
    let y = rng.random_range(0..=lh - p);
    let x = rng.random_range(0..=lw - p);
    Ok(PatchPair {
        lr: lr.crop(y, x, p, p)?,
        hr: hr.crop(y * scale, x * scale, p * scale, p * scale)?,
        lr_origin: (y, x),
    })
}

pub fn hflip(img: &ImageRGB) -> ImageRGB {
    let (h, w) = img.dims();
    ImageRGB::from_fn(h, w, |c, y, x| img.at(c, y, w - 1 - x))
}

pub fn vflip(img: &ImageRGB) -> ImageRGB {
    let (h, w) = img.dims();
    ImageRGB::from_fn(h, w, |c, y, x| img.at(c, h - 1 - y, x))
}

/// Quarter turn clockwise; an `h x w` image becomes `w x h`.
pub fn rot90(img: &ImageRGB) -> ImageRGB {
    let (h, w) = img.dims();
    ImageRGB::from_fn(w, h, |c, y, x| img.at(c, h - 1 - x, y))
}

/// Quarter turn counter-clockwise, the inverse of [`rot90`].
pub fn rot270(img: &ImageRGB) -> ImageRGB {
    let (h, w) = img.dims();
    ImageRGB::from_fn(w, h, |c, y, x| img.at(c, x, w - 1 - y))
}

/// An element of the symmetry group of the square, as horizontal flip, then
/// vertical flip, then a clockwise quarter turn.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Dihedral {
    pub hflip: bool,
    pub vflip: bool,
    pub rot90: bool,
}

impl Dihedral {
    pub const IDENTITY: Dihedral = Dihedral {
        hflip: false,
        vflip: false,
        rot90: false,
    };

    /// All eight group elements; index bits are (rot90, vflip, hflip).
    pub fn all() -> [Dihedral; 8] {
        std::array::from_fn(|i| Dihedral {
            hflip: i & 1 != 0,
            vflip: i & 2 != 0,
            rot90: i & 4 != 0,
        })
    }

    pub fn apply(&self, img: &ImageRGB) -> ImageRGB {
        let mut out = img.clone();
        if self.hflip {
            out = hflip(&out);
        }
        if self.vflip {
            out = vflip(&out);
        }
        if self.rot90 {
            out = rot90(&out);
        }
        out
    }

    pub fn invert(&self, img: &ImageRGB) -> ImageRGB {
        let mut out = img.clone();
        if self.rot90 {
            out = rot270(&out);
        }
        if self.vflip {
            out = vflip(&out);
        }
        if self.hflip {
            out = hflip(&out);
        }
        out
    }
}

/// Applies the same geometric transform to both patches; `complement` maps
/// every value `v` to `255 - v` on both.
pub fn augment(pair: &PatchPair, hflip: bool, vflip: bool, rot90: bool, complement: bool) -> PatchPair {
    let t = Dihedral {
        hflip,
        vflip,
        rot90,
    };
    let mut lr = t.apply(&pair.lr);
    let mut hr = t.apply(&pair.hr);
    if complement {
        lr = lr.complement();
        hr = hr.complement();
    }
    PatchPair {
        lr,
        hr,
        lr_origin: pair.lr_origin,
    }
}

/// Independent fair coin per augmentation flag.
pub fn random_augment(pair: &PatchPair, rng: &mut impl Rng) -> PatchPair {
    let hf = rng.random_bool(0.5);
    let vf = rng.random_bool(0.5);
    let rt = rng.random_bool(0.5);
    let cm = rng.random_bool(0.5);
    augment(pair, hf, vf, rt, cm)
}
