use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::data::{upscale, Dihedral, ImageRGB};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::tensor::Element;

/// Anything that maps an LR image to an SR image on the 8-bit scale.
///
/// Outputs are not clamped; callers clamp once after any averaging.
pub trait Upscaler: Sync {
    fn scale(&self) -> usize;
    fn upscale(&self, lr: &ImageRGB) -> Result<ImageRGB>;
}

impl<U: Upscaler + ?Sized> Upscaler for &U {
    fn scale(&self) -> usize {
        (**self).scale()
    }

    fn upscale(&self, lr: &ImageRGB) -> Result<ImageRGB> {
        (**self).upscale(lr)
    }
}

impl<T: Element> Upscaler for Model<T> {
    fn scale(&self) -> usize {
        self.config.scale
    }

    fn upscale(&self, lr: &ImageRGB) -> Result<ImageRGB> {
        let out = self.forward(&lr.to_tensor::<T>())?;
        ImageRGB::from_tensor(&out, 0)
    }
}

/// Plain bicubic interpolation, the reference baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BicubicUpscaler {
    pub scale: usize,
}

impl Upscaler for BicubicUpscaler {
    fn scale(&self) -> usize {
        self.scale
    }

    fn upscale(&self, lr: &ImageRGB) -> Result<ImageRGB> {
        upscale(lr, self.scale)
    }
}

/// Wraps an upscaler and counts forward passes.
#[derive(Debug)]
pub struct CountingUpscaler<U> {
    pub inner: U,
    calls: AtomicUsize,
}

impl<U> CountingUpscaler<U> {
    pub fn new(inner: U) -> Self {
        CountingUpscaler {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<U: Upscaler> Upscaler for CountingUpscaler<U> {
    fn scale(&self) -> usize {
        self.inner.scale()
    }

    fn upscale(&self, lr: &ImageRGB) -> Result<ImageRGB> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.upscale(lr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum EnsembleMode {
    #[default]
    None,
    /// Average over the eight flips and quarter turns.
    Geo,
    /// Complementary-range averaging on top of the geometric ensemble.
    GeoRange,
}

impl EnsembleMode {
    /// Model evaluations per image.
    pub fn passes(self) -> usize {
        match self {
            EnsembleMode::None => 1,
            EnsembleMode::Geo => 8,
            EnsembleMode::GeoRange => 16,
        }
    }
}

impl fmt::Display for EnsembleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleMode::None => "none",
            EnsembleMode::Geo => "geo",
            EnsembleMode::GeoRange => "geo+range",
        })
    }
}

impl FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(EnsembleMode::None),
            "geo" => Ok(EnsembleMode::Geo),
            "geo+range" => Ok(EnsembleMode::GeoRange),
            other => Err(Error::Argument(format!(
                "ensemble must be none, geo or geo+range, got `{other}`"
            ))),
        }
    }
}

/// Elementwise mean by pairwise halving, so averaging identical images is
/// exact in floating point.
fn pairwise_mean(mut images: Vec<ImageRGB>) -> Result<ImageRGB> {
    if !images.len().is_power_of_two() {
        return ImageRGB::mean_of(&images);
    }
    while images.len() > 1 {
        let mut next = Vec::with_capacity(images.len() / 2);
        let mut it = images.into_iter();
        while let (Some(a), Some(b)) = (it.next(), it.next()) {
            if a.dims() != b.dims() {
                return Err(Error::dim("ensemble branches differ in size"));
            }
            let mut s = a;
            for (x, y) in s.data_mut().iter_mut().zip(b.data()) {
                *x = (*x + y) * 0.5;
            }
            next.push(s);
        }
        images = next;
    }
    Ok(images.pop().expect("one image left"))
}

/// Runs `model` on all eight dihedral transforms of `lr`, undoes each
/// transform on the output, and averages.
pub fn geometric_self_ensemble<U: Upscaler + ?Sized>(model: &U, lr: &ImageRGB) -> Result<ImageRGB> {
    let outs = Dihedral::all()
        .iter()
        .map(|t| Ok(t.invert(&model.upscale(&t.apply(lr))?)))
        .collect::<Result<Vec<_>>>()?;
    pairwise_mean(outs)
}

fn range_average(
    lr: &ImageRGB,
    predict: impl Fn(&ImageRGB) -> Result<ImageRGB>,
) -> Result<ImageRGB> {
    let y = predict(lr)?;
    let y_bar = predict(&lr.complement())?;
    if y.dims() != y_bar.dims() {
        return Err(Error::dim("ensemble branches differ in size"));
    }
    let mut out = y;
    for (a, b) in out.data_mut().iter_mut().zip(y_bar.data()) {
        *a = (*a + (255.0 - b)) * 0.5;
    }
    Ok(out)
}

/// `[f(x) + 255 - f(255 - x)] / 2`.
pub fn data_range_ensemble<U: Upscaler + ?Sized>(model: &U, lr: &ImageRGB) -> Result<ImageRGB> {
    range_average(lr, |x| model.upscale(x))
}

/// The range ensemble with the geometric ensemble as its predictor.
pub fn geo_range_ensemble<U: Upscaler + ?Sized>(model: &U, lr: &ImageRGB) -> Result<ImageRGB> {
    range_average(lr, |x| geometric_self_ensemble(model, x))
}

/// Unclamped prediction for `mode`.
pub fn predict<U: Upscaler + ?Sized>(model: &U, lr: &ImageRGB, mode: EnsembleMode) -> Result<ImageRGB> {
    match mode {
        EnsembleMode::None => model.upscale(lr),
        EnsembleMode::Geo => geometric_self_ensemble(model, lr),
        EnsembleMode::GeoRange => geo_range_ensemble(model, lr),
    }
}

/// Final 8-bit output: prediction, one clamp to [0, 255], rounding.
pub fn super_resolve<U: Upscaler + ?Sized>(model: &U, lr: &ImageRGB, mode: EnsembleMode) -> Result<ImageRGB> {
    Ok(predict(model, lr, mode)?.quantize())
}
