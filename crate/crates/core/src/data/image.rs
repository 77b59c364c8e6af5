use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor4};

/// Planar RGB image with values on the 8-bit scale `[0, 255]`.
///
/// Values are only clamped at I/O boundaries; intermediate results may leave
/// the range.
#[derive(Clone, PartialEq, Debug)]
pub struct ImageRGB {
    height: usize,
    width: usize,
    /// Three planes of `height * width` values, in R, G, B order.
    data: Vec<f64>,
}

/// Single-channel luma image.
#[derive(Clone, PartialEq, Debug)]
pub struct ImageY {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl ImageY {
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Removes `shave` pixels from every border.
    pub fn shave(&self, shave: usize) -> Result<ImageY> {
        if 2 * shave >= self.height || 2 * shave >= self.width {
            return Err(Error::dim(format!(
                "cannot shave {shave} px from a {}x{} image",
                self.height, self.width
            )));
        }
        let h = self.height - 2 * shave;
        let w = self.width - 2 * shave;
        let mut data = Vec::with_capacity(h * w);
        for y in 0..h {
            let row = (y + shave) * self.width + shave;
            data.extend_from_slice(&self.data[row..row + w]);
        }
        Ok(ImageY {
            height: h,
            width: w,
            data,
        })
    }
}

impl ImageRGB {
    pub fn new(height: usize, width: usize) -> Self {
        ImageRGB {
            height,
            width,
            data: vec![0.0; 3 * height * width],
        }
    }

    pub fn from_planes(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * height * width {
            return Err(Error::dim(format!(
                "{height}x{width} RGB image needs {} values, got {}",
                3 * height * width,
                data.len()
            )));
        }
        Ok(ImageRGB {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut img = ImageRGB::new(height, width);
        for c in 0..3 {
            for y in 0..height {
                for x in 0..width {
                    img.set(c, y, x, f(c, y, x));
                }
            }
        }
        img
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageRGB {
        ImageRGB {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamp(&self) -> ImageRGB {
        self.map(|v| v.clamp(0.0, 255.0))
    }

    /// Clamp and round to the nearest 8-bit level, as writing to disk would.
    pub fn quantize(&self) -> ImageRGB {
        self.map(|v| v.clamp(0.0, 255.0).round())
    }

    /// `255 - v` on every value.
    pub fn complement(&self) -> ImageRGB {
        self.map(|v| 255.0 - v)
    }

    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<ImageRGB> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::dim(format!(
                "crop {height}x{width} at ({top}, {left}) exceeds {}x{} image",
                self.height, self.width
            )));
        }
        let mut out = ImageRGB::new(height, width);
        for c in 0..3 {
            for y in 0..height {
                let src = (c * self.height + top + y) * self.width + left;
                let dst = (c * height + y) * width;
                out.data[dst..dst + width].copy_from_slice(&self.data[src..src + width]);
            }
        }
        Ok(out)
    }

    /// Largest top-left crop whose sides are multiples of `scale`.
    pub fn crop_to_multiple(&self, scale: usize) -> Result<ImageRGB> {
        let h = self.height - self.height % scale;
        let w = self.width - self.width % scale;
        if h == 0 || w == 0 {
            return Err(Error::dim(format!(
                "{}x{} image is smaller than scale {scale}",
                self.height, self.width
            )));
        }
        self.crop(0, 0, h, w)
    }

    /// Elementwise mean of equally sized images.
    pub fn mean_of(images: &[ImageRGB]) -> Result<ImageRGB> {
        let first = images
            .first()
            .ok_or_else(|| Error::Argument("mean of no images".into()))?;
        let mut acc = vec![0.0; first.data.len()];
        for img in images {
            if img.dims() != first.dims() {
                return Err(Error::dim("cannot average images of different sizes"));
            }
            for (a, &v) in acc.iter_mut().zip(&img.data) {
                *a += v;
            }
        }
        let k = images.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        ImageRGB::from_planes(first.height, first.width, acc)
    }

    /// `[1, h, w, 3]` tensor scaled to `[0, 1]`.
    pub fn to_tensor<T: Element>(&self) -> Tensor4<T> {
        Tensor4::from_fn(Shape::new(1, self.height, self.width, 3), |_, y, x, c| {
            T::from_f64_lossy(self.at(c, y, x) / 255.0)
        })
    }

    /// Stack equally sized images into one `[N, h, w, 3]` tensor in `[0, 1]`.
    pub fn batch_to_tensor<T: Element>(images: &[&ImageRGB]) -> Result<Tensor4<T>> {
        let first = images
            .first()
            .ok_or_else(|| Error::Argument("empty image batch".into()))?;
        if images.iter().any(|i| i.dims() != first.dims()) {
            return Err(Error::dim("batch images differ in size"));
        }
        Ok(Tensor4::from_fn(
            Shape::new(images.len(), first.height, first.width, 3),
            |n, y, x, c| T::from_f64_lossy(images[n].at(c, y, x) / 255.0),
        ))
    }

    /// Batch item `n` of a `[N, h, w, 3]` tensor in `[0, 1]`, rescaled to `[0, 255]`.
    pub fn from_tensor<T: Element>(t: &Tensor4<T>, n: usize) -> Result<ImageRGB> {
        let s = t.shape();
        if s.c != 3 || n >= s.n {
            return Err(Error::dim(format!(
                "cannot read RGB image {n} from tensor {s}"
            )));
        }
        Ok(ImageRGB::from_fn(s.h, s.w, |c, y, x| {
            t.at(n, y, x, c).as_f64() * 255.0
        }))
    }
}

/// BT.601 studio-swing luma: `16 + (65.738 R + 129.057 G + 25.064 B) / 256`.
pub fn rgb_to_y(img: &ImageRGB) -> ImageY {
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| 16.0 + (65.738 * r + 129.057 * g + 25.064 * b) / 256.0)
        .collect();
    ImageY {
        height: img.height,
        width: img.width,
        data,
    }
}

fn decode(bytes: &[u8], path: &Path) -> Result<DynamicImage> {
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| decode_err(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        Some(other) => {
            return Err(Error::UnsupportedImage(format!(
                "{}: format {other:?} (expected PNG or binary PPM)",
                path.display()
            )))
        }
        None => {
            return Err(Error::UnsupportedImage(format!(
                "{}: unrecognised image format",
                path.display()
            )))
        }
    }
    reader.decode().map_err(|e| decode_err(e.to_string()))
}

/// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA) or a binary P6 PPM.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRGB> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = decode(&bytes, path)?;
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => {
            return Err(Error::UnsupportedImage(format!(
                "{}: unsupported pixel depth {other:?} (8-bit only)",
                path.display()
            )))
        }
    }
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut out = ImageRGB::new(h, w);
    for (x, y, px) in rgb.enumerate_pixels() {
        for c in 0..3 {
            out.set(c, y as usize, x as usize, px[c] as f64);
        }
    }
    Ok(out)
}

/// Writes PNG or binary PPM depending on the extension (`.ppm` / `.pnm`
/// give PPM, everything else PNG). Values are clamped and rounded.
pub fn save_image(img: &ImageRGB, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = RgbImage::new(img.width as u32, img.height as u32);
    for (x, y, px) in buf.enumerate_pixels_mut() {
        for c in 0..3 {
            px[c] = img.at(c, y as usize, x as usize).clamp(0.0, 255.0).round() as u8;
        }
    }
    let is_ppm = matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("ppm") | Some("pnm")
    );
    if is_ppm {
        let mut bytes = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
        bytes.extend_from_slice(buf.as_raw());
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    } else {
        buf.save_with_format(path, ImageFormat::Png)
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
    }
}
