use crate::data::{rgb_to_y, ImageRGB, ImageY};
use crate::error::{Error, Result};

/// Reported value for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const PEAK: f64 = 255.0;

fn shaved_luma(pred: &ImageRGB, gt: &ImageRGB, shave: usize) -> Result<(ImageY, ImageY)> {
    if pred.dims() != gt.dims() {
        return Err(Error::dim(format!(
            "prediction {:?} and ground truth {:?} differ in size",
            pred.dims(),
            gt.dims()
        )));
    }
    Ok((rgb_to_y(pred).shave(shave)?, rgb_to_y(gt).shave(shave)?))
}

/// PSNR from a mean squared error on the 8-bit scale, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP_DB)
}

pub fn mse_y(pred: &ImageRGB, gt: &ImageRGB, shave: usize) -> Result<f64> {
    let (p, g) = shaved_luma(pred, gt, shave)?;
    let sum: f64 = p.data.iter().zip(&g.data).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(sum / p.data.len() as f64)
}

/// Y-channel PSNR in dB after removing `shave` pixels from each border.
pub fn psnr_y(pred: &ImageRGB, gt: &ImageRGB, shave: usize) -> Result<f64> {
    Ok(psnr_from_mse(mse_y(pred, gt, shave)?))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable Gaussian filter over window positions fully inside the image.
fn filter_valid(data: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oh = h - SSIM_WINDOW + 1;
    let ow = w - SSIM_WINDOW + 1;
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = win.iter().zip(&row[x..]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for (k, &wk) in win.iter().enumerate() {
            let src = &tmp[(y + k) * ow..(y + k + 1) * ow];
            for (o, &s) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *o += wk * s;
            }
        }
    }
    out
}

/// Mean structural similarity of the Y channels: 11x11 Gaussian window with
/// sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255, averaged over valid positions.
pub fn ssim_y(pred: &ImageRGB, gt: &ImageRGB, shave: usize) -> Result<f64> {
    let (p, g) = shaved_luma(pred, gt, shave)?;
    ssim_luma(&p, &g)
}

pub fn ssim_luma(p: &ImageY, g: &ImageY) -> Result<f64> {
    if (p.height, p.width) != (g.height, g.width) {
        return Err(Error::dim("SSIM inputs differ in size"));
    }
    let (h, w) = (p.height, p.width);
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::dim(format!(
            "{h}x{w} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let win = gaussian_window();
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let xx: Vec<f64> = p.data.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = g.data.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = p.data.iter().zip(&g.data).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(&p.data, h, w, &win);
    let mu_y = filter_valid(&g.data, h, w, &win);
    let e_xx = filter_valid(&xx, h, w, &win);
    let e_yy = filter_valid(&yy, h, w, &win);
    let e_xy = filter_valid(&xy, h, w, &win);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let sxx = e_xx[i] - mx * mx;
        let syy = e_yy[i] - my * my;
        let sxy = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
            / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::synthetic_image;

    #[test]
    fn identical_images_hit_the_cap() {
        let a = synthetic_image(24, 24, 0);
        assert_eq!(psnr_y(&a, &a, 2).unwrap(), PSNR_CAP_DB);
        assert!((ssim_y(&a, &a, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_scale_error_is_zero_db() {
        assert_eq!(psnr_from_mse(255.0 * 255.0), 0.0);
    }

    #[test]
    fn psnr_decreases_with_mse() {
        let mut last = f64::INFINITY;
        for mse in [0.01, 0.5, 3.0, 40.0, 900.0] {
            let p = psnr_from_mse(mse);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn size_errors() {
        let a = synthetic_image(20, 20, 0);
        let b = synthetic_image(20, 21, 0);
        assert!(psnr_y(&a, &b, 0).is_err());
        let small = synthetic_image(12, 12, 0);
        assert!(ssim_y(&small, &small, 1).is_err());
    }
}
