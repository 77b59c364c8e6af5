use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::data::{Dataset, ImagePair};
use crate::error::{Error, Result};

use super::ensemble::{super_resolve, EnsembleMode, Upscaler};
use super::metrics::{psnr_y, ssim_y};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub image: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub scale: usize,
    pub mode: EnsembleMode,
    pub shave: usize,
    /// One row per image, in file-name order.
    pub rows: Vec<EvalRow>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

impl EvalReport {
    pub fn from_rows(
        dataset: impl Into<String>,
        scale: usize,
        mode: EnsembleMode,
        shave: usize,
        rows: Vec<EvalRow>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset("no images evaluated".into()));
        }
        let n = rows.len() as f64;
        let mean_psnr = rows.iter().map(|r| r.psnr).sum::<f64>() / n;
        let mean_ssim = rows.iter().map(|r| r.ssim).sum::<f64>() / n;
        Ok(EvalReport {
            dataset: dataset.into(),
            scale,
            mode,
            shave,
            rows,
            mean_psnr,
            mean_ssim,
        })
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.image.len())
            .chain(["image".len(), "MEAN".len()])
            .max()
            .unwrap_or(5);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} x{} ensemble={} shave={}",
            self.dataset, self.scale, self.mode, self.shave
        );
        let _ = writeln!(s, "{:<width$}  {:>9}  {:>7}", "image", "PSNR(dB)", "SSIM");
        for r in &self.rows {
            let _ = writeln!(s, "{:<width$}  {:>9.4}  {:>7.5}", r.image, r.psnr, r.ssim);
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:>9.4}  {:>7.5}",
            "MEAN", self.mean_psnr, self.mean_ssim
        );
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("image,psnr_db,ssim\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", csv_field(&r.image), r.psnr, r.ssim);
        }
        let _ = writeln!(s, "MEAN,{},{}", self.mean_psnr, self.mean_ssim);
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn evaluate_pair<U: Upscaler + ?Sized>(
    model: &U,
    pair: &ImagePair,
    mode: EnsembleMode,
    shave: usize,
) -> Result<EvalRow> {
    let sr = super_resolve(model, &pair.lr, mode)?;
    Ok(EvalRow {
        image: pair.name.clone(),
        psnr: psnr_y(&sr, &pair.hr, shave)?,
        ssim: ssim_y(&sr, &pair.hr, shave)?,
    })
}

/// Scores `model` on every pair; images run in parallel, rows keep dataset order.
///
/// `shave` defaults to the scale.
pub fn evaluate_pairs<U: Upscaler + ?Sized>(
    model: &U,
    data: &Dataset,
    name: &str,
    mode: EnsembleMode,
    shave: Option<usize>,
) -> Result<EvalReport> {
    if model.scale() != data.scale {
        return Err(Error::ScaleMismatch {
            checkpoint: model.scale(),
            requested: data.scale,
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset(format!("{name} has no images")));
    }
    let shave = shave.unwrap_or(data.scale);
    let rows = data
        .pairs
        .par_iter()
        .map(|pair| evaluate_pair(model, pair, mode, shave))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_rows(name, data.scale, mode, shave, rows)
}

/// Loads `hr_dir` (with paired LR files from `lr_dir`, or bicubic LR
/// synthesised on the fly) and evaluates it.
pub fn evaluate_dataset<U: Upscaler + ?Sized>(
    model: &U,
    hr_dir: &Path,
    lr_dir: Option<&Path>,
    scale: usize,
    mode: EnsembleMode,
    shave: Option<usize>,
) -> Result<EvalReport> {
    if model.scale() != scale {
        return Err(Error::ScaleMismatch {
            checkpoint: model.scale(),
            requested: scale,
        });
    }
    let data = Dataset::load_dir(hr_dir, lr_dir, scale)?;
    let name = hr_dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("dataset")
        .to_string();
    evaluate_pairs(model, &data, &name, mode, shave)
}
