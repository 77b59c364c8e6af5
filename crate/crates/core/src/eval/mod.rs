//! Y-channel PSNR/SSIM, inference-time ensembles and dataset reports.

mod ensemble;
mod metrics;
mod report;

pub use ensemble::{
    data_range_ensemble, geo_range_ensemble, geometric_self_ensemble, predict, super_resolve,
    BicubicUpscaler, CountingUpscaler, EnsembleMode, Upscaler,
};
pub use metrics::{mse_y, psnr_from_mse, psnr_y, ssim_luma, ssim_y, PSNR_CAP_DB};
pub use report::{evaluate_dataset, evaluate_pairs, EvalReport, EvalRow};
