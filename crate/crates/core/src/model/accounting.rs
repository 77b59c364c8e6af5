//! Closed-form model size and compute, independent of building the model.

use super::config::{ModelConfig, SkipMode};

const fn conv_params(k: usize, c_in: usize, c_out: usize) -> usize {
    k * k * c_in * c_out + c_out
}

/// Multiplications per output pixel of a conv; bias adds are not counted.
const fn conv_macs(k: usize, c_in: usize, c_out: usize) -> u128 {
    (k * k * c_in * c_out) as u128
}

/// Learnable scalars: conv kernels, biases, and weighting factors.
pub fn count_params(config: &ModelConfig) -> usize {
    let b = config.base_width;
    let e = config.expand_width;
    let n = config.n;
    let wcc = config.skip_mode == SkipMode::Wcc;

    let mut block = conv_params(3, b, e) + conv_params(3, e, b);
    if wcc {
        block += conv_params(1, 2 * b, b) + if config.weighted_cb { 2 } else { 0 };
    }
    let mut group = config.m * block;
    if wcc {
        group += conv_params(1, 2 * b, b) + if config.weighted_cg { 2 } else { 0 };
    }
    let mut fusion = conv_params(1, (n + 1) * b, b) + conv_params(3, b, b);
    if wcc && config.weighted_wgff {
        fusion += n + 1;
    }
    let upscale: usize = config
        .upscale_stages()
        .iter()
        .map(|&r| conv_params(3, b, b * r * r))
        .sum();

    conv_params(3, 3, b) + n * group + fusion + upscale + conv_params(3, b, 3)
}

/// Multiply-accumulate count to produce one `out_h x out_w` output.
///
/// The body runs at `1/scale` of the output resolution; each x2 stage of a
/// cascaded upscale head doubles it. Counts are exact rationals rounded down
/// once at the end.
pub fn compute_multiadds(config: &ModelConfig, out_h: usize, out_w: usize) -> u128 {
    let b = config.base_width;
    let e = config.expand_width;
    let n = config.n as u128;
    let m = config.m as u128;
    let wcc = config.skip_mode == SkipMode::Wcc;

    let mut block = conv_macs(3, b, e) + conv_macs(3, e, b);
    if wcc {
        block += conv_macs(1, 2 * b, b);
    }
    let mut group = m * block;
    if wcc {
        group += conv_macs(1, 2 * b, b);
    }
    let body = conv_macs(3, 3, b)
        + n * group
        + conv_macs(1, (config.n + 1) * b, b)
        + conv_macs(3, b, b);

    // Work is tracked at numerator resolution `res^2` over `scale^2`.
    let area = (out_h * out_w) as u128;
    let s = config.scale as u128;
    let mut res: u128 = 1;
    let mut numerator = body * res * res;
    for r in config.upscale_stages() {
        numerator += conv_macs(3, b, b * r * r) * res * res;
        res *= r as u128;
    }
    debug_assert_eq!(res, s);
    numerator += conv_macs(3, b, 3) * res * res;
    numerator * area / (s * s)
}
