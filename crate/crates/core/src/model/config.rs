use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How block and group inputs are merged with their nonlinear branch.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum SkipMode {
    /// Weighted channel concatenation followed by a 1x1 conv.
    #[default]
    Wcc,
    /// Plain unweighted addition; the WGFF degrades to unweighted GFF.
    Residual,
}

impl fmt::Display for SkipMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipMode::Wcc => "wcc",
            SkipMode::Residual => "residual",
        })
    }
}

impl FromStr for SkipMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wcc" => Ok(SkipMode::Wcc),
            "residual" | "res" => Ok(SkipMode::Residual),
            other => Err(Error::Config(format!(
                "skip_mode must be `wcc` or `residual`, got `{other}`"
            ))),
        }
    }
}

pub const SUPPORTED_SCALES: [usize; 4] = [2, 3, 4, 8];

/// Full architectural description; [`build_model`](super::build_model) is a
/// pure function of this plus a seed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ModelConfig {
    /// Number of concat groups.
    pub n: usize,
    /// Concat blocks per group.
    pub m: usize,
    pub base_width: usize,
    /// Width before the ReLU inside each block.
    pub expand_width: usize,
    pub scale: usize,
    pub weighted_wgff: bool,
    pub weighted_cg: bool,
    pub weighted_cb: bool,
    pub skip_mode: SkipMode,
}

impl ModelConfig {
    /// n = m = 4 with widths {32, 128, 32}.
    pub fn lightweight(scale: usize) -> Self {
        ModelConfig {
            n: 4,
            m: 4,
            base_width: 32,
            expand_width: 128,
            scale,
            weighted_wgff: true,
            weighted_cg: true,
            weighted_cb: true,
            skip_mode: SkipMode::Wcc,
        }
    }

    /// n = 16, m = 8 with widths {32, 128, 32}.
    pub fn largescale(scale: usize) -> Self {
        ModelConfig {
            n: 16,
            m: 8,
            ..ModelConfig::lightweight(scale)
        }
    }

    /// Same shape with every skip turned into an unweighted residual add.
    pub fn residual_baseline(self) -> Self {
        ModelConfig {
            weighted_wgff: false,
            weighted_cg: false,
            weighted_cb: false,
            skip_mode: SkipMode::Residual,
            ..self
        }
    }

    pub fn with_weights(self, wgff: bool, cg: bool, cb: bool) -> Self {
        ModelConfig {
            weighted_wgff: wgff,
            weighted_cg: cg,
            weighted_cb: cb,
            ..self
        }
    }

    /// Wide-activation ratio `expand_width / base_width`.
    pub fn r_wa(&self) -> usize {
        self.expand_width / self.base_width
    }

    /// Ablation suffix in WGFF/CG/CB order, e.g. `111`, or `res`.
    pub fn variant_name(&self) -> String {
        match self.skip_mode {
            SkipMode::Residual => "res".to_string(),
            SkipMode::Wcc => format!(
                "{}{}{}",
                self.weighted_wgff as u8, self.weighted_cg as u8, self.weighted_cb as u8
            ),
        }
    }

    /// Pixel-shuffle factors of the upscale head.
    pub fn upscale_stages(&self) -> Vec<usize> {
        match self.scale {
            2 => vec![2],
            3 => vec![3],
            4 => vec![2, 2],
            8 => vec![2, 2, 2],
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config(format!(
                "n and m must be >= 1 (got n={}, m={})",
                self.n, self.m
            )));
        }
        if self.base_width == 0 || self.expand_width == 0 {
            return Err(Error::Config("feature widths must be >= 1".into()));
        }
        if self.expand_width % self.base_width != 0 {
            return Err(Error::Config(format!(
                "expand_width {} is not an integer multiple of base_width {}",
                self.expand_width, self.base_width
            )));
        }
        if !SUPPORTED_SCALES.contains(&self.scale) {
            return Err(Error::Config(format!(
                "unsupported scale x{} (expected one of 2, 3, 4, 8)",
                self.scale
            )));
        }
        if self.skip_mode == SkipMode::Residual
            && (self.weighted_wgff || self.weighted_cg || self.weighted_cb)
        {
            return Err(Error::Config(
                "skip_mode = residual is the unweighted baseline; set weighted_wgff, \
                 weighted_cg and weighted_cb to false"
                    .into(),
            ));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::lightweight(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let l = ModelConfig::lightweight(4);
        assert_eq!((l.n, l.m, l.base_width, l.expand_width), (4, 4, 32, 128));
        assert_eq!(l.r_wa(), 4);
        let big = ModelConfig::largescale(2);
        assert_eq!((big.n, big.m), (16, 8));
        assert_eq!(big.variant_name(), "111");
        assert_eq!(big.residual_baseline().variant_name(), "res");
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::lightweight(2).validate().is_ok());
        assert!(ModelConfig::lightweight(5).validate().is_err());
        let mut c = ModelConfig::lightweight(2);
        c.expand_width = 100;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::lightweight(2);
        c.skip_mode = SkipMode::Residual;
        assert!(c.validate().is_err());
        assert!(ModelConfig::lightweight(2).residual_baseline().validate().is_ok());
    }

    #[test]
    fn upscale_stages_cascade_x2() {
        assert_eq!(ModelConfig::lightweight(8).upscale_stages(), vec![2, 2, 2]);
        assert_eq!(ModelConfig::lightweight(3).upscale_stages(), vec![3]);
    }
}
