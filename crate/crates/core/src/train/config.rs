use crate::error::{Error, Result};

/// Optimisation settings; the model shape lives in
/// [`ModelConfig`](crate::model::ModelConfig).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// LR patch side; HR patches are `scale` times larger.
    pub patch_size: usize,
    pub total_steps: u64,
    pub lr_init: f64,
    pub lr_halve_every: u64,
    pub scale: usize,
    pub seed: u64,
    pub checkpoint_every: u64,
    pub validate_every: u64,
    /// Background batch producers. Batches depend only on the seed and the
    /// step, so this never changes results.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            patch_size: 48,
            total_steps: 1_000_000,
            lr_init: 2e-4,
            lr_halve_every: 400_000,
            scale: 2,
            seed: 0,
            checkpoint_every: 10_000,
            validate_every: 1_000,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size as u64),
            ("patch_size", self.patch_size as u64),
            ("lr_halve_every", self.lr_halve_every),
            ("scale", self.scale as u64),
            ("checkpoint_every", self.checkpoint_every),
            ("validate_every", self.validate_every),
            ("workers", self.workers as u64),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{key} must be >= 1")));
            }
        }
        if !(self.lr_init > 0.0 && self.lr_init.is_finite()) {
            return Err(Error::Config(format!(
                "lr_init must be positive, got {}",
                self.lr_init
            )));
        }
        Ok(())
    }
}

/// Step decay: the rate halves every `lr_halve_every` steps.
pub fn lr_schedule(step: u64, cfg: &TrainConfig) -> f64 {
    let halvings = (step / cfg.lr_halve_every).min(i32::MAX as u64) as i32;
    cfg.lr_init * 0.5f64.powi(halvings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_breakpoints() {
        let cfg = TrainConfig::default();
        assert_eq!(lr_schedule(0, &cfg), 2e-4);
        assert_eq!(lr_schedule(400_000, &cfg), 1e-4);
        assert_eq!(lr_schedule(799_999, &cfg), 1e-4);
        assert_eq!(lr_schedule(800_000, &cfg), 5e-5);
    }

    #[test]
    fn zero_fields_are_rejected() {
        assert!(TrainConfig::default().validate().is_ok());
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            lr_init: f64::NAN,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
