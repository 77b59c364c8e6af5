//! Interrupt a run, resume it from a checkpoint, and compare with the run
//! that was never interrupted.

use std::sync::Arc;

use fc2n::data::synthetic::synthetic_image;
use fc2n::data::Dataset;
use fc2n::model::{build_model, ModelConfig};
use fc2n::train::{checkpoint_path, train_loop, Checkpoint, TrainConfig, TrainData, FINAL_CHECKPOINT};

fn main() -> fc2n::Result<()> {
    let images = (0..4).map(|i| (format!("img{i}"), synthetic_image(48, 48, i))).collect();
    let train = Arc::new(Dataset::from_hr_images(images, 2)?);
    let model = ModelConfig {
        n: 1,
        m: 2,
        base_width: 8,
        expand_width: 16,
        ..ModelConfig::lightweight(2)
    };
    let cfg = TrainConfig {
        batch_size: 4,
        patch_size: 12,
        total_steps: 30,
        lr_init: 1e-3,
        lr_halve_every: 10,
        scale: 2,
        seed: 9,
        checkpoint_every: 10,
        validate_every: 10,
        workers: 2,
    };
    let dir = std::env::temp_dir().join(format!("fc2n-resume-{}", std::process::id()));
    let data = |out| TrainData {
        train: train.clone(),
        validation: None,
        out_dir: Some(out),
    };

    let straight = dir.join("straight");
    let full = train_loop(Checkpoint::new(build_model(model, 0)?, cfg), data(&straight))?;

    let resumed_dir = dir.join("resumed");
    let from = Checkpoint::load(checkpoint_path(&straight, 10))?;
    let resumed = train_loop(from, data(&resumed_dir))?;

    let a = Checkpoint::load(straight.join(FINAL_CHECKPOINT))?.encode()?;
    let b = Checkpoint::load(resumed_dir.join(FINAL_CHECKPOINT))?.encode()?;
    println!("final loss {:.5} after {} steps", full.steps.last().map_or(f64::NAN, |r| r.loss), full.checkpoint.step);
    println!("resumed from step 10, final checkpoints byte-identical: {}", a == b);
    println!("losses of steps 11..=30 identical: {}", full.steps[10..] == resumed.steps[..]);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
