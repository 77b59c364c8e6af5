//! Trains a tiny network (n=2, m=2 by default) on procedural images and
//! compares it with bicubic interpolation on a held-out image.
//!
//! cargo run --release --example train_tiny -- [steps] [batch] [patch] [lr] [seed] [n] [m] [halve_every]

use std::sync::Arc;
use std::time::Instant;

use fc2n::data::synthetic::synthetic_image;
use fc2n::data::Dataset;
use fc2n::eval::{evaluate_pairs, BicubicUpscaler, EnsembleMode};
use fc2n::model::{build_model, ModelConfig};
use fc2n::train::{train_loop_with, Checkpoint, TrainConfig, TrainData};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> fc2n::Result<()> {
    let steps: u64 = arg(1, 2000);
    let batch: usize = arg(2, 8);
    let patch: usize = arg(3, 32);
    let lr: f64 = arg(4, 3e-3);
    let seed: u64 = arg(5, 1);
    let (n, m): (usize, usize) = (arg(6, 2), arg(7, 2));
    let halve: u64 = arg(8, 700);

    let train = (0..16)
        .map(|i| (format!("train{i:02}"), synthetic_image(96, 96, i)))
        .collect();
    let train = Arc::new(Dataset::from_hr_images(train, 2)?);
    let held_out = Dataset::from_hr_images(vec![("held_out".into(), synthetic_image(96, 96, 1000))], 2)?;

    let model = ModelConfig {
        n,
        m,
        base_width: 8,
        expand_width: 32,
        ..ModelConfig::lightweight(2)
    };
    let cfg = TrainConfig {
        batch_size: batch,
        patch_size: patch,
        total_steps: steps,
        lr_init: lr,
        lr_halve_every: halve,
        scale: 2,
        seed,
        checkpoint_every: steps.max(1),
        validate_every: (steps / 10).max(1),
        workers: 1,
    };
    let bicubic = evaluate_pairs(&BicubicUpscaler { scale: 2 }, &held_out, "held_out", EnsembleMode::None, None)?;
    println!("bicubic: {:.3} dB", bicubic.mean_psnr);

    let started = Instant::now();
    let outcome = train_loop_with(
        Checkpoint::new(build_model(model, seed)?, cfg),
        TrainData {
            train,
            validation: Some(&held_out),
            out_dir: None,
        },
        |r| {
            println!(
                "step {:>5}  loss {:.5}  held-out {:.3} dB  ({:.0}s)",
                r.step,
                r.loss,
                r.val_psnr.unwrap_or(f64::NAN),
                started.elapsed().as_secs_f64()
            )
        },
    )?;
    let trained = evaluate_pairs(&outcome.checkpoint.model, &held_out, "held_out", EnsembleMode::None, None)?;
    println!(
        "network: {:.3} dB, {:+.3} dB over bicubic after {} steps",
        trained.mean_psnr,
        trained.mean_psnr - bicubic.mean_psnr,
        steps
    );
    Ok(())
}
