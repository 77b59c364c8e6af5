//! The eight weighting-flag variants plus the residual baseline: sizes,
//! number of weighting factors, and one training step each.

use fc2n::data::synthetic::synthetic_image;
use fc2n::data::{downscale, PatchPair};
use fc2n::model::{build_model, ModelConfig, SkipMode};
use fc2n::optim::AdamHyper;
use fc2n::train::train_step;

fn main() -> fc2n::Result<()> {
    let base = ModelConfig {
        n: 2,
        m: 2,
        base_width: 8,
        expand_width: 32,
        ..ModelConfig::lightweight(2)
    };
    let hr = synthetic_image(32, 32, 1);
    let batch = [PatchPair {
        lr: downscale(&hr, 2, true)?,
        hr,
        lr_origin: (0, 0),
    }];

    let mut variants: Vec<ModelConfig> = (0..8u8)
        .map(|f| base.with_weights(f & 4 != 0, f & 2 != 0, f & 1 != 0))
        .collect();
    variants.push(base.residual_baseline());
    let reference = build_model::<f32>(variants[0], 0)?.forward(&batch[0].lr.to_tensor())?;

    println!("{:<8} {:>8} {:>8} {:>10}  same output at lambda=1", "variant", "params", "lambdas", "loss");
    for config in variants {
        let mut model = build_model::<f32>(config, 0)?;
        let same = match config.skip_mode {
            SkipMode::Wcc => (model.forward(&batch[0].lr.to_tensor())? == reference).to_string(),
            SkipMode::Residual => "-".to_string(),
        };
        let lambdas = model.lambda_ids().len();
        let loss = train_step(&mut model, &batch, &mut AdamHyper::default(), 0)?;
        println!(
            "{:<8} {:>8} {:>8} {:>10.5}  {same}",
            config.variant_name(),
            model.num_params(),
            lambdas,
            loss
        );
    }
    Ok(())
}
