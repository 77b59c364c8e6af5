//! Self-ensembles on an untrained network: the geometric average costs 8
//! forward passes, adding the complementary range doubles that.

use fc2n::data::synthetic::synthetic_image;
use fc2n::eval::{predict, BicubicUpscaler, CountingUpscaler, EnsembleMode, Upscaler};
use fc2n::model::{build_model, ModelConfig};

fn main() -> fc2n::Result<()> {
    let config = ModelConfig {
        n: 2,
        m: 2,
        base_width: 8,
        expand_width: 32,
        ..ModelConfig::lightweight(2)
    };
    let network = CountingUpscaler::new(build_model::<f32>(config, 0)?);
    let lr = synthetic_image(24, 20, 3);
    let plain = network.upscale(&lr)?;
    for mode in [EnsembleMode::Geo, EnsembleMode::GeoRange] {
        let before = network.calls();
        let out = predict(&network, &lr, mode)?;
        let moved = out.data().iter().zip(plain.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{:<9} {} passes, max change vs single pass {moved:.3}", mode.to_string(), network.calls() - before);
    }

    // bicubic interpolation commutes with every flip and with complement, so
    // ensembling it changes nothing
    let bicubic = BicubicUpscaler { scale: 2 };
    let lr = lr.quantize();
    let same = predict(&bicubic, &lr, EnsembleMode::GeoRange)? == bicubic.upscale(&lr)?;
    println!("bicubic geo+range equals a single pass: {same}");
    Ok(())
}
