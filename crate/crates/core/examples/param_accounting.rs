//! Parameter counts and multiply-adds for the published presets.

use fc2n::model::{build_model, compute_multiadds, count_params, ModelConfig};

fn main() -> fc2n::Result<()> {
    println!("{:<12} {:>6} {:>12} {:>14}", "preset", "scale", "params", "MultiAdds@720p");
    for (name, preset) in [
        ("lightweight", ModelConfig::lightweight as fn(usize) -> ModelConfig),
        ("largescale", ModelConfig::largescale),
    ] {
        for scale in [2, 3, 4, 8] {
            let config = preset(scale);
            if config.validate().is_err() {
                continue;
            }
            let params = count_params(&config);
            // the registry of a built network agrees with the closed form
            assert_eq!(params, build_model::<f32>(config, 0)?.num_params());
            let macs = compute_multiadds(&config, 720, 1280) as f64;
            println!("{name:<12} {:>6} {params:>12} {:>13.1}G", format!("x{scale}"), macs / 1e9);
        }
    }
    Ok(())
}
