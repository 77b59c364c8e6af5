//! Bicubic baseline on a folder of HR images (Set5, say), or on procedural
//! images when no folder is given.
//!
//! cargo run --release --example bicubic_baseline -- [hr_dir] [scale]

use std::path::Path;

use fc2n::data::synthetic::synthetic_image;
use fc2n::data::Dataset;
use fc2n::eval::{evaluate_pairs, BicubicUpscaler, EnsembleMode};

fn main() -> fc2n::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scale = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let (data, name) = match args.first() {
        Some(dir) => (Dataset::load_dir(Path::new(dir), None, scale)?, dir.clone()),
        None => {
            let images = (0..5).map(|i| (format!("shapes{i}"), synthetic_image(128, 128, 500 + i))).collect();
            (Dataset::from_hr_images(images, scale)?, "procedural".to_string())
        }
    };
    let report = evaluate_pairs(&BicubicUpscaler { scale }, &data, &name, EnsembleMode::None, None)?;
    print!("{}", report.to_table());
    Ok(())
}
