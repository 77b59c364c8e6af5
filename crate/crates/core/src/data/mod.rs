//! Image I/O, bicubic resampling, patch sampling and augmentation.

mod dataset;
mod image;
mod patch;
mod resize;
pub mod synthetic;

pub use dataset::{list_images, paired_lr_path, Dataset, ImagePair, PatchSampler, Prefetcher};
pub use image::{load_image, rgb_to_y, save_image, ImageRGB, ImageY};
pub use patch::{
    augment, extract_patch_pair, hflip, random_augment, rot270, rot90, vflip, Dihedral, PatchPair,
};
pub use resize::{bicubic_resize, bicubic_resize_to, downscale, upscale};
