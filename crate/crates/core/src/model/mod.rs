//! The FC²N network: concat blocks, concat groups, weighted global feature
//! fusion, and a sub-pixel reconstruction head.

mod accounting;
mod config;
mod network;

pub use accounting::{compute_multiadds, count_params};
pub use config::{ModelConfig, SkipMode, SUPPORTED_SCALES};
pub use network::{
    build_model, wcc, ConcatBlock, ConcatGroup, ConvLayer, GlobalFusion, LambdaPair, Layout,
    Model,
};
