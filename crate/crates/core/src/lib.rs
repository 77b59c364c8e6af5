pub mod autograd;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod model;
pub mod ops;
pub mod optim;
pub mod param;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
