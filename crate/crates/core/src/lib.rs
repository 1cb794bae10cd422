pub mod classifiers;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod neuralnet;
pub mod pipeline;
pub mod selective_search;
pub mod synth;

pub use error::{Error, Result};
