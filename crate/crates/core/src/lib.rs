pub mod data;
pub mod dtree;
pub mod error;
pub mod extraction;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod regularizers;

pub use error::{Error, Result};
