pub mod error;
pub mod numerics;
pub mod parallel;

pub mod analysis;
pub mod cli;
pub mod entanglement;
pub mod floquet;
pub mod models;
pub mod pipeline;
pub mod topology;

pub use error::{Error, Result};
