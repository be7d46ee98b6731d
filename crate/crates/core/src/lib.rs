pub mod ags;
pub mod buildup;
pub mod cli;
pub mod count;
pub mod graphlet;
pub mod oracle;
pub mod pipeline;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod rng;
pub mod sampler;
pub mod treelet;

pub use error::{Error, Result};
