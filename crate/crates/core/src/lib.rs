pub mod cli;
pub mod error;
pub mod evaluation;
pub mod geo;
pub mod imputation;
pub mod models;
pub mod sampler;
pub mod simulate;
pub mod special;
pub mod table;

pub use error::{Error, Result};
