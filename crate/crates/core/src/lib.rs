pub mod annotation;
pub mod audio;
mod error;
pub mod evaluation;
pub mod formats;
pub mod model;
pub mod training;

pub use error::{Error, Result};
