pub mod algorithms;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod projectors;
pub mod regularization;
pub mod scheduler;

pub use error::{Error, Result};
