pub mod analysis;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod laplace;
pub mod mlf;
pub mod models;
pub mod quad;
pub mod special;
pub mod timedomain;

pub use error::{Error, Result};
