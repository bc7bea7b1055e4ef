pub mod averages;
pub mod dilation;
pub mod error;
pub mod format;
pub mod harness;
pub mod linalg;
pub mod sequences;
pub mod symbol;

pub use error::{Error, Result};
