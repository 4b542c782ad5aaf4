pub mod error;
pub mod linalg;
pub mod magnetic_algebra;
pub mod spectrum;
pub mod chern;
pub mod diophantine;
pub mod butterfly;
pub mod verify;

pub use error::{Error, Result};
