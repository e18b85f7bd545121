pub mod bench;
pub mod binsearch;
pub mod deception;
pub mod error;
pub mod exact;
pub mod format;
pub mod game;
pub mod lp;
pub mod matrix;
pub mod victim;

pub use error::{Error, Result};
pub use matrix::Matrix;
