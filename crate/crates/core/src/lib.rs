pub mod bounds;
pub mod check;
pub mod cli;
pub mod conic;
pub mod dpt;
pub mod error;
pub mod gram;
pub mod matlin;
pub mod outcond;
pub mod verify;
pub mod witness;

pub use error::{Error, Result};
