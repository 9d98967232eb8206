pub mod codec;
pub mod detect;
pub mod error;
pub mod eval;
pub mod formats;
mod math;
pub mod seed;
pub mod segment;
pub mod sim;
pub mod toy;

pub use error::{Error, Result};
