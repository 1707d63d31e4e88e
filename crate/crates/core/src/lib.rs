pub mod arith;
pub mod bernoulli;
pub mod cache;
pub mod claims;
pub mod discover;
pub mod error;
pub mod mhs;
pub mod sums;
mod ring;

pub use error::{Error, Result};
