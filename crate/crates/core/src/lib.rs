//! Broken-ray travel-time tomography in a square domain containing a square
//! reflecting obstacle.

pub mod error;
pub mod field;
pub mod geometry;
pub mod linsys;
pub mod rays;

pub use error::{Error, Result};
pub mod harness;
pub mod io;
