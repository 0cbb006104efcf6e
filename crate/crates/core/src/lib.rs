//! Loop measures and Poisson loop soups for finite-state sub-Markovian chains.

pub mod chain;
pub mod clusters;
pub mod lerw;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod loops;
pub mod measure;
pub mod rng;
pub mod soup;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex;
