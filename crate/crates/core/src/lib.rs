pub mod annealing;
pub mod engine;
pub mod error;
pub mod gp;
pub mod predict;
pub mod rng;
pub mod slice;
pub mod target;

pub use error::Error;
