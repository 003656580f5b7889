//! Benchmarks, dataset plumbing and the experiment harness around the
//! `ta2s2` sampler.

pub mod bench;
pub mod data;
pub mod design;
pub mod error;
pub mod experiment;
pub mod report;

pub use error::Error;
