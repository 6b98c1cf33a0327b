//! Reproducible batch runs over the `photosub` library.

pub mod accept;
pub mod config;
pub mod crossover;
pub mod cuts;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod sweep;
