//! Experiment runner around the core library: file formats, experiment
//! configuration, and the reproducible command pipelines.

pub mod config;
pub mod fixtures;
pub mod formats;
pub mod pipeline;
