//! Experiment harness around the sampling library: strict JSON experiment
//! configs, paper-style circuit templates, batch runners that emit CSV plus
//! a JSON summary, and the small statistics the summaries need.

pub mod config;
pub mod experiments;
pub mod stats;
pub mod template;
