//! Batch driver for radial Gaussianization experiments: spec files, the
//! `radgauss` subcommands, sweeps and SVG figures.

pub mod cli;
pub mod config;
pub mod error;
pub mod run;
pub mod spec;
pub mod svg;

pub use error::{HarnessError, Result};
pub use spec::{ExperimentSpec, SweepSpec};
