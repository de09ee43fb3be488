//! Library surface of the `simrec` harness: configuration resolution,
//! trial execution, experiment orchestration, and bundle output. The binary
//! is a thin argument-parsing layer over these modules, and the acceptance
//! suite drives them directly.

pub mod config;
pub mod experiment;
pub mod output;
pub mod trial;
