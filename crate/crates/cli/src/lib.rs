//! Library side of the `curvepass` operator tool.

pub mod client;
pub mod commands;
pub mod report;
pub mod simulate;
