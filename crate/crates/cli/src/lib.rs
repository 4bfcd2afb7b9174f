//! Library side of the `riemlap` command-line tool.

pub mod commands;
pub mod plot;
