//! Riemannian Laplace approximations: geodesic samplers under Monge and
//! Fisher metrics, MAP search, reference samplers and evaluation.

pub mod config;
pub mod error;
pub mod evaluate;
pub mod experiments;
pub mod geodesic;
pub mod geometry;
pub mod io;
pub mod laplace;
pub mod linalg;
pub mod optimize;
pub mod reference;
pub mod rng;
pub mod targets;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use targets::Target;
