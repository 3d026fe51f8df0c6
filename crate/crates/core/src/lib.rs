//! Curvature-operator laboratory: so(n) algebra, the curvature ODE
//! `R' = R² + R#`, positivity certification over Ad-invariant sets,
//! constructive orbit degenerations, and the radial conformal gluing.

pub mod cli;
pub mod cones;
pub mod curvature;
pub mod degeneration;
pub mod error;
pub mod flow;
pub mod gluing;
pub mod io;
pub mod jordan;
pub mod lie;
pub mod rng;

pub use error::{Error, Result};
