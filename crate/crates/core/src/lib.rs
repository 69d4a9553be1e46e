//! Cahn-Hilliard-Navier-Stokes simulator on a periodic channel with dynamic
//! boundary conditions, plus energy, absorption, continuous-dependence and
//! trajectory-attractor diagnostics.

pub mod banded;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod io;
pub mod operators;
pub mod physics;
pub mod solver;
pub mod spectral;
pub mod state;
pub mod studies;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{BulkSurface, VectorField, WallField};
pub use grid::{ChannelDomain, Grid, WallSelection};
