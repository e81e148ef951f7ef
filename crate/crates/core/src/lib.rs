//! Numerical verification toolkit for logarithmic Hardy/`L1` estimates,
//! Osgood-type majorants, and inviscid-limit convergence rates of 2D
//! incompressible flow on the periodic torus.

pub mod error;
pub mod fit;
pub mod flow;
pub mod grid;
pub mod inviscid;
pub mod io;
pub mod logineq;
pub mod norms;
pub mod osgood;
pub mod splitting;

pub use error::{Error, Result};
pub use grid::{Axis, GridSpec, ScalarField, VectorField};
