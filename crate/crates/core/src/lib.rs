//! Simulation and verification kernels for the sigma-finite path measure that
//! concatenates a Brownian bridge of random length with a symmetrized
//! three-dimensional Bessel tail.
//!
//! The crate is `no_std` (with `alloc`); everything here is a pure function of
//! its inputs, so batches can be fanned out across threads by the caller and
//! merged through [`measure::Estimate`].

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod funcspace;
pub mod measure;
pub mod numerics;
pub mod paths;
pub mod wiener;

pub use error::{Error, Result};
pub use funcspace::StepFunction;
pub use measure::{Estimate, TiltedSample};
pub use numerics::{Integrand1D, IntegrandProfile, TiltingConfig};
pub use paths::{SamplePath, SeedSpec, Sign, TimeGrid};
pub use wiener::IntegralValue;
