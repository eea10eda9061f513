//! Steady-state optical response of a Doppler-broadened three-level Λ vapor
//! with velocity-changing collisions: susceptibility, transmission spectra,
//! transparency width, peak transmission and group delay.
//!
//! The main solver ([`steady`]) works on velocity-integrated density-matrix
//! elements under a thermalized-velocity ansatz. [`oracle`] solves the full
//! velocity-resolved equations on a grid and is used to check it.

pub mod doppler;
pub mod error;
pub mod limits;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod quadrature;
pub mod steady;

mod fit;

pub use error::{Error, Result};
pub use model::{DopplerWidths, FieldConfig, MediumParams, RateSet};
