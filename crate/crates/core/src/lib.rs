//! Gray-zone width of Josephson-junction balanced comparators.
//!
//! The crate solves the damped time-dependent harmonic oscillator that a
//! comparator reduces to near its potential-curvature sign inversion,
//! assembles the Gaussian propagator coefficients from the extremal-path
//! basis functions, and converts them into the measurable gray-zone width
//! and switching-probability curve for arbitrary drive waveform,
//! temperature and damping.
//!
//! Module map:
//! * [`model`] - units, drive waveforms, ingestion, regime checks;
//! * [`bvp`] - two-point boundary-value solves for the basis functions;
//! * [`coeffs`] - propagator coefficients by trapezoid/adaptive quadrature
//!   and by seeded stratified Monte Carlo;
//! * [`grayzone`] - physics outputs (width, probability, plateau metric);
//! * [`pipeline`] - end-to-end composition used by the CLI.

pub mod bvp;
pub mod coeffs;
pub mod constants;
pub mod error;
pub mod grayzone;
pub mod model;
pub mod pipeline;

pub use error::{Error, Result};
