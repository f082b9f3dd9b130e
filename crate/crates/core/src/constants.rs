//! Physical constants (2019 SI exact values) used for unit conversion.

/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.0 * std::f64::consts::PI * HBAR / (2.0 * E_CHARGE);
