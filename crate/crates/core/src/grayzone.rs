//! Physics outputs: initial thermal state, gray-zone width, switching
//! probability and the duration-plateau diagnostic.
//!
//! The full gray-zone expression is, in units of the critical current,
//!
//! ```text
//!     dIx/Ic = 2 sqrt(pi) [C + 4 K1^2 <phi^2>_i + (q/sqrt(beta_c))^2 <phidot^2>_i]^(1/2)
//!              / (K1/mu_i + Q1)
//! ```
//!
//! and in the long-drive regime (C >> 1, Q1 >> K1) it reduces to
//! 2 sqrt(pi) sqrt(C)/Q1, independent of the initial state.

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffMethod, PropagatorCoeffs};
use crate::error::{Error, Result};
use crate::model::DimensionlessParams;

/// Gaussian second moments of the pre-measurement equilibrium state, in
/// scaled-time units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InitialState {
    pub phi_var: f64,
    pub phi_dot_var: f64,
}

fn coth(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x > 20.0 {
        1.0
    } else if x < 1e-8 {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// Thermal-equilibrium moments of the undamped oscillator in the initial
/// well: <phi^2> = coth(sqrt(mu_i)/(2 theta)) / (4 q sqrt(mu_i)) and the
/// equipartition partner <phidot^2> = mu_i <phi^2> in scaled time.
pub fn initial_thermal_state(p: &DimensionlessParams) -> InitialState {
    let root_mu = p.mu_initial.sqrt();
    let factor = if p.theta == 0.0 {
        1.0
    } else {
        coth(root_mu / (2.0 * p.theta))
    };
    let phi_var = factor / (4.0 * p.q * root_mu);
    InitialState {
        phi_var,
        phi_dot_var: p.mu_initial * phi_var,
    }
}

/// Which gray-zone expression produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrayZoneVariant {
    FullEq,
    Asymptotic,
}

/// Diagnostics attached to every gray-zone result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub c: f64,
    pub q1: f64,
    pub k1: f64,
    pub mc_error_c: f64,
    /// Set by the pipeline's duration-plateau check; None when not run.
    pub plateau_ok: Option<bool>,
    pub warnings: Vec<String>,
}

/// Gray-zone width in units of the critical current, with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrayZoneResult {
    pub delta_ix_over_ic: f64,
    /// One-sigma error bar from Monte Carlo noise coefficients; zero for
    /// quadrature.
    pub error_over_ic: f64,
    /// Absolute width in amperes when physical parameters are known.
    pub delta_ix_amperes: Option<f64>,
    pub variant: GrayZoneVariant,
    pub diagnostics: Diagnostics,
}

fn diagnostics_from(c: &PropagatorCoeffs) -> Diagnostics {
    Diagnostics {
        c: c.c,
        q1: c.q1,
        k1: c.k1,
        mc_error_c: c.mc_error_c,
        plateau_ok: None,
        warnings: Vec::new(),
    }
}

/// Full gray-zone width including the initial-state terms.
///
/// The width is defined through |d<phi>/dIx|, so the gain K1/mu_i + Q1
/// enters by magnitude: the overall sign of the difference-path basis
/// (and with it K1, N, Q1 together) is an oscillation phase set by the
/// inversion time, not a physical direction.
pub fn gray_zone_full(
    c: &PropagatorCoeffs,
    s: &InitialState,
    p: &DimensionlessParams,
) -> Result<GrayZoneResult> {
    let denominator = (c.k1 / p.mu_initial + c.q1).abs();
    if !(denominator > 0.0) {
        return Err(Error::regime(format!(
            "no deterministic switching gain (K1/mu_i + Q1 = {denominator:.6e}); \
             waveform or duration invalid"
        )));
    }
    let velocity_weight = (p.q / p.beta_c.sqrt()).powi(2);
    let bracket = c.c + 4.0 * c.k1 * c.k1 * s.phi_var + velocity_weight * s.phi_dot_var;
    if !(bracket >= 0.0) {
        return Err(Error::numerical(format!(
            "negative variance bracket {bracket:.6e}"
        )));
    }
    let width = 2.0 * std::f64::consts::PI.sqrt() * bracket.sqrt() / denominator;
    let error = if c.method_tag == CoeffMethod::MonteCarlo && bracket > 0.0 {
        width * 0.5 * c.mc_error_c / bracket
    } else {
        0.0
    };
    Ok(GrayZoneResult {
        delta_ix_over_ic: width,
        error_over_ic: error,
        delta_ix_amperes: None,
        variant: GrayZoneVariant::FullEq,
        diagnostics: diagnostics_from(c),
    })
}

/// Asymptotic gray-zone width 2 sqrt(pi) sqrt(C)/|Q1|.
pub fn gray_zone_asymptotic(c: &PropagatorCoeffs) -> Result<GrayZoneResult> {
    if !(c.q1.abs() > 0.0) {
        return Err(Error::regime(format!(
            "no deterministic switching gain (Q1 = {:.6e})",
            c.q1
        )));
    }
    if !(c.c >= 0.0) {
        return Err(Error::numerical(format!("negative C = {:.6e}", c.c)));
    }
    let width = 2.0 * std::f64::consts::PI.sqrt() * c.c.sqrt() / c.q1.abs();
    let error = if c.method_tag == CoeffMethod::MonteCarlo && c.c > 0.0 {
        width * 0.5 * c.mc_error_c / c.c
    } else {
        0.0
    };
    Ok(GrayZoneResult {
        delta_ix_over_ic: width,
        error_over_ic: error,
        delta_ix_amperes: None,
        variant: GrayZoneVariant::Asymptotic,
        diagnostics: diagnostics_from(c),
    })
}

/// Standard normal CDF.
fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability of switching to the phi_f = phi_i - pi state for a given
/// input current. The final Gaussian statistics make it
/// p(Ix) = Phi(-sqrt(2 pi) (Ix/Ic)/(dIx/Ic)): one half at zero input,
/// decreasing in Ix, with slope -1/dIx at the origin.
pub fn switching_probability(
    c: &PropagatorCoeffs,
    s: &InitialState,
    p: &DimensionlessParams,
    ix_over_ic: f64,
) -> Result<f64> {
    let zone = gray_zone_full(c, s, p)?;
    Ok(normal_cdf(
        -(2.0 * std::f64::consts::PI).sqrt() * ix_over_ic / zone.delta_ix_over_ic,
    ))
}

/// Relative spread diagnostic over a series of increasing drive durations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlateauMetric {
    /// Max relative spread over the last half of the series.
    pub spread: f64,
    pub plateau_ok: bool,
}

pub const PLATEAU_SPREAD_LIMIT: f64 = 5e-3;

/// Measures how settled the gray-zone width is against drive duration:
/// the relative spread of the last half of the series must stay below 0.5%.
pub fn check_plateau(series: &[(f64, f64)]) -> Result<PlateauMetric> {
    if series.len() < 3 {
        return Err(Error::contract(
            "plateau check needs at least 3 increasing durations",
        ));
    }
    for w in series.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::contract("plateau durations must be increasing"));
        }
    }
    let tail = &series[series.len() / 2..];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut mean = 0.0;
    for &(_, v) in tail {
        lo = lo.min(v);
        hi = hi.max(v);
        mean += v;
    }
    mean /= tail.len() as f64;
    let spread = if mean.abs() > 0.0 {
        (hi - lo) / mean.abs()
    } else {
        f64::INFINITY
    };
    Ok(PlateauMetric {
        spread,
        plateau_ok: spread < PLATEAU_SPREAD_LIMIT,
    })
}
