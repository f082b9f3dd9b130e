//! Propagator coefficients: the bilinear parameters K1, K2, N, L, Q1, Q2 by
//! trapezoidal quadrature over the basis functions, and the noise
//! parameters A, B, C from the bath spectral integral.
//!
//! Everything is linear in q. In scaled time the bilinear integrand for a
//! pair (x, y) of basis functions is
//!
//! ```text
//!     x' y' - mu(t) x y + (x y' - x' y) / (2 sqrt(beta_c))
//! ```
//!
//! with additive constants +q/(2 sqrt(beta_c)) on K1 and -q/(2 sqrt(beta_c))
//! on K2, and an extra +b1 (+b2) inside the Q1 (Q2) integrand. The noise
//! parameters reduce, via cos(nu(tau-s)) = cos cos + sin sin, to squares and
//! products of the cosine/sine transforms of b1 and b2, integrated over
//! frequency against the coth kernel.

use serde::{Deserialize, Serialize};

use crate::bvp::BvpSolution;
use crate::error::{Error, Result};
use crate::model::{DimensionlessParams, Waveform};

pub mod kernel;
mod quad1d;
mod vegas;

pub use kernel::{classical_kernel, coth_kernel, time_domain_kernel, NoiseKernel};
pub use vegas::{compute_noise_vegas, McConfig};

/// How a coefficient set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffMethod {
    Quadrature,
    MonteCarlo,
}

/// The Gaussian propagator parameters for one drive and parameter set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PropagatorCoeffs {
    pub k1: f64,
    pub k2: f64,
    pub n: f64,
    pub l: f64,
    pub q1: f64,
    pub q2: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// One-sigma statistical errors; zero for quadrature results.
    pub mc_error_a: f64,
    pub mc_error_b: f64,
    pub mc_error_c: f64,
    pub method_tag: CoeffMethod,
}

impl PropagatorCoeffs {
    /// Checks finiteness, positivity of A and C, and the Cauchy-Schwarz
    /// bound |B| <= 2 sqrt(A C) that the separable representation implies.
    /// Monte Carlo results are allowed statistical slack.
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.k1, self.k2, self.n, self.l, self.q1, self.q2, self.a, self.b, self.c,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite propagator coefficient"));
        }
        let slack = match self.method_tag {
            CoeffMethod::Quadrature => 1e-9 * (self.a * self.c).abs().sqrt().max(1e-300),
            CoeffMethod::MonteCarlo => {
                3.0 * (self.mc_error_a + self.mc_error_b + self.mc_error_c)
            }
        };
        if self.a < -slack || self.c < -slack {
            return Err(Error::numerical(format!(
                "noise coefficients must be non-negative: A = {:.6e}, C = {:.6e}",
                self.a, self.c
            )));
        }
        let bound = 2.0 * (self.a.max(0.0) * self.c.max(0.0)).sqrt();
        if self.b.abs() > bound + slack {
            return Err(Error::numerical(format!(
                "Cauchy-Schwarz violation: |B| = {:.6e} > 2 sqrt(AC) = {:.6e}",
                self.b.abs(),
                bound
            )));
        }
        Ok(())
    }
}

/// Trapezoid weights on the solution grid: h/2 at the ends, h inside.
fn trapezoid_weights(n_nodes: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n_nodes];
    w[0] = 0.5 * h;
    w[n_nodes - 1] = 0.5 * h;
    w
}

/// Trapezoid integral of a bilinear integrand over the grid, with the
/// curvature evaluated one-sided per panel so an aligned instantaneous
/// step keeps second-order accuracy.
fn bilinear_integral(
    x: &[f64],
    xp: &[f64],
    y: &[f64],
    yp: &[f64],
    w: &Waveform,
    times: &[f64],
    h: f64,
    half_gamma: f64,
    add_y: bool,
) -> f64 {
    let g = |i: usize, mu: f64| -> f64 {
        let mut v = xp[i] * yp[i] - mu * x[i] * y[i] + half_gamma * (x[i] * yp[i] - xp[i] * y[i]);
        if add_y {
            v += y[i];
        }
        v
    };
    let mut acc = 0.0;
    for i in 0..times.len() - 1 {
        let left = g(i, w.eval_right(times[i]));
        let right = g(i + 1, w.eval_left(times[i + 1]));
        acc += 0.5 * h * (left + right);
    }
    acc
}

/// The six bilinear coefficients (K1, K2, N, L, Q1, Q2).
pub fn compute_bilinear(
    sol: &BvpSolution,
    w: &Waveform,
    p: &DimensionlessParams,
) -> Result<(f64, f64, f64, f64, f64, f64)> {
    if (sol.grid().t_end() - w.t_end()).abs() > 1e-9 * w.t_end() {
        return Err(Error::contract(
            "solution grid does not cover the waveform interval",
        ));
    }
    let times: Vec<f64> = sol.grid().nodes().collect();
    let h = sol.grid().h();
    let half_gamma = 0.5 * p.damping();
    let q = p.q;
    let constant = q / (2.0 * p.beta_c.sqrt());

    let int = |x: &[f64], xp: &[f64], y: &[f64], yp: &[f64], add_y: bool| {
        bilinear_integral(x, xp, y, yp, w, &times, h, half_gamma, add_y)
    };

    let k1 = q * int(&sol.a1, &sol.a1_prime, &sol.b1, &sol.b1_prime, false) + constant;
    let k2 = q * int(&sol.a2, &sol.a2_prime, &sol.b2, &sol.b2_prime, false) - constant;
    let n = -q * int(&sol.a2, &sol.a2_prime, &sol.b1, &sol.b1_prime, false);
    let l = -q * int(&sol.a1, &sol.a1_prime, &sol.b2, &sol.b2_prime, false);
    let q1 = q * int(&sol.a, &sol.a_prime, &sol.b1, &sol.b1_prime, true);
    let q2 = q * int(&sol.a, &sol.a_prime, &sol.b2, &sol.b2_prime, true);
    Ok((k1, k2, n, l, q1, q2))
}

/// Cosine and sine transforms of the piecewise-linear interpolant through
/// the nodal values (Filon-trapezoid weights). Exact in the frequency for
/// the interpolant, so no (nu h)^2 aliasing error enters at the cutoff.
///
/// For x = nu h the interior weight is kappa = 2(1 - cos x)/x^2 and the
/// endpoint weights are w = (1 - cos x)/x^2 +- i (x - sin x)/x^2, reducing
/// to the plain trapezoid as x -> 0.
fn transforms(values: &[f64], h: f64, nu: f64) -> (f64, f64) {
    let n = values.len() - 1;
    let x = nu * h;
    let (kappa, w_re, w_im) = if x.abs() < 1e-4 {
        let x2 = x * x;
        (1.0 - x2 / 12.0, 0.5 - x2 / 24.0, x / 6.0 - x * x2 / 120.0)
    } else {
        let one_minus_cos = 1.0 - x.cos();
        (
            2.0 * one_minus_cos / (x * x),
            one_minus_cos / (x * x),
            (x - x.sin()) / (x * x),
        )
    };
    let mut sum_c = 0.0;
    let mut sum_s = 0.0;
    for (j, &v) in values.iter().enumerate().take(n).skip(1) {
        if v != 0.0 {
            let (s, c) = (nu * j as f64 * h).sin_cos();
            sum_c += v * c;
            sum_s += v * s;
        }
    }
    // Left endpoint carries w = w_re + i w_im, right endpoint its conjugate
    // times the end-node phase.
    let (s_end, c_end) = (nu * n as f64 * h).sin_cos();
    let (b0, bn) = (values[0], values[n]);
    let fc = h * (kappa * sum_c + b0 * w_re + bn * (w_re * c_end + w_im * s_end));
    let fs = h * (kappa * sum_s + b0 * w_im + bn * (w_re * s_end - w_im * c_end));
    (fc, fs)
}

const NOISE_RTOL: f64 = 1e-6;
const NOISE_MAX_EVALS: usize = 400_000;
/// Above this theta the closed-form time-domain kernel would drop a
/// non-negligible thermal tail beyond the cutoff, so B falls back to the
/// frequency-domain route.
const THETA_FAST_KERNEL_MAX_FRACTION: f64 = 1.0 / 40.0;

/// Noise coefficients (A, B, C) by the deterministic separable method.
pub fn compute_noise_quadrature(
    sol: &BvpSolution,
    p: &DimensionlessParams,
) -> Result<(f64, f64, f64)> {
    compute_noise_quadrature_kernel(sol, p, NoiseKernel::QuantumCoth)
}

/// Same as `compute_noise_quadrature` with a selectable spectral kernel
/// (the classical substitute is used by the thermal-limit checks).
pub fn compute_noise_quadrature_kernel(
    sol: &BvpSolution,
    p: &DimensionlessParams,
    nk: NoiseKernel,
) -> Result<(f64, f64, f64)> {
    let times: Vec<f64> = sol.grid().nodes().collect();
    let h = sol.grid().h();
    let n_nodes = times.len();
    let weights = trapezoid_weights(n_nodes, h);
    let theta = p.theta;
    let omega = p.omega_cut;
    let prefactor = p.q / (std::f64::consts::PI * p.beta_c.sqrt());

    // C: |F[b1]|^2. The squared modulus is free of the end-time phase, so
    // the frequency profile is a smooth envelope the panels resolve fast.
    let c_raw = quad1d::integrate_adaptive(
        |nu| {
            let (fc, fs) = transforms(&sol.b1, h, nu);
            nk.eval(nu, theta) * (fc * fc + fs * fs)
        },
        0.0,
        omega,
        NOISE_RTOL,
        NOISE_MAX_EVALS,
    )?
    .value;

    // A: |F[b2]|^2, equally smooth (b2 is a single layer at the end time).
    let a_raw = quad1d::integrate_adaptive(
        |nu| {
            let (fc, fs) = transforms(&sol.b2, h, nu);
            nk.eval(nu, theta) * (fc * fc + fs * fs)
        },
        0.0,
        omega,
        NOISE_RTOL,
        NOISE_MAX_EVALS,
    )?
    .value;

    // B: symmetrized cross term 2 (Fc1 Fc2 + Fs1 Fs2). The product of
    // transforms centered at widely separated times oscillates densely in
    // frequency, so when the closed-form frequency integral of the kernel
    // is valid the cross term is summed in the time domain instead
    // (identical up to the 1e-6 frequency tolerance).
    let b_raw = match nk {
        NoiseKernel::QuantumCoth if theta <= omega * THETA_FAST_KERNEL_MAX_FRACTION => {
            cross_term_time_domain(&sol.b1, &sol.b2, &weights, &times, omega, theta)
        }
        NoiseKernel::ClassicalWhite => {
            // 2 theta * Dirichlet kernel: same time-domain route with the
            // zero-point part removed.
            cross_term_time_domain_classical(&sol.b1, &sol.b2, &weights, &times, omega, theta)
        }
        _ => {
            2.0 * quad1d::integrate_adaptive(
                |nu| {
                    let (fc1, fs1) = transforms(&sol.b1, h, nu);
                    let (fc2, fs2) = transforms(&sol.b2, h, nu);
                    nk.eval(nu, theta) * (fc1 * fc2 + fs1 * fs2)
                },
                0.0,
                omega,
                NOISE_RTOL,
                NOISE_MAX_EVALS,
            )?
            .value
        }
    };

    Ok((prefactor * a_raw, prefactor * b_raw, prefactor * c_raw))
}

/// Support of `values` above a relative floor, as an index range.
fn significant_range(values: &[f64], rel_floor: f64) -> (usize, usize) {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return (0, 0);
    }
    let floor = rel_floor * max;
    let lo = values.iter().position(|v| v.abs() > floor).unwrap_or(0);
    let hi = values.len() - values.iter().rev().position(|v| v.abs() > floor).unwrap_or(0);
    (lo, hi)
}

fn cross_term_time_domain(
    b1: &[f64],
    b2: &[f64],
    weights: &[f64],
    times: &[f64],
    omega: f64,
    theta: f64,
) -> f64 {
    let (lo1, hi1) = significant_range(b1, 1e-30);
    let (lo2, hi2) = significant_range(b2, 1e-30);
    let mut acc = 0.0;
    for i in lo1..hi1 {
        let wi = weights[i] * b1[i];
        if wi == 0.0 {
            continue;
        }
        let ti = times[i];
        let mut row = 0.0;
        for j in lo2..hi2 {
            let wj = weights[j] * b2[j];
            if wj != 0.0 {
                row += wj * time_domain_kernel(ti - times[j], omega, theta);
            }
        }
        acc += wi * row;
    }
    2.0 * acc
}

fn cross_term_time_domain_classical(
    b1: &[f64],
    b2: &[f64],
    weights: &[f64],
    times: &[f64],
    omega: f64,
    theta: f64,
) -> f64 {
    // int_0^Omega 2 theta cos(nu d) dnu = 2 theta sin(Omega d)/d
    let dirichlet = |d: f64| {
        if d.abs() < 1e-8 {
            omega * (1.0 - (omega * d).powi(2) / 6.0)
        } else {
            (omega * d).sin() / d
        }
    };
    let (lo1, hi1) = significant_range(b1, 1e-30);
    let (lo2, hi2) = significant_range(b2, 1e-30);
    let mut acc = 0.0;
    for i in lo1..hi1 {
        let wi = weights[i] * b1[i];
        if wi == 0.0 {
            continue;
        }
        let ti = times[i];
        let mut row = 0.0;
        for j in lo2..hi2 {
            let wj = weights[j] * b2[j];
            if wj != 0.0 {
                row += wj * dirichlet(ti - times[j]);
            }
        }
        acc += wi * row;
    }
    2.0 * 2.0 * theta * acc
}

/// Assembles a full quadrature-method coefficient set.
pub fn compute_coeffs_quadrature(
    sol: &BvpSolution,
    w: &Waveform,
    p: &DimensionlessParams,
) -> Result<PropagatorCoeffs> {
    let (k1, k2, n, l, q1, q2) = compute_bilinear(sol, w, p)?;
    let (a, b, c) = compute_noise_quadrature(sol, p)?;
    let coeffs = PropagatorCoeffs {
        k1,
        k2,
        n,
        l,
        q1,
        q2,
        a,
        b,
        c,
        mc_error_a: 0.0,
        mc_error_b: 0.0,
        mc_error_c: 0.0,
        method_tag: CoeffMethod::Quadrature,
    };
    coeffs.validate()?;
    Ok(coeffs)
}

/// Assembles a full Monte Carlo-method coefficient set (bilinear terms stay
/// on the trapezoid rule; only the noise triple integral is sampled).
pub fn compute_coeffs_monte_carlo(
    sol: &BvpSolution,
    w: &Waveform,
    p: &DimensionlessParams,
    cfg: &McConfig,
) -> Result<PropagatorCoeffs> {
    let (k1, k2, n, l, q1, q2) = compute_bilinear(sol, w, p)?;
    let mc = compute_noise_vegas(sol, w, p, cfg)?;
    let coeffs = PropagatorCoeffs {
        k1,
        k2,
        n,
        l,
        q1,
        q2,
        a: mc.a,
        b: mc.b,
        c: mc.c,
        mc_error_a: mc.err_a,
        mc_error_b: mc.err_b,
        mc_error_c: mc.err_c,
        method_tag: CoeffMethod::MonteCarlo,
    };
    coeffs.validate()?;
    Ok(coeffs)
}
