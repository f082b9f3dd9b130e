//! Bath spectral kernels.

/// Quantum noise weight nu * coth(nu / (2 theta)) in plasma units.
///
/// Total on nu >= 0, theta >= 0: the theta = 0 limit is nu (zero-point
/// noise), the nu -> 0 limit is 2 theta (white thermal noise). Below the
/// series-switch threshold nu/theta < 1e-4 the value is evaluated
/// analytically to avoid the 0 * inf in the direct product.
pub fn coth_kernel(nu: f64, theta: f64) -> f64 {
    debug_assert!(nu >= 0.0 && theta >= 0.0);
    if theta == 0.0 {
        return nu;
    }
    if nu < 1e-4 * theta {
        return 2.0 * theta + nu * nu / (6.0 * theta);
    }
    let x = nu / (2.0 * theta);
    if x > 20.0 {
        nu // coth(x) - 1 < 5e-18 here
    } else {
        nu / x.tanh()
    }
}

/// White-noise substitute kernel 2 theta (the classical limit of
/// `coth_kernel` for nu << theta).
pub fn classical_kernel(_nu: f64, theta: f64) -> f64 {
    2.0 * theta
}

/// Which spectral weight the noise integrals use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKernel {
    /// nu coth(nu/2 theta): quantum plus thermal.
    QuantumCoth,
    /// 2 theta: thermal white noise only.
    ClassicalWhite,
}

impl NoiseKernel {
    pub fn eval(self, nu: f64, theta: f64) -> f64 {
        match self {
            NoiseKernel::QuantumCoth => coth_kernel(nu, theta),
            NoiseKernel::ClassicalWhite => classical_kernel(nu, theta),
        }
    }
}

/// Closed form of the frequency integral
/// K(delta) = int_0^Omega coth_kernel(nu, theta) cos(nu delta) dnu.
///
/// The zero-point part integrates exactly; the thermal excess
/// 2 nu / (exp(nu/theta) - 1) is integrated to infinity in closed form,
/// which is valid while its tail beyond Omega is negligible
/// (theta <= Omega/40 or so; the caller enforces this).
pub fn time_domain_kernel(delta: f64, omega_cut: f64, theta: f64) -> f64 {
    let x = omega_cut * delta;
    // int_0^Omega nu cos(nu d) dnu = (cos x + x sin x - 1)/d^2
    let zero_point = if x.abs() < 1e-4 {
        omega_cut * omega_cut * (0.5 - x * x / 8.0)
    } else {
        (x.cos() + x * x.sin() - 1.0) / (delta * delta)
    };
    if theta == 0.0 {
        return zero_point;
    }
    // int_0^inf 2 nu cos(nu d)/(e^(nu/theta) - 1) dnu
    //   = 1/d^2 - (pi theta)^2 / sinh^2(pi theta d)
    let y = std::f64::consts::PI * theta * delta;
    let thermal = if y.abs() < 1e-3 {
        let pt2 = (std::f64::consts::PI * theta).powi(2);
        pt2 / 3.0 - delta * delta * pt2 * pt2 / 15.0
    } else if y.abs() > 350.0 {
        1.0 / (delta * delta)
    } else {
        1.0 / (delta * delta) - (std::f64::consts::PI * theta / y.sinh()).powi(2)
    };
    zero_point + thermal
}
