//! Critical-current temperature scaling for physical-unit output.

use jjcomp::constants::BOLTZMANN;
use jjcomp::{Error, Result};

use crate::config::IcTemperatureModel;

/// BCS gap interpolation Delta(T) = Delta0 tanh(1.74 sqrt(Tc/T - 1)).
fn bcs_gap(delta0: f64, tc: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return delta0;
    }
    delta0 * (1.74 * (tc / t - 1.0).sqrt()).tanh()
}

/// Ambegaokar-Baratoff product Ic Rn = (pi Delta/2e) tanh(Delta/2 k_B T),
/// reduced to the factor Ic(T)/Ic(T_ref).
fn ab_product(delta0: f64, tc: f64, t: f64) -> f64 {
    let gap = bcs_gap(delta0, tc, t);
    if t <= 0.0 {
        return gap;
    }
    gap * (gap / (2.0 * BOLTZMANN * t)).tanh()
}

/// Scaling factor Ic(T)/Ic(T_ref) for the configured model.
pub fn ic_of_temperature(model: &IcTemperatureModel, t: f64) -> Result<f64> {
    match model {
        IcTemperatureModel::Constant => Ok(1.0),
        IcTemperatureModel::AmbegaokarBaratoff {
            tc_kelvin,
            delta0_joules,
            reference_kelvin,
        } => {
            let tc = *tc_kelvin;
            if !(tc > 0.0) {
                return Err(Error::config("tc_kelvin must be positive"));
            }
            if t >= tc {
                return Err(Error::domain(format!(
                    "temperature {t} K is not below Tc = {tc} K"
                )));
            }
            if !(*reference_kelvin > 0.0 && *reference_kelvin < tc) {
                return Err(Error::config("reference_kelvin must lie in (0, Tc)"));
            }
            let delta0 = delta0_joules.unwrap_or(1.764 * BOLTZMANN * tc);
            Ok(ab_product(delta0, tc, t) / ab_product(delta0, tc, *reference_kelvin))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb_model() -> IcTemperatureModel {
        IcTemperatureModel::AmbegaokarBaratoff {
            tc_kelvin: 9.2,
            delta0_joules: None,
            reference_kelvin: 4.2,
        }
    }

    #[test]
    fn constant_model_is_unity() {
        assert_eq!(ic_of_temperature(&IcTemperatureModel::Constant, 77.0).unwrap(), 1.0);
    }

    #[test]
    fn reference_temperature_normalizes_to_one() {
        let s = ic_of_temperature(&nb_model(), 4.2).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn low_temperature_limit_exceeds_reference() {
        // As T -> 0 the scaling approaches the full-gap value, above the
        // 4.2 K reference; oracle is the direct formula evaluation.
        let tc = 9.2;
        let delta0 = 1.764 * BOLTZMANN * tc;
        let direct = |t: f64| {
            let gap = delta0 * (1.74 * (tc / t - 1.0_f64).sqrt()).tanh();
            gap * (gap / (2.0 * BOLTZMANN * t)).tanh()
        };
        let expected = delta0 / direct(4.2);
        let s = ic_of_temperature(&nb_model(), 1e-9).unwrap();
        assert!((s - expected).abs() < 1e-6 * expected, "{s} vs {expected}");
        assert!(s > 1.0);
    }

    #[test]
    fn scaling_is_monotone_decreasing_in_t() {
        let mut prev = f64::INFINITY;
        for t in [0.5, 1.5, 3.0, 4.2, 6.0, 8.0] {
            let s = ic_of_temperature(&nb_model(), t).unwrap();
            assert!(s < prev, "T = {t}: {s}");
            prev = s;
        }
    }

    #[test]
    fn above_tc_is_domain_error() {
        assert!(matches!(
            ic_of_temperature(&nb_model(), 9.2),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ic_of_temperature(&nb_model(), 12.0),
            Err(Error::Domain(_))
        ));
    }
}
