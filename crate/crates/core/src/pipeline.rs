//! End-to-end composition: waveform and parameters in, gray-zone width out,
//! with the automatic duration-plateau diagnostic.

use serde::{Deserialize, Serialize};

use crate::bvp::{solve_all_mode, Grid, SolveMode};
use crate::coeffs::{
    compute_coeffs_monte_carlo, compute_coeffs_quadrature, McConfig, PropagatorCoeffs,
};
use crate::error::{Error, Result};
use crate::grayzone::{
    check_plateau, gray_zone_asymptotic, gray_zone_full, initial_thermal_state, GrayZoneResult,
    PlateauMetric,
};
use crate::model::{DimensionlessParams, Waveform};

/// Noise-coefficient evaluation method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Method {
    Quadrature,
    MonteCarlo(McConfig),
}

/// One fully specified gray-zone evaluation.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub params: DimensionlessParams,
    pub waveform: Waveform,
    pub method: Method,
    pub solve_mode: SolveMode,
    /// Grid override; the default derives the step from beta_c and aligns
    /// an instantaneous inversion on a node.
    pub grid: Option<Grid>,
    /// Re-run at doubled and quadrupled margins to verify the result sits
    /// on the long-drive plateau.
    pub plateau_check: bool,
    /// Enables the ampere-valued output column.
    pub critical_current_amperes: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub full: GrayZoneResult,
    pub asymptotic: GrayZoneResult,
    pub coeffs: PropagatorCoeffs,
    pub plateau: Option<PlateauMetric>,
    pub warnings: Vec<String>,
}

impl RunSpec {
    pub fn new(params: DimensionlessParams, waveform: Waveform) -> Self {
        RunSpec {
            params,
            waveform,
            method: Method::Quadrature,
            solve_mode: SolveMode::Refined,
            grid: None,
            plateau_check: true,
            critical_current_amperes: None,
        }
    }

    /// Parameters with the initial curvature read off the waveform, which
    /// is the single source of truth (inductive renormalization included).
    fn effective_params(&self) -> Result<DimensionlessParams> {
        let w = &self.waveform;
        let bare = w.mu_initial() - w.offset();
        if (bare - self.params.mu_initial).abs() > 1e-6 * self.params.mu_initial.max(1e-6) {
            return Err(Error::config(format!(
                "mu_initial mismatch: parameters say {} but the waveform starts at {}",
                self.params.mu_initial, bare
            )));
        }
        let mut eff = self.params;
        eff.mu_initial = w.mu_initial();
        Ok(eff)
    }

    fn evaluate_width(
        &self,
        waveform: &Waveform,
        params: &DimensionlessParams,
        method: &Method,
    ) -> Result<(GrayZoneResult, GrayZoneResult, PropagatorCoeffs)> {
        let grid = match &self.grid {
            Some(g) => g.clone(),
            None => Grid::default_for(params, waveform)?,
        };
        let sol = solve_all_mode(waveform, &grid, params, self.solve_mode)?;
        let coeffs = match method {
            Method::Quadrature => compute_coeffs_quadrature(&sol, waveform, params)?,
            Method::MonteCarlo(cfg) => compute_coeffs_monte_carlo(&sol, waveform, params, cfg)?,
        };
        let state = initial_thermal_state(params);
        let full = gray_zone_full(&coeffs, &state, params)?;
        let asymptotic = gray_zone_asymptotic(&coeffs)?;
        Ok((full, asymptotic, coeffs))
    }

    pub fn run(&self) -> Result<PipelineRun> {
        self.waveform.check_drive()?;
        let params = self.effective_params()?;
        let mut warnings: Vec<String> = params
            .regime_warnings()
            .into_iter()
            .map(|w| w.to_string())
            .collect();

        let t_inv = self.waveform.inversion_time()?;
        let margin = self.params.plateau_margin();
        let post = self.waveform.t_end() - t_inv;
        if t_inv < margin || post < margin {
            warnings.push(format!(
                "drive margins ({t_inv:.1}, {post:.1}) are below the plateau guideline {margin:.1}; \
                 the asymptotic regime may not be reached"
            ));
        }
        if let Some(g) = &self.grid {
            if let Some(msg) = g.check_resolution(params.beta_c) {
                warnings.push(msg);
            }
        }

        let (mut full, mut asymptotic, coeffs) =
            self.evaluate_width(&self.waveform, &params, &self.method)?;

        // Duration-plateau check on the asymptotic width, always with the
        // deterministic coefficients so the diagnostic is noise-free.
        let plateau = if self.plateau_check {
            let mut series = Vec::with_capacity(3);
            for k in [1.0, 2.0, 4.0] {
                let wk = self.waveform.with_margins(k * t_inv, k * post)?;
                let pk = DimensionlessParams {
                    mu_initial: wk.mu_initial(),
                    ..params
                };
                let spec = RunSpec {
                    grid: None,
                    ..self.clone()
                };
                let (_, asym_k, _) = spec.evaluate_width(&wk, &pk, &Method::Quadrature)?;
                series.push((wk.t_end(), asym_k.delta_ix_over_ic));
            }
            let metric = check_plateau(&series)?;
            if !metric.plateau_ok {
                warnings.push(format!(
                    "gray zone not on the duration plateau (spread {:.2e} over doubled margins)",
                    metric.spread
                ));
            }
            Some(metric)
        } else {
            None
        };

        let plateau_flag = plateau.map(|m| m.plateau_ok);
        for r in [&mut full, &mut asymptotic] {
            r.diagnostics.plateau_ok = plateau_flag;
            r.diagnostics.warnings = warnings.clone();
            if let Some(ic) = self.critical_current_amperes {
                r.delta_ix_amperes = Some(r.delta_ix_over_ic * ic);
            }
        }

        Ok(PipelineRun {
            full,
            asymptotic,
            coeffs,
            plateau,
            warnings,
        })
    }
}
