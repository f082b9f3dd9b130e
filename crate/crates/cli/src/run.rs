//! Sweep orchestration: per-row parameter substitution, parallel
//! execution with per-row failure isolation, and row assembly.

use jjcomp::bvp::SolveMode;
use jjcomp::model::{
    load_waveform_auto, load_waveform_table, to_dimensionless, DimensionlessParams, Waveform,
};
use jjcomp::pipeline::{Method, PipelineRun, RunSpec};
use jjcomp::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    IcTemperatureModel, MethodSpec, ParameterBlock, RunConfig, SolveModeSpec, SweepAxis,
    WaveformSpec,
};
use crate::physics::ic_of_temperature;

/// One output row; numeric fields absent when the row failed.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub delta_ix_over_ic: Option<f64>,
    pub delta_ix_amperes: Option<f64>,
    pub err: f64,
    pub plateau_ok: Option<bool>,
    pub c: Option<f64>,
    pub q1: Option<f64>,
    pub k1: Option<f64>,
    pub status: String,
}

impl SweepRow {
    fn ok(axis: &str, value: f64, run: &PipelineRun) -> SweepRow {
        let full = &run.full;
        SweepRow {
            axis: axis.to_string(),
            value,
            delta_ix_over_ic: Some(full.delta_ix_over_ic),
            delta_ix_amperes: full.delta_ix_amperes,
            err: full.error_over_ic,
            plateau_ok: full.diagnostics.plateau_ok,
            c: Some(full.diagnostics.c),
            q1: Some(full.diagnostics.q1),
            k1: Some(full.diagnostics.k1),
            status: "ok".to_string(),
        }
    }

    fn failed(axis: &str, value: f64, err: &Error) -> SweepRow {
        SweepRow {
            axis: axis.to_string(),
            value,
            delta_ix_over_ic: None,
            delta_ix_amperes: None,
            err: 0.0,
            plateau_ok: None,
            c: None,
            q1: None,
            k1: None,
            status: err.to_string().replace([',', '\n'], ";"),
        }
    }
}

/// Base quantities resolved from the parameter block.
pub struct BaseContext {
    pub params: DimensionlessParams,
    pub ic_amperes: Option<f64>,
}

pub fn resolve_base(cfg: &RunConfig) -> Result<BaseContext> {
    match &cfg.parameters {
        ParameterBlock::Physical(p) => Ok(BaseContext {
            params: to_dimensionless(p)?,
            ic_amperes: Some(p.critical_current),
        }),
        ParameterBlock::Dimensionless(d) => Ok(BaseContext {
            params: d.build()?,
            ic_amperes: None,
        }),
    }
}

/// Builds the drive for the given parameters: the configured waveform, or
/// the default centered step with margins from the plateau rule.
pub fn build_waveform(cfg: &RunConfig, params: &DimensionlessParams) -> Result<Waveform> {
    let mu_i = params.mu_initial;
    let base = match &cfg.waveform {
        None => {
            let margin = params.plateau_margin();
            Waveform::step(mu_i, margin, 2.0 * margin)?
        }
        Some(WaveformSpec::Step {
            t_inv,
            t_end,
            mu_final,
        }) => Waveform::step_to(mu_i, mu_final.unwrap_or(-mu_i), *t_inv, *t_end)?,
        Some(WaveformSpec::TanhRamp {
            center,
            width,
            t_end,
            mu_final,
        }) => Waveform::tanh_ramp(mu_i, mu_final.unwrap_or(-mu_i), *center, *width, *t_end)?,
        Some(WaveformSpec::Table { path, column }) => {
            let file = std::fs::File::open(path).map_err(|e| {
                Error::config(format!("cannot open waveform table {}: {e}", path.display()))
            })?;
            let reader = std::io::BufReader::new(file);
            match column {
                Some(col) => load_waveform_table(reader, *col)?,
                None => load_waveform_auto(reader)?,
            }
        }
    };
    match cfg.lambda {
        Some(lambda) => base.renormalize_inductance(lambda),
        None => Ok(base),
    }
}

fn method_for(cfg: &RunConfig, seed_override: Option<u64>) -> Method {
    match cfg.method {
        MethodSpec::Quadrature => Method::Quadrature,
        MethodSpec::MonteCarlo => {
            let mut mc = cfg.mc.clone().unwrap_or_default();
            if let Some(seed) = seed_override {
                mc.rng_seed = seed;
            }
            Method::MonteCarlo(mc)
        }
    }
}

fn solve_mode_for(cfg: &RunConfig) -> SolveMode {
    match cfg.solve_mode {
        SolveModeSpec::Refined => SolveMode::Refined,
        SolveModeSpec::Central2 => SolveMode::Central2,
    }
}

fn spec_for_base(cfg: &RunConfig, base: &BaseContext, seed: Option<u64>) -> Result<RunSpec> {
    let waveform = build_waveform(cfg, &base.params)?;
    let mut spec = RunSpec::new(base.params, waveform);
    spec.method = method_for(cfg, seed);
    spec.solve_mode = solve_mode_for(cfg);
    spec.plateau_check = cfg.plateau_check;
    spec.critical_current_amperes = base.ic_amperes;
    Ok(spec)
}

/// A single gray-zone evaluation.
pub fn run_single(cfg: &RunConfig, seed: Option<u64>) -> Result<(SweepRow, PipelineRun)> {
    let base = resolve_base(cfg)?;
    let spec = spec_for_base(cfg, &base, seed)?;
    let run = spec.run()?;
    Ok((SweepRow::ok("single", 0.0, &run), run))
}

fn row_spec(
    cfg: &RunConfig,
    base: &BaseContext,
    axis: SweepAxis,
    value: f64,
    seed: Option<u64>,
) -> Result<RunSpec> {
    let mut params = base.params;
    let mut ic_row = base.ic_amperes;

    match axis {
        SweepAxis::Temperature => match (&cfg.parameters, base.ic_amperes) {
            (ParameterBlock::Physical(p), Some(ic)) => {
                let mut p_row = p.clone();
                p_row.temperature = value;
                params = to_dimensionless(&p_row)?;
                // Critical-current temperature dependence rescales the
                // ampere conversion and the classicality parameter; the
                // other plasma-unit quantities keep their reference values.
                let scale = ic_of_temperature(&cfg.ic_temperature_model, value)?;
                params.q *= scale;
                ic_row = Some(ic * scale);
            }
            _ => {
                // Dimensionless block: the axis is theta itself.
                params.theta = value;
                if !matches!(cfg.ic_temperature_model, IcTemperatureModel::Constant) {
                    return Err(Error::config(
                        "ic_temperature_model requires physical parameters",
                    ));
                }
            }
        },
        SweepAxis::BetaC => {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("invalid beta_c {value}")));
            }
            params.beta_c = value;
        }
        SweepAxis::Duration | SweepAxis::Lambda => {}
    }

    let mut waveform = build_waveform(cfg, &params)?;
    match axis {
        SweepAxis::Duration => {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("invalid duration {value}")));
            }
            waveform = waveform.with_margins(value / 2.0, value / 2.0)?;
        }
        SweepAxis::Lambda => {
            waveform = waveform.renormalize_inductance(value)?;
        }
        _ => {}
    }

    let mut spec = RunSpec::new(params, waveform);
    spec.method = method_for(cfg, seed);
    spec.solve_mode = solve_mode_for(cfg);
    spec.plateau_check = cfg.plateau_check;
    spec.critical_current_amperes = ic_row;
    Ok(spec)
}

/// Executes a sweep; rows run in parallel, failures stay in-row, output
/// order follows the axis values as configured.
pub fn run_sweep(cfg: &RunConfig, seed: Option<u64>) -> Result<Vec<SweepRow>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep subcommand needs a `sweep` block"))?;
    let values = sweep.resolve_values().map_err(Error::Config)?;
    if values.len() < 2 {
        return Err(Error::config("sweep needs at least 2 axis values"));
    }
    let base = resolve_base(cfg)?;
    let axis = sweep.axis;

    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| {
            match row_spec(cfg, &base, axis, value, seed).and_then(|spec| spec.run()) {
                Ok(run) => SweepRow::ok(axis.label(), value, &run),
                Err(e) => SweepRow::failed(axis.label(), value, &e),
            }
        })
        .collect();
    Ok(rows)
}

/// Probability-curve table for a single-point configuration.
pub fn probability_curve(cfg: &RunConfig, seed: Option<u64>) -> Result<Vec<(f64, f64)>> {
    let ix_values = cfg
        .ix_over_ic
        .as_ref()
        .ok_or_else(|| Error::config("prob-curve needs an `ix_over_ic` block"))?
        .resolve()
        .map_err(Error::Config)?;
    let base = resolve_base(cfg)?;
    let spec = spec_for_base(cfg, &base, seed)?;
    let waveform_mu = spec.waveform.mu_initial();
    let run = spec.run()?;

    let params_eff = DimensionlessParams {
        mu_initial: waveform_mu,
        ..base.params
    };
    let state = jjcomp::grayzone::initial_thermal_state(&params_eff);
    ix_values
        .into_iter()
        .map(|x| {
            jjcomp::grayzone::switching_probability(&run.coeffs, &state, &params_eff, x)
                .map(|p| (x, p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DimensionlessParamsSpec, OutputSpec, SweepSpec};

    fn base_cfg() -> RunConfig {
        RunConfig {
            parameters: ParameterBlock::Dimensionless(DimensionlessParamsSpec {
                beta_c: 1.0,
                q: 498.0,
                theta: 0.6,
                omega_cut: 50.0,
                mu_initial: 1.0,
            }),
            waveform: Some(WaveformSpec::Step {
                t_inv: 16.0,
                t_end: 32.0,
                mu_final: None,
            }),
            lambda: None,
            sweep: None,
            method: MethodSpec::Quadrature,
            mc: None,
            output: OutputSpec::default(),
            ic_temperature_model: IcTemperatureModel::Constant,
            plateau_check: false,
            solve_mode: SolveModeSpec::Refined,
            ix_over_ic: None,
        }
    }

    #[test]
    fn single_run_produces_ok_row() {
        let (row, _) = run_single(&base_cfg(), None).unwrap();
        assert_eq!(row.status, "ok");
        assert!(row.delta_ix_over_ic.unwrap() > 0.0);
        assert_eq!(row.err, 0.0);
        assert!(row.delta_ix_amperes.is_none());
    }

    #[test]
    fn theta_sweep_is_monotone() {
        let mut cfg = base_cfg();
        cfg.sweep = Some(SweepSpec {
            axis: SweepAxis::Temperature,
            values: Some(vec![0.0, 1.0, 4.0]),
            range: None,
        });
        let rows = run_sweep(&cfg, None).unwrap();
        assert_eq!(rows.len(), 3);
        let widths: Vec<f64> = rows.iter().map(|r| r.delta_ix_over_ic.unwrap()).collect();
        assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
    }

    #[test]
    fn failed_rows_do_not_poison_the_sweep() {
        let mut cfg = base_cfg();
        cfg.sweep = Some(SweepSpec {
            axis: SweepAxis::Lambda,
            // 0.4 destroys the instability (regime error); 5.0 is fine.
            values: Some(vec![0.4, 5.0]),
            range: None,
        });
        let rows = run_sweep(&cfg, None).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].status.contains("no instability"), "{}", rows[0].status);
        assert!(rows[0].delta_ix_over_ic.is_none());
        assert_eq!(rows[1].status, "ok");
    }

    #[test]
    fn sweep_order_is_deterministic_and_value_ordered() {
        let mut cfg = base_cfg();
        cfg.sweep = Some(SweepSpec {
            axis: SweepAxis::Duration,
            values: Some(vec![24.0, 32.0, 40.0]),
            range: None,
        });
        let rows = run_sweep(&cfg, None).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![24.0, 32.0, 40.0]);
    }

    #[test]
    fn probability_curve_is_symmetric() {
        let mut cfg = base_cfg();
        cfg.ix_over_ic = Some(crate::config::SweepValues {
            values: Some(vec![-0.1, -0.05, 0.0, 0.05, 0.1]),
            range: None,
        });
        let curve = probability_curve(&cfg, None).unwrap();
        assert_eq!(curve[2].1, 0.5);
        for (left, right) in [(0usize, 4usize), (1, 3)] {
            assert!((curve[left].1 + curve[right].1 - 1.0).abs() < 1e-12);
        }
    }
}
