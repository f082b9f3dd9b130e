//! JSON run-configuration schema.

use std::path::PathBuf;

use jjcomp::coeffs::McConfig;
use jjcomp::model::{DimensionlessParams, PhysicalParams, TableColumn};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterBlock {
    Physical(PhysicalParams),
    Dimensionless(DimensionlessParamsSpec),
}

/// Dimensionless parameters as written in a config file; `mu_initial`
/// defaults to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionlessParamsSpec {
    pub beta_c: f64,
    pub q: f64,
    pub theta: f64,
    #[serde(default = "default_omega_cut")]
    pub omega_cut: f64,
    #[serde(default = "default_mu_initial")]
    pub mu_initial: f64,
}

fn default_omega_cut() -> f64 {
    50.0
}

fn default_mu_initial() -> f64 {
    1.0
}

impl DimensionlessParamsSpec {
    pub fn build(&self) -> jjcomp::Result<DimensionlessParams> {
        DimensionlessParams::new(self.beta_c, self.q, self.theta, self.omega_cut, self.mu_initial)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveformSpec {
    /// Instantaneous inversion; mu_final defaults to -mu_initial.
    Step {
        t_inv: f64,
        t_end: f64,
        #[serde(default)]
        mu_final: Option<f64>,
    },
    TanhRamp {
        center: f64,
        width: f64,
        t_end: f64,
        #[serde(default)]
        mu_final: Option<f64>,
    },
    /// CSV file per the waveform table interface; the column kind is read
    /// from the header unless pinned here.
    Table {
        path: PathBuf,
        #[serde(default)]
        column: Option<TableColumn>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Temperature,
    BetaC,
    Duration,
    Lambda,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Temperature => "temperature",
            SweepAxis::BetaC => "beta_c",
            SweepAxis::Duration => "duration",
            SweepAxis::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeSpacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: RangeSpacing,
}

fn default_spacing() -> RangeSpacing {
    RangeSpacing::Linear
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        if self.points < 2 {
            return Err("range needs at least 2 points".into());
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop > self.start) {
            return Err("range needs finite stop > start".into());
        }
        let n = self.points;
        Ok(match self.spacing {
            RangeSpacing::Linear => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
            RangeSpacing::Log => {
                if self.start <= 0.0 {
                    return Err("log range needs start > 0".into());
                }
                let (a, b) = (self.start.ln(), self.stop.ln());
                (0..n)
                    .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<RangeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            format: OutputFormat::Csv,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IcTemperatureModel {
    Constant,
    AmbegaokarBaratoff {
        tc_kelvin: f64,
        /// Zero-temperature gap in joules; defaults to the BCS value
        /// 1.764 k_B Tc.
        #[serde(default)]
        delta0_joules: Option<f64>,
        #[serde(default = "default_reference_kelvin")]
        reference_kelvin: f64,
    },
}

fn default_reference_kelvin() -> f64 {
    4.2
}

impl Default for IcTemperatureModel {
    fn default() -> Self {
        IcTemperatureModel::Constant
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveModeSpec {
    Refined,
    Central2,
}

impl Default for SolveModeSpec {
    fn default() -> Self {
        SolveModeSpec::Refined
    }
}

/// One batch run: parameters, drive, optional sweep, method and output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub parameters: ParameterBlock,
    #[serde(default)]
    pub waveform: Option<WaveformSpec>,
    /// Inductive-source renormalization parameter lambda.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_method")]
    pub method: MethodSpec,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub ic_temperature_model: IcTemperatureModel,
    #[serde(default = "default_true")]
    pub plateau_check: bool,
    #[serde(default)]
    pub solve_mode: SolveModeSpec,
    /// Probability-curve points (prob-curve subcommand only).
    #[serde(default)]
    pub ix_over_ic: Option<SweepValues>,
}

fn default_method() -> MethodSpec {
    MethodSpec::Quadrature
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepValues {
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<RangeSpec>,
}

impl SweepValues {
    pub fn resolve(&self) -> Result<Vec<f64>, String> {
        match (&self.values, &self.range) {
            (Some(v), None) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    Err("values list must be nonempty and finite".into())
                } else {
                    Ok(v.clone())
                }
            }
            (None, Some(r)) => r.values(),
            _ => Err("specify exactly one of `values` or `range`".into()),
        }
    }
}

impl SweepSpec {
    pub fn resolve_values(&self) -> Result<Vec<f64>, String> {
        SweepValues {
            values: self.values.clone(),
            range: self.range.clone(),
        }
        .resolve()
    }
}
