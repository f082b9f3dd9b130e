//! Physical-to-dimensionless mapping, drive waveforms and regime checks.
//!
//! Everything downstream works in plasma units: time t = omega_p * tau,
//! temperature theta = k_B T / (hbar omega_p), and the classicality
//! parameter q = E_J / (hbar omega_p) = I_c / (2 e omega_p). In these units
//! the equation-of-motion damping coefficient is 1/sqrt(beta_c) and every
//! propagator coefficient is linear in q.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, E_CHARGE, HBAR};
use crate::error::{Error, Result};

/// Junction parameters in SI units.
///
/// Exactly one of `junction_capacitance` / `plasma_frequency` must be set,
/// and exactly one of `shunt_resistance` / `beta_c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Critical current I_c, A.
    pub critical_current: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Shunt resistance R, ohm.
    #[serde(default)]
    pub shunt_resistance: Option<f64>,
    /// Stewart-McCumber parameter, as an alternative to R.
    #[serde(default)]
    pub beta_c: Option<f64>,
    /// Junction capacitance, F.
    #[serde(default)]
    pub junction_capacitance: Option<f64>,
    /// Plasma frequency omega_p, rad/s, as an alternative to the capacitance.
    #[serde(default)]
    pub plasma_frequency: Option<f64>,
    /// Bath cutoff in units of omega_p.
    #[serde(default = "default_cutoff")]
    pub cutoff_multiplier: f64,
    /// Initial potential curvature mu_i = cos(phi_e(0)/2).
    #[serde(default = "default_mu_initial")]
    pub mu_initial: f64,
}

fn default_cutoff() -> f64 {
    50.0
}

fn default_mu_initial() -> f64 {
    1.0
}

impl PhysicalParams {
    /// Derived plasma frequency, rad/s.
    pub fn omega_p(&self) -> Result<f64> {
        match (self.plasma_frequency, self.junction_capacitance) {
            (Some(wp), None) => {
                if wp <= 0.0 || !wp.is_finite() {
                    Err(Error::config("plasma_frequency must be positive"))
                } else {
                    Ok(wp)
                }
            }
            (None, Some(cj)) => {
                if cj <= 0.0 || !cj.is_finite() {
                    return Err(Error::config("junction_capacitance must be positive"));
                }
                Ok((2.0 * E_CHARGE * self.critical_current / (HBAR * cj)).sqrt())
            }
            (Some(_), Some(_)) => Err(Error::config(
                "both plasma_frequency and junction_capacitance given; supply exactly one",
            )),
            (None, None) => Err(Error::config(
                "neither plasma_frequency nor junction_capacitance given",
            )),
        }
    }

    /// Characteristic frequency omega_c = (2e/hbar) I_c R, rad/s, when R is known.
    pub fn omega_c(&self) -> Result<Option<f64>> {
        match self.shunt_resistance {
            Some(r) if r > 0.0 && r.is_finite() => {
                Ok(Some(2.0 * E_CHARGE * self.critical_current * r / HBAR))
            }
            Some(_) => Err(Error::config("shunt_resistance must be positive")),
            None => Ok(None),
        }
    }
}

/// Warning emitted when inputs are valid but stray from the regime in which
/// the linearized comparator theory is quantitatively reliable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeWarning(pub String);

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// The complete dimensionless problem statement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// Stewart-McCumber (inertia) parameter (omega_c/omega_p)^2.
    pub beta_c: f64,
    /// Classicality parameter E_J/(hbar omega_p) = I_c/(2 e omega_p).
    pub q: f64,
    /// Temperature in plasma-energy units k_B T/(hbar omega_p).
    pub theta: f64,
    /// Bath cutoff Omega/omega_p.
    pub omega_cut: f64,
    /// Initial potential curvature, in (0, 1].
    pub mu_initial: f64,
}

impl DimensionlessParams {
    pub fn new(beta_c: f64, q: f64, theta: f64, omega_cut: f64, mu_initial: f64) -> Result<Self> {
        if !beta_c.is_finite() || beta_c <= 0.0 {
            return Err(Error::config("beta_c must be positive"));
        }
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::config("q must be positive"));
        }
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::config("theta must be non-negative"));
        }
        if !omega_cut.is_finite() || omega_cut < 10.0 {
            return Err(Error::config("omega_cut must be at least 10"));
        }
        if !mu_initial.is_finite() || mu_initial <= 0.0 || mu_initial > 1.0 {
            return Err(Error::config("mu_initial must lie in (0, 1]"));
        }
        Ok(DimensionlessParams {
            beta_c,
            q,
            theta,
            omega_cut,
            mu_initial,
        })
    }

    /// Scaled-time damping coefficient 1/sqrt(beta_c).
    pub fn damping(&self) -> f64 {
        1.0 / self.beta_c.sqrt()
    }

    /// Checks I_Q << I_c and I_T << I_c (that is 1/q << 1 and theta/q << 1)
    /// plus the cutoff recommendation. Violations warn, never fail.
    pub fn regime_warnings(&self) -> Vec<RegimeWarning> {
        let mut warnings = Vec::new();
        if 1.0 / self.q > 0.1 {
            warnings.push(RegimeWarning(format!(
                "quantum current scale not small: 1/q = {:.3} (expect << 1)",
                1.0 / self.q
            )));
        }
        if self.theta / self.q > 0.1 {
            warnings.push(RegimeWarning(format!(
                "thermal current scale not small: theta/q = {:.3} (expect << 1)",
                self.theta / self.q
            )));
        }
        if self.omega_cut < 50.0 {
            warnings.push(RegimeWarning(format!(
                "bath cutoff omega_cut = {} below the recommended 50",
                self.omega_cut
            )));
        }
        warnings
    }

    /// Margin each side of the inversion needed for the asymptotic plateau:
    /// ten reciprocal bandwidths, max(1/omega_c, omega_c/2 omega_p^2) scaled.
    pub fn plateau_margin(&self) -> f64 {
        let rb = self.beta_c.sqrt();
        10.0 * rb.max(2.0 / rb)
    }
}

/// Converts SI junction parameters to plasma units.
pub fn to_dimensionless(p: &PhysicalParams) -> Result<DimensionlessParams> {
    if !p.critical_current.is_finite() || p.critical_current <= 0.0 {
        return Err(Error::config("critical_current must be positive"));
    }
    if !p.temperature.is_finite() || p.temperature < 0.0 {
        return Err(Error::config("temperature must be non-negative"));
    }
    let omega_p = p.omega_p()?;
    let beta_c = match (p.beta_c, p.omega_c()?) {
        (Some(b), None) => {
            if b <= 0.0 || !b.is_finite() {
                return Err(Error::config("beta_c must be positive"));
            }
            b
        }
        (None, Some(omega_c)) => (omega_c / omega_p).powi(2),
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "both shunt_resistance and beta_c given; supply exactly one",
            ))
        }
        (None, None) => {
            return Err(Error::config(
                "neither shunt_resistance nor beta_c given",
            ))
        }
    };
    let q = p.critical_current / (2.0 * E_CHARGE * omega_p);
    let theta = BOLTZMANN * p.temperature / (HBAR * omega_p);
    DimensionlessParams::new(beta_c, q, theta, p.cutoff_multiplier, p.mu_initial)
}

/// Which quantity a waveform table column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableColumn {
    /// Potential curvature mu directly.
    Mu,
    /// External phase phi_e; mapped to mu = cos(phi_e/2) at load time.
    PhiE,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum WaveformKind {
    /// mu jumps from `mu_i` to `mu_f` at `t_inv`; the value at exactly
    /// `t_inv` is taken from the left.
    Step { t_inv: f64, mu_i: f64, mu_f: f64 },
    /// Smooth ramp mu(t) = mid + amp*tanh((center - t)/width).
    TanhRamp {
        center: f64,
        width: f64,
        mu_i: f64,
        mu_f: f64,
    },
    /// Piecewise-linear samples; end values held outside the table.
    Table { times: Vec<f64>, values: Vec<f64> },
}

/// Drive curvature mu(t) on [0, t_end], in scaled time.
///
/// `offset` carries the inductive-source renormalization mu -> mu + 1/(2 lambda);
/// it is zero for bare drives and additive under repeated renormalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Waveform {
    kind: WaveformKind,
    t_end: f64,
    offset: f64,
}

impl Waveform {
    /// Instantaneous inversion from `mu_i` to `-mu_i` at `t_inv`.
    pub fn step(mu_i: f64, t_inv: f64, t_end: f64) -> Result<Self> {
        Self::step_to(mu_i, -mu_i, t_inv, t_end)
    }

    /// Instantaneous step between two arbitrary curvature values.
    pub fn step_to(mu_i: f64, mu_f: f64, t_inv: f64, t_end: f64) -> Result<Self> {
        if !(mu_i.is_finite() && mu_f.is_finite()) {
            return Err(Error::config("step curvatures must be finite"));
        }
        if !(t_inv > 0.0 && t_inv < t_end && t_end.is_finite()) {
            return Err(Error::config("step requires 0 < t_inv < t_end"));
        }
        Ok(Waveform {
            kind: WaveformKind::Step { t_inv, mu_i, mu_f },
            t_end,
            offset: 0.0,
        })
    }

    /// Smooth inversion centered at `center` with the given 10-90 style width.
    pub fn tanh_ramp(mu_i: f64, mu_f: f64, center: f64, width: f64, t_end: f64) -> Result<Self> {
        if !(mu_i.is_finite() && mu_f.is_finite()) {
            return Err(Error::config("ramp curvatures must be finite"));
        }
        if !(width > 0.0 && center > 0.0 && center < t_end && t_end.is_finite()) {
            return Err(Error::config(
                "ramp requires width > 0 and 0 < center < t_end",
            ));
        }
        Ok(Waveform {
            kind: WaveformKind::TanhRamp {
                center,
                width,
                mu_i,
                mu_f,
            },
            t_end,
        offset: 0.0,
        })
    }

    /// Piecewise-linear waveform through `(t, mu)` samples.
    pub fn from_table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::config("waveform table needs at least 2 points"));
        }
        let mut times = Vec::with_capacity(points.len());
        let mut values = Vec::with_capacity(points.len());
        for (i, &(t, v)) in points.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::config(format!(
                    "non-finite waveform sample at index {i}"
                )));
            }
            if let Some(&prev) = times.last() {
                if t <= prev {
                    return Err(Error::config(format!(
                        "waveform table times must be strictly increasing (index {i})"
                    )));
                }
            }
            times.push(t);
            values.push(v);
        }
        let t_end = *times.last().unwrap();
        if t_end <= 0.0 {
            return Err(Error::config("waveform table must extend past t = 0"));
        }
        Ok(Waveform {
            kind: WaveformKind::Table { times, values },
            t_end,
            offset: 0.0,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Accumulated inductive renormalization shift.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Initial curvature mu(0); the single source of truth for mu_i.
    pub fn mu_initial(&self) -> f64 {
        self.eval_unchecked(0.0)
    }

    /// Final curvature mu(t_end).
    pub fn mu_final(&self) -> f64 {
        self.eval_unchecked(self.t_end)
    }

    /// True when the drive still develops the measurement instability
    /// (final curvature negative). Renormalization with lambda <= 1/2 can
    /// destroy it, in which case gray-zone operations refuse the waveform.
    pub fn has_instability(&self) -> bool {
        self.mu_final() < 0.0
    }

    /// Validates the drive invariants mu(0) > 0 and mu(t_end) < 0.
    pub fn check_drive(&self) -> Result<()> {
        if self.mu_initial() <= 0.0 {
            return Err(Error::domain(format!(
                "initial curvature must be positive, got mu(0) = {}",
                self.mu_initial()
            )));
        }
        if !self.has_instability() {
            return Err(Error::regime(format!(
                "no instability: final curvature mu(t_end) = {} is not negative",
                self.mu_final()
            )));
        }
        Ok(())
    }

    /// mu at scaled time `t`; errors outside [0, t_end].
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_end).contains(&t) {
            return Err(Error::domain(format!(
                "waveform evaluated at t = {t} outside [0, {}]",
                self.t_end
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        self.offset + self.eval_base(t, false)
    }

    /// Left limit at `t` (differs from the right limit only at a step's t_inv).
    pub(crate) fn eval_left(&self, t: f64) -> f64 {
        self.offset + self.eval_base(t, false)
    }

    /// Right limit at `t`.
    pub(crate) fn eval_right(&self, t: f64) -> f64 {
        self.offset + self.eval_base(t, true)
    }

    /// Node value for finite differences: the mean of the one-sided limits,
    /// which keeps the discretization second order at an aligned step.
    pub(crate) fn eval_node(&self, t: f64) -> f64 {
        self.offset + 0.5 * (self.eval_base(t, false) + self.eval_base(t, true))
    }

    fn eval_base(&self, t: f64, from_right: bool) -> f64 {
        match &self.kind {
            WaveformKind::Step { t_inv, mu_i, mu_f } => {
                let before = if from_right { t < *t_inv } else { t <= *t_inv };
                if before {
                    *mu_i
                } else {
                    *mu_f
                }
            }
            WaveformKind::TanhRamp {
                center,
                width,
                mu_i,
                mu_f,
            } => {
                let mid = 0.5 * (mu_i + mu_f);
                let amp = 0.5 * (mu_i - mu_f);
                mid + amp * ((center - t) / width).tanh()
            }
            WaveformKind::Table { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                if t >= *times.last().unwrap() {
                    return *values.last().unwrap();
                }
                let j = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                    Ok(j) => return values[j],
                    Err(j) => j,
                };
                let (t0, t1) = (times[j - 1], times[j]);
                let (v0, v1) = (values[j - 1], values[j]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// The step discontinuity location, if any (used for grid alignment).
    pub fn discontinuity(&self) -> Option<f64> {
        match &self.kind {
            WaveformKind::Step { t_inv, .. } => Some(*t_inv),
            _ => None,
        }
    }

    /// Smallest t with mu(t) = 0, by bisection to 1e-10 relative to t_end.
    pub fn inversion_time(&self) -> Result<f64> {
        if let WaveformKind::Step { t_inv, mu_i, mu_f } = &self.kind {
            let (mi, mf) = (mu_i + self.offset, mu_f + self.offset);
            if mi > 0.0 && mf < 0.0 {
                return Ok(*t_inv);
            }
            return Err(Error::domain("waveform has no curvature sign inversion"));
        }

        // Bracket the first sign change on the natural knots of the waveform.
        let knots: Vec<f64> = match &self.kind {
            WaveformKind::Table { times, .. } => {
                let mut k: Vec<f64> = times.clone();
                if k[0] > 0.0 {
                    k.insert(0, 0.0);
                }
                k
            }
            _ => {
                let n = 4096;
                (0..=n).map(|i| self.t_end * i as f64 / n as f64).collect()
            }
        };
        let mut bracket = None;
        for w in knots.windows(2) {
            let (f0, f1) = (self.eval_unchecked(w[0]), self.eval_unchecked(w[1]));
            if f0 == 0.0 {
                return Ok(w[0]);
            }
            if f0 > 0.0 && f1 <= 0.0 {
                bracket = Some((w[0], w[1]));
                break;
            }
            if f0 < 0.0 {
                return Err(Error::domain(
                    "waveform is not positive before its first zero crossing",
                ));
            }
        }
        let (mut lo, mut hi) =
            bracket.ok_or_else(|| Error::domain("waveform has no curvature sign inversion"))?;
        let tol = 1e-10 * self.t_end;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.eval_unchecked(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Inductive-source renormalization mu(t) -> mu(t) + 1/(2 lambda).
    ///
    /// `lambda` is the dimensionless source inductance 2 pi L I_c / Phi_0;
    /// an infinite lambda is the identity. The returned waveform may have
    /// lost its instability (lambda <= 1/2); check `has_instability`.
    pub fn renormalize_inductance(&self, lambda: f64) -> Result<Waveform> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::domain("inductance parameter lambda must be positive"));
        }
        let mut out = self.clone();
        out.offset += 0.5 / lambda; // zero when lambda is infinite
        Ok(out)
    }

    /// Rebuilds a parametric waveform with the stated margins before and
    /// after the inversion; tables extend only on the held right end.
    /// Used by duration-plateau checks.
    pub fn with_margins(&self, pre: f64, post: f64) -> Result<Waveform> {
        if !(pre > 0.0 && post > 0.0) {
            return Err(Error::config("margins must be positive"));
        }
        let mut out = match &self.kind {
            WaveformKind::Step { mu_i, mu_f, .. } => Waveform {
                kind: WaveformKind::Step {
                    t_inv: pre,
                    mu_i: *mu_i,
                    mu_f: *mu_f,
                },
                t_end: pre + post,
                offset: 0.0,
            },
            WaveformKind::TanhRamp {
                width, mu_i, mu_f, ..
            } => Waveform {
                kind: WaveformKind::TanhRamp {
                    center: pre,
                    width: *width,
                    mu_i: *mu_i,
                    mu_f: *mu_f,
                },
                t_end: pre + post,
                offset: 0.0,
            },
            WaveformKind::Table { .. } => {
                let t_inv = self.inversion_time()?;
                let t_end = (t_inv + post).max(self.t_end);
                Waveform {
                    kind: self.kind.clone(),
                    t_end,
                    offset: 0.0,
                }
            }
        };
        out.offset = self.offset;
        Ok(out)
    }
}

/// Loads a `t,mu` or `t,phi_e` CSV stream into a piecewise-linear waveform.
///
/// Times are in units of 1/omega_p. Lines starting with `#` are comments.
/// The header must name the requested column kind.
pub fn load_waveform_table<R: BufRead>(reader: R, column: TableColumn) -> Result<Waveform> {
    let expected_header = match column {
        TableColumn::Mu => "t,mu",
        TableColumn::PhiE => "t,phi_e",
    };
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut header_seen = false;
    let mut data_lines = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::ingestion(line_no, format!("read failed: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            let normalized: String = trimmed
                .to_ascii_lowercase()
                .chars()
                .filter(|c| !c.is_whitespace())
                .collect();
            if normalized != expected_header {
                return Err(Error::ingestion(
                    line_no,
                    format!("expected header `{expected_header}`, got `{trimmed}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let mut fields = trimmed.split(',');
        let t_str = fields.next().unwrap_or("");
        let v_str = fields
            .next()
            .ok_or_else(|| Error::ingestion(line_no, "missing second column"))?;
        if fields.next().is_some() {
            return Err(Error::ingestion(line_no, "too many columns"));
        }
        let t: f64 = t_str
            .trim()
            .parse()
            .map_err(|_| Error::ingestion(line_no, format!("bad time value `{t_str}`")))?;
        let raw: f64 = v_str
            .trim()
            .parse()
            .map_err(|_| Error::ingestion(line_no, format!("bad value `{v_str}`")))?;
        if !t.is_finite() || !raw.is_finite() {
            return Err(Error::ingestion(line_no, "non-finite value"));
        }
        let mu = match column {
            TableColumn::Mu => raw,
            TableColumn::PhiE => (raw / 2.0).cos(),
        };
        if let Some(&(prev_t, _)) = points.last() {
            if t <= prev_t {
                return Err(Error::ingestion(
                    line_no,
                    format!("time {t} not increasing (previous {prev_t})"),
                ));
            }
        }
        points.push((t, mu));
        data_lines += 1;
    }

    if !header_seen {
        return Err(Error::ingestion(1, "empty stream (no header)"));
    }
    if data_lines < 2 {
        return Err(Error::ingestion(
            data_lines + 1,
            "waveform table needs at least 2 rows",
        ));
    }
    let w = Waveform::from_table(points).map_err(|e| match e {
        Error::Config(msg) => Error::ingestion(0, msg),
        other => other,
    })?;
    if w.mu_initial() <= 0.0 {
        return Err(Error::ingestion(
            2,
            format!("initial curvature must be positive, got {}", w.mu_initial()),
        ));
    }
    if !w.has_instability() {
        return Err(Error::ingestion(
            data_lines + 1,
            "missing sign inversion: final curvature is not negative",
        ));
    }
    Ok(w)
}

/// Reads the header of a waveform CSV stream and loads it with the column
/// kind the header declares.
pub fn load_waveform_auto<R: BufRead>(mut reader: R) -> Result<Waveform> {
    let mut buf = Vec::new();
    std::io::Read::read_to_end(&mut reader, &mut buf)
        .map_err(|e| Error::ingestion(1, format!("read failed: {e}")))?;
    let text = String::from_utf8(buf).map_err(|_| Error::ingestion(1, "stream is not UTF-8"))?;
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    let normalized: String = header
        .to_ascii_lowercase()
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let column = match normalized.as_str() {
        "t,mu" => TableColumn::Mu,
        "t,phi_e" => TableColumn::PhiE,
        _ => {
            return Err(Error::ingestion(
                1,
                format!("unrecognized header `{header}` (expected `t,mu` or `t,phi_e`)"),
            ))
        }
    };
    load_waveform_table(std::io::Cursor::new(text), column)
}
