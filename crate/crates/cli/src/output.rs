//! CSV and JSON emission. Floats are written with Rust's shortest
//! round-trip formatting, so JSON output re-reads bit-exactly.

use std::io::Write;

use jjcomp::{Error, Result};
use serde::Serialize;

use crate::run::SweepRow;

pub const SWEEP_CSV_HEADER: &str =
    "axis,value,delta_ix_over_ic,delta_ix_amperes,err,plateau_ok,C,Q1,K1,status";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rows_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    let io = |e: std::io::Error| Error::config(format!("write failed: {e}"));
    writeln!(w, "{SWEEP_CSV_HEADER}").map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.axis,
            r.value,
            opt(r.delta_ix_over_ic),
            opt(r.delta_ix_amperes),
            r.err,
            r.plateau_ok.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.c),
            opt(r.q1),
            opt(r.k1),
            r.status
        )
        .map_err(io)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RowsDoc<'a> {
    rows: &'a [SweepRow],
}

pub fn write_rows_json<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    serde_json::to_writer_pretty(w, &RowsDoc { rows })
        .map_err(|e| Error::config(format!("write failed: {e}")))
}

pub fn write_curve_csv<W: Write>(mut w: W, curve: &[(f64, f64)]) -> Result<()> {
    let io = |e: std::io::Error| Error::config(format!("write failed: {e}"));
    writeln!(w, "ix_over_ic,p").map_err(io)?;
    for (x, p) in curve {
        writeln!(w, "{x},{p}").map_err(io)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurvePoint {
    ix_over_ic: f64,
    p: f64,
}

pub fn write_curve_json<W: Write>(w: W, curve: &[(f64, f64)]) -> Result<()> {
    let points: Vec<CurvePoint> = curve
        .iter()
        .map(|&(ix_over_ic, p)| CurvePoint { ix_over_ic, p })
        .collect();
    serde_json::to_writer_pretty(w, &serde_json::json!({ "points": points }))
        .map_err(|e| Error::config(format!("write failed: {e}")))
}

/// Debug dump of the basis functions and derivatives.
pub fn write_bvp_csv<W: Write>(mut w: W, sol: &jjcomp::bvp::BvpSolution) -> Result<()> {
    let io = |e: std::io::Error| Error::config(format!("write failed: {e}"));
    writeln!(
        w,
        "t,a1,a2,a,b1,b2,a1_prime,a2_prime,a_prime,b1_prime,b2_prime"
    )
    .map_err(io)?;
    for (i, t) in sol.grid().nodes().enumerate() {
        writeln!(
            w,
            "{t},{},{},{},{},{},{},{},{},{},{}",
            sol.a1[i],
            sol.a2[i],
            sol.a[i],
            sol.b1[i],
            sol.b2[i],
            sol.a1_prime[i],
            sol.a2_prime[i],
            sol.a_prime[i],
            sol.b1_prime[i],
            sol.b2_prime[i]
        )
        .map_err(io)?;
    }
    Ok(())
}
