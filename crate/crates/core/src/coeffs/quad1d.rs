//! Adaptive panel (Simpson) quadrature for the one-dimensional frequency
//! integrals. Non-recursive, with an evaluation budget; panels inherit a
//! width-proportional share of the absolute tolerance.

use crate::error::{Error, Result};

pub struct QuadratureOutcome {
    pub value: f64,
    /// Sum of the accepted panels' Richardson error estimates.
    #[allow(dead_code)]
    pub error_estimate: f64,
    #[allow(dead_code)]
    pub evals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    simpson: f64,
    tol: f64,
}

/// Integrates `f` over [a, b] to relative tolerance `rtol` (with respect to
/// a coarse composite estimate of the integral's magnitude).
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rtol: f64,
    max_evals: usize,
) -> Result<QuadratureOutcome> {
    assert!(b > a);
    let mut evals = 0usize;
    let mut eval = |x: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    // Coarse composite Simpson sets the absolute tolerance scale.
    let coarse_n = 128usize;
    let h = (b - a) / coarse_n as f64;
    let coarse_f: Vec<f64> = (0..=coarse_n)
        .map(|i| eval(a + i as f64 * h, &mut evals))
        .collect();
    let mut coarse = 0.0;
    let mut abs_mass = 0.0;
    for i in (0..coarse_n).step_by(2) {
        let s = h / 3.0 * (coarse_f[i] + 4.0 * coarse_f[i + 1] + coarse_f[i + 2]);
        coarse += s;
        abs_mass += s.abs();
    }
    let tol_total = rtol * coarse.abs().max(abs_mass * 0.1).max(f64::MIN_POSITIVE);

    // Seed the work list with the coarse panels so initial structure is kept.
    let mut stack: Vec<Panel> = Vec::new();
    for i in (0..coarse_n).step_by(2) {
        let (pa, pb) = (a + i as f64 * h, a + (i + 2) as f64 * h);
        stack.push(Panel {
            a: pa,
            b: pb,
            fa: coarse_f[i],
            fm: coarse_f[i + 1],
            fb: coarse_f[i + 2],
            simpson: h / 3.0 * (coarse_f[i] + 4.0 * coarse_f[i + 1] + coarse_f[i + 2]),
            tol: tol_total * 2.0 / coarse_n as f64,
        });
    }

    let mut value = 0.0;
    let mut error_estimate = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = eval(lm, &mut evals);
        let frm = eval(rm, &mut evals);
        let h6 = (p.b - p.a) / 12.0;
        let s_left = h6 * (p.fa + 4.0 * flm + p.fm);
        let s_right = h6 * (p.fm + 4.0 * frm + p.fb);
        let err = (s_left + s_right - p.simpson) / 15.0;
        let width_tiny = (p.b - p.a) < 1e-13 * (b - a);
        if err.abs() <= p.tol || width_tiny {
            value += s_left + s_right + err;
            error_estimate += err.abs();
        } else if evals >= max_evals {
            return Err(Error::numerical(format!(
                "frequency quadrature did not reach tolerance within {max_evals} evaluations; \
                 achieved estimate {:.6e} with local defect {:.2e}",
                value + s_left + s_right + stack.iter().map(|q| q.simpson).sum::<f64>(),
                err.abs()
            )));
        } else {
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                simpson: s_left,
                tol: p.tol / 2.0,
            });
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                simpson: s_right,
                tol: p.tol / 2.0,
            });
        }
    }

    Ok(QuadratureOutcome {
        value,
        error_estimate,
        evals,
    })
}
