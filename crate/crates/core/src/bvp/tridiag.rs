//! Tridiagonal solve by LU with partial pivoting (the LAPACK dgtsv scheme).
//!
//! Row interchanges cost one extra superdiagonal of fill-in but keep the
//! factorization stable for the indefinite systems the discretized
//! oscillator produces near curvature sign inversion.

/// Failure with the 0-based pivot index where elimination broke down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularSystem {
    pub pivot_index: usize,
}

/// Solves the n x n system with subdiagonal `dl`, diagonal `d`,
/// superdiagonal `du` and right-hand side `b`. All inputs are consumed.
pub fn solve(
    mut dl: Vec<f64>,
    mut d: Vec<f64>,
    mut du: Vec<f64>,
    mut b: Vec<f64>,
) -> Result<Vec<f64>, SingularSystem> {
    let n = d.len();
    assert!(n > 0, "empty tridiagonal system");
    assert_eq!(b.len(), n);
    if n > 1 {
        assert_eq!(dl.len(), n - 1);
        assert_eq!(du.len(), n - 1);
    }

    let scale = d
        .iter()
        .chain(dl.iter())
        .chain(du.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    let tiny = scale * 1e-15 + f64::MIN_POSITIVE;

    let mut du2 = vec![0.0; n.saturating_sub(2)];

    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            // No interchange.
            if d[i].abs() <= tiny {
                return Err(SingularSystem { pivot_index: i });
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            // Interchange rows i and i+1.
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let t = b[i];
            b[i] = b[i + 1];
            b[i + 1] = t - fact * b[i + 1];
            dl[i] = 0.0;
        }
    }
    if d[n - 1].abs() <= tiny {
        return Err(SingularSystem { pivot_index: n - 1 });
    }

    let mut x = b;
    x[n - 1] /= d[n - 1];
    if n >= 2 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}
