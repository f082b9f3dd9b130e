//! Independent closed-form oracle for linear second-order boundary-value
//! problems with piecewise-constant coefficients,
//!
//! ```text
//!     u'' + p u' + mu u = r,    mu = mu_before (t < t_inv), mu_after after,
//! ```
//!
//! solved segment by segment from characteristic roots, with basis
//! exponentials anchored at the segment end where they are largest so the
//! matching system stays well conditioned at any duration. This never
//! touches the production discretization path.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy)]
enum Basis {
    RealPair {
        l1: f64,
        l2: f64,
        a1: f64,
        a2: f64,
    },
    Critical {
        l: f64,
        anchor: f64,
        t0: f64,
        span: f64,
    },
    Complex {
        sigma: f64,
        omega: f64,
        anchor: f64,
    },
}

impl Basis {
    fn for_roots(p: f64, mu: f64, t0: f64, t1: f64) -> Basis {
        let disc = p * p - 4.0 * mu;
        let scale = (p * p).max(4.0 * mu.abs()).max(1e-30);
        let anchored = |l: f64| if l > 0.0 { t1 } else { t0 };
        if disc.abs() <= 1e-12 * scale {
            let l = -p / 2.0;
            Basis::Critical {
                l,
                anchor: anchored(l),
                t0,
                span: t1 - t0,
            }
        } else if disc > 0.0 {
            let s = disc.sqrt();
            let l1 = (-p + s) / 2.0;
            let l2 = (-p - s) / 2.0;
            Basis::RealPair {
                l1,
                l2,
                a1: anchored(l1),
                a2: anchored(l2),
            }
        } else {
            let sigma = -p / 2.0;
            Basis::Complex {
                sigma,
                omega: (-disc).sqrt() / 2.0,
                anchor: anchored(sigma),
            }
        }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Basis::RealPair { l1, l2, a1, a2 } => ((l1 * (t - a1)).exp(), (l2 * (t - a2)).exp()),
            Basis::Critical { l, anchor, t0, span } => {
                let e = (l * (t - anchor)).exp();
                (e, (t - t0) / span * e)
            }
            Basis::Complex { sigma, omega, anchor } => {
                let e = (sigma * (t - anchor)).exp();
                (e * (omega * t).cos(), e * (omega * t).sin())
            }
        }
    }

    fn eval_prime(&self, t: f64) -> (f64, f64) {
        match *self {
            Basis::RealPair { l1, l2, a1, a2 } => {
                (l1 * (l1 * (t - a1)).exp(), l2 * (l2 * (t - a2)).exp())
            }
            Basis::Critical { l, anchor, t0, span } => {
                let e = (l * (t - anchor)).exp();
                (l * e, e / span + l * (t - t0) / span * e)
            }
            Basis::Complex { sigma, omega, anchor } => {
                let e = (sigma * (t - anchor)).exp();
                let (s, c) = ((omega * t).sin(), (omega * t).cos());
                (sigma * e * c - omega * e * s, sigma * e * s + omega * e * c)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Particular {
    /// u_p = c0 + c1 (t - t_ref) + c2 (t - t_ref)^2
    t_ref: f64,
    c0: f64,
    c1: f64,
    c2: f64,
}

impl Particular {
    fn new(p: f64, mu: f64, r: f64, t_ref: f64) -> Particular {
        if mu.abs() > 1e-300 {
            Particular {
                t_ref,
                c0: r / mu,
                c1: 0.0,
                c2: 0.0,
            }
        } else if p.abs() > 1e-300 {
            Particular {
                t_ref,
                c0: 0.0,
                c1: r / p,
                c2: 0.0,
            }
        } else {
            Particular {
                t_ref,
                c0: 0.0,
                c1: 0.0,
                c2: r / 2.0,
            }
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let d = t - self.t_ref;
        self.c0 + self.c1 * d + self.c2 * d * d
    }

    fn eval_prime(&self, t: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * (t - self.t_ref)
    }
}

#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    t1: f64,
    basis: Basis,
    particular: Particular,
    x1: f64,
    x2: f64,
}

/// Closed-form solution, evaluable anywhere on [0, t_end].
#[derive(Debug, Clone)]
pub struct OracleSolution {
    segments: Vec<Segment>,
}

impl OracleSolution {
    fn segment(&self, t: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| t <= s.t1)
            .unwrap_or_else(|| self.segments.last().unwrap())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = self.segment(t);
        let (f1, f2) = s.basis.eval(t);
        s.x1 * f1 + s.x2 * f2 + s.particular.eval(t)
    }

    pub fn eval_prime(&self, t: f64) -> f64 {
        let s = self.segment(t);
        let (d1, d2) = s.basis.eval_prime(t);
        s.x1 * d1 + s.x2 * d2 + s.particular.eval_prime(t)
    }
}

/// Dense Gaussian elimination with partial pivoting; oracle-sized systems.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-300, "singular oracle system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Constant-coefficient oracle on [0, t_end].
pub fn solve_constant(
    damping: f64,
    mu: f64,
    rhs: f64,
    t_end: f64,
    bc: (f64, f64),
) -> OracleSolution {
    let basis = Basis::for_roots(damping, mu, 0.0, t_end);
    let particular = Particular::new(damping, mu, rhs, 0.0);
    let (f1_0, f2_0) = basis.eval(0.0);
    let (f1_t, f2_t) = basis.eval(t_end);
    let x = solve_dense(
        vec![vec![f1_0, f2_0], vec![f1_t, f2_t]],
        vec![bc.0 - particular.eval(0.0), bc.1 - particular.eval(t_end)],
    );
    OracleSolution {
        segments: vec![Segment {
            t0: 0.0,
            t1: t_end,
            basis,
            particular,
            x1: x[0],
            x2: x[1],
        }],
    }
}

/// Piecewise oracle for an instantaneous curvature step at t_inv.
pub fn solve_step(
    damping: f64,
    mu_before: f64,
    mu_after: f64,
    t_inv: f64,
    t_end: f64,
    rhs: f64,
    bc: (f64, f64),
) -> OracleSolution {
    assert!(t_inv > 0.0 && t_inv < t_end);
    let basis1 = Basis::for_roots(damping, mu_before, 0.0, t_inv);
    let basis2 = Basis::for_roots(damping, mu_after, t_inv, t_end);
    let part1 = Particular::new(damping, mu_before, rhs, 0.0);
    let part2 = Particular::new(damping, mu_after, rhs, t_inv);

    let (f1_0, f2_0) = basis1.eval(0.0);
    let (f1_i, f2_i) = basis1.eval(t_inv);
    let (d1_i, d2_i) = basis1.eval_prime(t_inv);
    let (g1_i, g2_i) = basis2.eval(t_inv);
    let (e1_i, e2_i) = basis2.eval_prime(t_inv);
    let (g1_t, g2_t) = basis2.eval(t_end);

    let a = vec![
        vec![f1_0, f2_0, 0.0, 0.0],
        vec![f1_i, f2_i, -g1_i, -g2_i],
        vec![d1_i, d2_i, -e1_i, -e2_i],
        vec![0.0, 0.0, g1_t, g2_t],
    ];
    let b = vec![
        bc.0 - part1.eval(0.0),
        part2.eval(t_inv) - part1.eval(t_inv),
        part2.eval_prime(t_inv) - part1.eval_prime(t_inv),
        bc.1 - part2.eval(t_end),
    ];
    let x = solve_dense(a, b);
    OracleSolution {
        segments: vec![
            Segment {
                t0: 0.0,
                t1: t_inv,
                basis: basis1,
                particular: part1,
                x1: x[0],
                x2: x[1],
            },
            Segment {
                t0: t_inv,
                t1: t_end,
                basis: basis2,
                particular: part2,
                x1: x[2],
                x2: x[3],
            },
        ],
    }
}

/// The five basis-problem specifications shared by oracle tests:
/// (forward damping?, rhs, (left, right)) for a1, a2, a, b1, b2.
pub const BASIS_PROBLEMS: [(bool, f64, (f64, f64)); 5] = [
    (true, 0.0, (1.0, 0.0)),
    (true, 0.0, (0.0, 1.0)),
    (true, 1.0, (0.0, 0.0)),
    (false, 0.0, (1.0, 0.0)),
    (false, 0.0, (0.0, 1.0)),
];

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
