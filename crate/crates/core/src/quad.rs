//! Gauss-Legendre panel quadrature with adaptive panel doubling.
//!
//! Used by the kernel and oscillatory-integral probes, which need values at
//! off-lattice offsets and therefore cannot ride the FFT. Fixed order 16 per
//! panel; the panel count doubles until two consecutive refinements agree.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ORDER: usize = 16;

/// Nodes and weights on [-1, 1], computed once by Newton iteration on the
/// Legendre polynomial.
fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Integral over [a, b] split into `panels` equal panels.
pub fn panel_integral(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, panels: usize) -> Complex64 {
    let (nodes, weights) = rule();
    let width = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + width / 2.0;
        let half = width / 2.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += f(mid + half * x) * (w * half);
        }
    }
    acc
}

/// Doubles the panel count until two consecutive results agree to the given
/// tolerances, starting from `initial_panels`.
pub fn adaptive_integral(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Complex64> {
    let mut panels = initial_panels.max(1);
    let mut last = panel_integral(f, a, b, panels);
    loop {
        panels *= 2;
        let cur = panel_integral(f, a, b, panels);
        let delta = (cur - last).norm();
        if delta <= abs_tol.max(1e-12 * cur.norm()) {
            return Ok(cur);
        }
        if panels >= max_panels {
            return Err(Error::QuadratureDiverged {
                panels,
                last_delta: delta,
            });
        }
        last = cur;
    }
}

/// Tensor-product version on [a, b] x [a, b].
pub fn adaptive_integral_2d(
    f: &dyn Fn(f64, f64) -> Complex64,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Complex64> {
    let mut panels = initial_panels.max(1);
    let mut last = tensor_integral(f, a, b, panels);
    loop {
        panels *= 2;
        let cur = tensor_integral(f, a, b, panels);
        let delta = (cur - last).norm();
        if delta <= abs_tol.max(1e-12 * cur.norm()) {
            return Ok(cur);
        }
        if panels >= max_panels {
            return Err(Error::QuadratureDiverged {
                panels,
                last_delta: delta,
            });
        }
        last = cur;
    }
}

fn tensor_integral(f: &dyn Fn(f64, f64) -> Complex64, a: f64, b: f64, panels: usize) -> Complex64 {
    let (nodes, weights) = rule();
    let width = (b - a) / panels as f64;
    let half = width / 2.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid_x = a + width * p as f64 + half;
        for q in 0..panels {
            let mid_y = a + width * q as f64 + half;
            for (x, wx) in nodes.iter().zip(weights) {
                for (y, wy) in nodes.iter().zip(weights) {
                    acc += f(mid_x + half * x, mid_y + half * y) * (wx * half * wy * half);
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_integrated_exactly()
    {
        // order 16 handles degree 31 exactly
        let f = |x: f64| Complex64::new(x.powi(20) - 3.0 * x.powi(7) + 2.0, 0.0);
        let got = panel_integral(&f, -1.0, 1.0, 1);
        let expected = 2.0 / 21.0 + 4.0;
        assert_relative_eq!(got.re, expected, max_relative = 1e-14);
        assert!(got.im.abs() < 1e-15);
    }

    #[test]
    fn oscillatory_integral_matches_closed_form() {
        // integral of e^{i w x} over [0, 1] = (e^{iw} - 1) / (iw)
        let w = 37.0;
        let f = move |x: f64| Complex64::new(0.0, w * x).exp();
        let got = adaptive_integral(&f, 0.0, 1.0, 4, 1e-13, 1 << 16).unwrap();
        let expected = (Complex64::new(0.0, w).exp() - 1.0) / Complex64::new(0.0, w);
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn divergence_is_reported() {
        // a non-integrable spike never settles at the tolerance
        let f = |x: f64| Complex64::new(1.0 / x.abs().max(1e-300), 0.0);
        let err = adaptive_integral(&f, -1.0, 1.0, 2, 1e-13, 64);
        assert!(matches!(err, Err(Error::QuadratureDiverged { .. })));
    }

    #[test]
    fn tensor_rule_integrates_gaussians() {
        let f = |x: f64, y: f64| Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0);
        let got = adaptive_integral_2d(&f, -8.0, 8.0, 4, 1e-13, 1 << 10).unwrap();
        assert_relative_eq!(got.re, crate::grid::TAU, max_relative = 1e-12);
    }
}
