//! Sobolev norms, the discrete Hardy-Littlewood maximal function, and
//! ratio plumbing for boundedness experiments.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, LpExponent, Side};
use crate::grid::Region;

/// Inhomogeneous H^s norm: `(2 pi)^{-dim/2} || <xi>^s fhat ||_2` with
/// `<xi> = (1 + |xi|^2)^{1/2}`. Agrees with the L2 norm at s = 0.
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Sobolev exponent must be finite, got {s}"
        )));
    }
    let spec = f.to_side(Side::Frequency)?;
    let grid = spec.grid();
    let measure = grid.freq_spacing().powi(grid.dim() as i32);
    let mut acc = 0.0;
    for (i, v) in spec.values().iter().enumerate() {
        let xi = grid.freq(i);
        let weight = (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(s);
        acc += weight * v.norm_sqr() * measure;
    }
    Ok((acc / crate::grid::TAU.powi(grid.dim() as i32)).sqrt())
}

/// Discrete Hardy-Littlewood maximal function over dyadic ball radii
/// r = h, 2h, 4h, ..., L/2 on the torus. Balls are open, so the smallest
/// radius reduces to the point's own cell and Mf >= |f| pointwise.
/// Averages use counting measure over the ball's grid points, which matches
/// the continuum average up to the usual lattice discretization.
pub fn hl_maximal(f: &Field) -> Result<Field> {
    f.expect_side(Side::Space)?;
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let out = match grid.dim() {
        1 => {
            let abs: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
            let prefix = prefix_sums(&abs);
            let total = prefix[n];
            // radius h is the point's own cell; seeding with |f| keeps the
            // domination Mf >= |f| exact rather than up to prefix rounding
            let mut best = abs.clone();
            let mut m = 2usize;
            while m <= n / 2 {
                let w = m - 1;
                let count = (2 * w + 1) as f64;
                for (i, b) in best.iter_mut().enumerate() {
                    let avg = cyclic_window_sum(&prefix, total, n, i, w) / count;
                    if avg > *b {
                        *b = avg;
                    }
                }
                m *= 2;
            }
            // the closing radius L/2 covers the whole circle
            let mean = total / n as f64;
            for b in &mut best {
                if mean > *b {
                    *b = mean;
                }
            }
            best
        }
        _ => {
            let abs: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
            let row_prefix: Vec<Vec<f64>> = (0..n)
                .map(|r| prefix_sums(&abs[r * n..(r + 1) * n]))
                .collect();
            let row_totals: Vec<f64> = row_prefix.iter().map(|p| p[n]).collect();
            let mut best = abs.clone();
            let mut m = 2usize;
            while m <= n / 2 {
                // column half-width per row offset: largest w with dy^2 + w^2 < m^2
                let extents: Vec<usize> = (0..m)
                    .map(|dy| {
                        let limit = m * m - dy * dy;
                        let mut w = (limit as f64).sqrt() as usize;
                        while dy * dy + w * w >= m * m {
                            w -= 1;
                        }
                        while dy * dy + (w + 1) * (w + 1) < m * m {
                            w += 1;
                        }
                        w
                    })
                    .collect();
                let count: f64 = extents
                    .iter()
                    .enumerate()
                    .map(|(dy, &w)| {
                        let row = (2 * w + 1) as f64;
                        if dy == 0 {
                            row
                        } else {
                            2.0 * row
                        }
                    })
                    .sum();
                for i0 in 0..n {
                    for i1 in 0..n {
                        let mut acc = 0.0;
                        for (dy, &w) in extents.iter().enumerate() {
                            let r_up = (i0 + dy) % n;
                            acc += cyclic_window_sum(&row_prefix[r_up], row_totals[r_up], n, i1, w);
                            if dy != 0 {
                                let r_dn = (i0 + n - dy) % n;
                                acc += cyclic_window_sum(
                                    &row_prefix[r_dn],
                                    row_totals[r_dn],
                                    n,
                                    i1,
                                    w,
                                );
                            }
                        }
                        let avg = acc / count;
                        let b = &mut best[i0 * n + i1];
                        if avg > *b {
                            *b = avg;
                        }
                    }
                }
                m *= 2;
            }
            let mean = row_totals.iter().sum::<f64>() / (n * n) as f64;
            for b in &mut best {
                if mean > *b {
                    *b = mean;
                }
            }
            best
        }
    };
    Field::new(
        grid,
        Side::Space,
        out.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
}

fn prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(values.len() + 1);
    p.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        p.push(acc);
    }
    p
}

/// Sum of values at cyclic indices center-w ..= center+w, window length < n.
fn cyclic_window_sum(prefix: &[f64], total: f64, n: usize, center: usize, w: usize) -> f64 {
    let lo = (center + n - (w % n)) % n;
    let hi = (center + w) % n;
    if lo <= hi {
        prefix[hi + 1] - prefix[lo]
    } else {
        total - (prefix[lo] - prefix[hi + 1])
    }
}

/// || output ||_p over the region, divided by || input ||_p over the whole
/// grid. The plumbing behind every operator-boundedness table.
pub fn lp_ratio_report(
    op_output: &Field,
    input: &Field,
    p: LpExponent,
    region: &Region,
) -> Result<f64> {
    if op_output.grid() != input.grid() {
        return Err(Error::GridMismatch);
    }
    let denom = input.restrict_norm(&Region::All, p)?;
    if denom == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(op_output.restrict_norm(region, p)? / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, TAU};
    use approx::assert_relative_eq;

    #[test]
    fn sobolev_at_zero_is_l2() {
        let g = make_grid(1, 128, 12.0).unwrap();
        for seed in [1, 2, 3] {
            let f = Field::random_band_limited(g, g.nyquist() * 0.9, seed).unwrap();
            let a = sobolev_norm(&f, 0.0).unwrap();
            let b = f.restrict_norm(&Region::All, LpExponent::Finite(2.0)).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn pure_tone_weight_is_exact() {
        // delta xi = sqrt(3), so the first bin sits at |xi| = sqrt(3) and
        // <xi> = 2
        let g = make_grid(1, 32, TAU / 3.0f64.sqrt()).unwrap();
        let f = Field::from_space_fn(g, |x| Complex64::new(0.0, 3.0f64.sqrt() * x[0]).exp());
        let l2 = f.l2_norm();
        let h1 = sobolev_norm(&f, 1.0).unwrap();
        assert_relative_eq!(h1, 2.0 * l2, max_relative = 1e-10);
    }

    #[test]
    fn sobolev_norm_grows_with_s() {
        let g = make_grid(2, 32, 10.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist() * 0.8, 9).unwrap();
        let mut last = sobolev_norm(&f, -1.0).unwrap();
        for s in [-0.5, 0.0, 0.7, 1.5, 3.0] {
            let cur = sobolev_norm(&f, s).unwrap();
            assert!(cur >= last);
            last = cur;
        }
    }

    #[test]
    fn maximal_of_constant_is_constant() {
        for dim in [1, 2] {
            let g = make_grid(dim, 32, 5.0).unwrap();
            let f = Field::from_space_fn(g, |_| Complex64::new(0.0, -1.5));
            let m = hl_maximal(&f).unwrap();
            for v in m.values() {
                assert_eq!(v.re, 1.5);
                assert_eq!(v.im, 0.0);
            }
        }
    }

    #[test]
    fn spike_decays_like_inverse_distance() {
        let g = make_grid(1, 256, 8.0).unwrap();
        let h = g.spacing();
        let mut f = Field::zeros(g, Side::Space);
        f.values_mut()[0] = Complex64::new(1.0 / h, 0.0);
        let m = hl_maximal(&f).unwrap();
        for i in 0..g.len() {
            let x = g.coord(i)[0].abs().min(g.side_length() - g.coord(i)[0].abs());
            if x >= 4.0 * h {
                let target = 1.0 / (2.0 * x);
                let got = m.values()[i].re;
                assert!(
                    got >= target / 2.0 && got <= target * 2.0,
                    "x={x}: Mf={got}, target={target}"
                );
            }
        }
    }

    #[test]
    fn maximal_dominates_and_is_homogeneous() {
        for dim in [1usize, 2] {
            let g = make_grid(dim, 32, 7.0).unwrap();
            let f = Field::random_band_limited(g, g.nyquist() * 0.7, 13).unwrap();
            let m = hl_maximal(&f).unwrap();
            for (mv, fv) in m.values().iter().zip(f.values()) {
                assert!(mv.re >= fv.norm() - 1e-15);
            }
            // doubling the field doubles the maximal function bitwise
            let mut f2 = f.clone();
            for v in f2.values_mut() {
                *v *= 2.0;
            }
            let m2 = hl_maximal(&f2).unwrap();
            for (a, b) in m2.values().iter().zip(m.values()) {
                assert_eq!(a.re, 2.0 * b.re);
            }
        }
    }

    #[test]
    fn maximal_is_sublinear() {
        let g = make_grid(1, 64, 9.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist(), 21).unwrap();
        let gfield = Field::random_band_limited(g, g.nyquist(), 22).unwrap();
        let mut sum = f.clone();
        for (s, v) in sum.values_mut().iter_mut().zip(gfield.values()) {
            *s += v;
        }
        let mf = hl_maximal(&f).unwrap();
        let mg = hl_maximal(&gfield).unwrap();
        let msum = hl_maximal(&sum).unwrap();
        for i in 0..g.len() {
            assert!(msum.values()[i].re <= mf.values()[i].re + mg.values()[i].re + 1e-12);
        }
    }

    #[test]
    fn maximal_l2_bound_stays_in_classical_window() {
        let g = make_grid(1, 64, 6.0).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..100 {
            let f = Field::random_band_limited(g, g.nyquist(), seed).unwrap();
            let m = hl_maximal(&f).unwrap();
            worst = worst.max(m.l2_norm() / f.l2_norm());
        }
        assert!(worst <= 4.0, "L2 operator ratio {worst} exceeds window");
        assert!(worst >= 1.0);
    }

    #[test]
    fn ratio_report_identity_and_errors() {
        let g = make_grid(1, 64, 6.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist(), 2).unwrap();
        let r = lp_ratio_report(&f, &f, LpExponent::Finite(2.0), &Region::All).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-14);
        let zero = Field::zeros(g, Side::Space);
        assert!(matches!(
            lp_ratio_report(&f, &zero, LpExponent::Finite(2.0), &Region::All),
            Err(Error::ZeroNorm)
        ));
        let g2 = make_grid(1, 64, 7.0).unwrap();
        let other = Field::zeros(g2, Side::Space);
        assert!(matches!(
            lp_ratio_report(&other, &f, LpExponent::Finite(1.0), &Region::All),
            Err(Error::GridMismatch)
        ));
    }
}
