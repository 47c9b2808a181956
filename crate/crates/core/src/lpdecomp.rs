//! Dyadic partition of unity and Littlewood-Paley projections.
//!
//! The radial cutoff chi is built from the classical exp(-1/t) gluing, so
//! every value is an explicit closed form: chi = 1 inside the unit ball,
//! 0 outside radius 2, and a smooth monotone blend in between. lambda is
//! the dyadic difference chi(xi) - chi(2 xi), psi_k its dilates, and the
//! theta trio covers a single annulus with one dyadic neighbor each side.

use crate::error::{Error, Result};
use crate::field::{norm2, Field, Side};
use crate::grid::Point;

fn h(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth radial cutoff: 1 on B(0,1), 0 outside B(0,2).
pub fn chi(xi: Point) -> f64 {
    chi_radial(norm2(xi))
}

fn chi_radial(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let up = h(2.0 - r);
        up / (up + h(r - 1.0))
    }
}

/// lambda(xi) = chi(xi) - chi(2 xi), supported in {1/2 <= |xi| <= 2}.
pub fn lambda_fn(xi: Point) -> f64 {
    let r = norm2(xi);
    chi_radial(r) - chi_radial(2.0 * r)
}

/// psi_0 = chi and psi_k(xi) = lambda(2^{-k} xi) for k >= 1, so that the
/// family telescopes to 1 on any ball once enough terms are summed.
pub fn psi_k(k: i64, xi: Point) -> Result<f64> {
    if k < 0 {
        return Err(Error::InvalidParameter(format!(
            "dyadic index must be >= 0, got {k}"
        )));
    }
    if k == 0 {
        return Ok(chi(xi));
    }
    let scale = (2.0f64).powi(-(k as i32));
    Ok(lambda_fn([xi[0] * scale, xi[1] * scale]))
}

/// Frequency multiplier by psi_k. Accepts either side; returns the side the
/// input lived on.
pub fn project(f: &Field, k: i64) -> Result<Field> {
    let mut spec = f.to_side(Side::Frequency)?;
    let grid = *spec.grid();
    for (i, v) in spec.values_mut().iter_mut().enumerate() {
        *v *= psi_k(k, grid.freq(i))?;
    }
    match f.side() {
        Side::Frequency => Ok(spec),
        Side::Space => spec.inverse_transform(),
    }
}

/// Smallest K with 2^{K-1} at or above the grid Nyquist frequency, so that
/// psi_0 + ... + psi_K = 1 on every representable frequency.
pub fn truncation_index(nyquist: f64) -> i64 {
    let mut k = 1;
    while (2.0f64).powi(k as i32 - 1) < nyquist {
        k += 1;
    }
    k
}

/// The annulus cover theta = theta1 + theta2 + theta3 from the rescaling
/// argument: lambda at scales 2, 1, 1/2. theta is 1 on {1/2 <= |xi| <= 2}
/// and vanishes outside {1/4 < |xi| < 4}.
pub struct ThetaSplit;

impl ThetaSplit {
    pub fn theta1(xi: Point) -> f64 {
        lambda_fn([2.0 * xi[0], 2.0 * xi[1]])
    }

    pub fn theta2(xi: Point) -> f64 {
        lambda_fn(xi)
    }

    pub fn theta3(xi: Point) -> f64 {
        lambda_fn([xi[0] / 2.0, xi[1] / 2.0])
    }

    pub fn theta(xi: Point) -> f64 {
        Self::theta1(xi) + Self::theta2(xi) + Self::theta3(xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_plateau_and_support() {
        assert_eq!(chi([0.5, 0.0]), 1.0);
        assert_eq!(chi([0.0, 0.0]), 1.0);
        assert_eq!(chi([2.5, 0.0]), 0.0);
        assert_eq!(chi([2.0, 0.0]), 0.0);
        assert_relative_eq!(chi([1.5, 0.0]), 0.5, max_relative = 1e-15);
        // radial: same value at same radius in 2d
        let r = 1.3;
        assert_eq!(chi([r, 0.0]), chi([0.0, r]));
        let v = chi([1.2, 0.0]);
        assert!(v > 0.0 && v < 1.0);
        // monotone on the blend interval
        assert!(chi([1.2, 0.0]) > chi([1.7, 0.0]));
    }

    #[test]
    fn lambda_support_and_peak() {
        assert_eq!(lambda_fn([1.0, 0.0]), 1.0);
        assert_eq!(lambda_fn([0.25, 0.0]), 0.0);
        assert_eq!(lambda_fn([3.0, 0.0]), 0.0);
        assert_eq!(lambda_fn([0.5, 0.0]), 0.0);
        assert!(lambda_fn([0.7, 0.0]) > 0.0);
        assert!(lambda_fn([1.9, 0.0]) > 0.0);
    }

    #[test]
    fn psi_values_and_telescoping() {
        assert_eq!(psi_k(0, [0.5, 0.0]).unwrap(), 1.0);
        assert_eq!(psi_k(3, [8.0, 0.0]).unwrap(), 1.0);
        assert!(psi_k(-1, [1.0, 0.0]).is_err());
        let xi = [10.0, 0.0];
        let total: f64 = (0..=6).map(|k| psi_k(k, xi).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_sums_to_one_on_grid() {
        let g = make_grid(2, 64, 20.0).unwrap();
        let big_k = truncation_index(g.nyquist());
        let bound = (2.0f64).powi(big_k as i32 - 1);
        for i in 0..g.len() {
            let xi = g.freq(i);
            if norm2(xi) <= bound {
                let total: f64 = (0..=big_k).map(|k| psi_k(k, xi).unwrap()).sum();
                assert!(
                    (total - 1.0).abs() < 1e-14,
                    "partition defect {} at |xi|={}",
                    (total - 1.0).abs(),
                    norm2(xi)
                );
            }
        }
    }

    #[test]
    fn separated_indices_have_disjoint_support() {
        let g = make_grid(1, 256, 40.0).unwrap();
        for i in 0..g.len() {
            let xi = g.freq(i);
            for k in 0..=5i64 {
                for j in 0..=5i64 {
                    if (k - j).abs() > 1 {
                        let prod = psi_k(k, xi).unwrap() * psi_k(j, xi).unwrap();
                        assert_eq!(prod, 0.0, "overlap at k={k}, j={j}, xi={:?}", xi);
                    }
                }
            }
        }
    }

    #[test]
    fn projection_reconstructs_band_limited_fields() {
        let g = make_grid(1, 256, 32.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist() * 0.9, 31).unwrap();
        let big_k = truncation_index(g.nyquist());
        let mut sum = Field::zeros(g, Side::Space);
        for k in 0..=big_k {
            let pk = project(&f, k).unwrap();
            for (s, v) in sum.values_mut().iter_mut().zip(pk.values()) {
                *s += v;
            }
        }
        let num: f64 = sum
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-12);
    }

    #[test]
    fn projection_respects_disjoint_supports() {
        let g = make_grid(1, 64, crate::grid::TAU * 4.0).unwrap();
        // pure tone at |xi| = 4 lies in supp psi_2 and psi_3 only
        let tone = Field::from_space_fn(g, |x| num_complex::Complex64::new(0.0, 4.0 * x[0]).exp());
        let p0 = project(&tone, 0).unwrap();
        assert!(p0.values().iter().map(|v| v.norm()).sum::<f64>() < 1e-12);
        // neighbors reconstruct data supported in A(4)
        let f = Field::random_frequency(g, |xi| (2.0..=8.0).contains(&norm2(xi)), 5)
            .inverse_transform()
            .unwrap();
        let mut sum = Field::zeros(g, Side::Space);
        for k in [1, 2, 3] {
            let pk = project(&f, k).unwrap();
            for (s, v) in sum.values_mut().iter_mut().zip(pk.values()) {
                *s += v;
            }
        }
        let num: f64 = sum
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-12);
    }

    #[test]
    fn almost_orthogonality_with_overlap_factor() {
        let g = make_grid(1, 128, 16.0).unwrap();
        let big_k = truncation_index(g.nyquist());
        for seed in 0..100 {
            let f = Field::random_band_limited(g, g.nyquist() * 0.9, seed).unwrap();
            let total = f.l2_norm().powi(2);
            let mut pieces = 0.0;
            for k in 0..=big_k {
                pieces += project(&f, k).unwrap().l2_norm().powi(2);
            }
            assert!(total <= 3.0 * pieces + 1e-12, "seed {seed}");
            assert!(pieces <= 3.0 * total + 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn theta_covers_the_unit_annulus() {
        assert_relative_eq!(ThetaSplit::theta([1.0, 0.0]), 1.0, max_relative = 1e-15);
        assert_eq!(ThetaSplit::theta([5.0, 0.0]), 0.0);
        assert_eq!(ThetaSplit::theta1([1.5, 0.0]), 0.0);
        // identically 1 across the closed annulus, 0 outside the open cover
        for i in 0..=300 {
            let r = 0.5 + 1.5 * (i as f64) / 300.0;
            assert!(
                (ThetaSplit::theta([r, 0.0]) - 1.0).abs() < 1e-15,
                "theta != 1 at r={r}"
            );
        }
        for r in [0.2, 0.25, 4.0, 4.5] {
            assert_eq!(ThetaSplit::theta([r, 0.0]), 0.0, "theta != 0 at r={r}");
        }
    }
}
