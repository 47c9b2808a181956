//! Sampled complex fields and the discrete Fourier transform contract.
//!
//! Conventions: fhat(xi) = integral of f(x) e^{-i x.xi} dx, approximated by
//! h^dim times the raw DFT; the inverse carries the (2*pi)^{-dim} factor,
//! which lands on the grid as a 1/L^dim scale on the raw inverse DFT. With
//! these scalings forward followed by inverse is the identity to rounding,
//! and the discrete Parseval identity reads ||f||_2 = (2*pi)^{-dim/2} ||fhat||_2.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, Point, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Space,
    Frequency,
}

/// Complex samples on a grid, tagged with the side they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    side: Side,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Grid, side: Side, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "value buffer has {} entries, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, side, values })
    }

    pub fn zeros(grid: Grid, side: Side) -> Self {
        Field {
            grid,
            side,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Sample a function of the spatial coordinate.
    pub fn from_space_fn(grid: Grid, f: impl Fn(Point) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coord(i))).collect();
        Field {
            grid,
            side: Side::Space,
            values,
        }
    }

    /// Sample a function of the frequency coordinate.
    pub fn from_freq_fn(grid: Grid, f: impl Fn(Point) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.freq(i))).collect();
        Field {
            grid,
            side: Side::Frequency,
            values,
        }
    }

    /// Frequency-side field with i.i.d. complex Gaussian entries on the nodes
    /// selected by `filter`, zero elsewhere. Deterministic in `seed`.
    pub fn random_frequency(grid: Grid, filter: impl Fn(Point) -> bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (i, v) in values.iter_mut().enumerate() {
            if filter(grid.freq(i)) {
                let (re, im) = gaussian_pair(&mut rng);
                *v = Complex64::new(re, im);
            }
        }
        Field {
            grid,
            side: Side::Frequency,
            values,
        }
    }

    /// Space-side field whose spectrum is i.i.d. Gaussian on |xi| <= max_freq.
    pub fn random_band_limited(grid: Grid, max_freq: f64, seed: u64) -> Result<Self> {
        let spec = Self::random_frequency(grid, |xi| norm2(xi) <= max_freq, seed);
        spec.inverse_transform()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn expect_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::SideMismatch {
                expected: match side {
                    Side::Space => "space",
                    Side::Frequency => "frequency",
                },
            });
        }
        Ok(())
    }

    /// Discrete approximation of fhat(xi) = integral f e^{-i x.xi} dx.
    pub fn forward_transform(&self) -> Result<Field> {
        self.expect_side(Side::Space)?;
        let mut engine = FftEngine::new(self.grid);
        let mut values = self.values.clone();
        engine.forward(&mut values);
        Ok(Field {
            grid: self.grid,
            side: Side::Frequency,
            values,
        })
    }

    /// Exact inverse of `forward_transform`, including the (2*pi)^{-dim} factor.
    pub fn inverse_transform(&self) -> Result<Field> {
        self.expect_side(Side::Frequency)?;
        let mut engine = FftEngine::new(self.grid);
        let mut values = self.values.clone();
        engine.inverse(&mut values);
        Ok(Field {
            grid: self.grid,
            side: Side::Space,
            values,
        })
    }

    /// The field on the requested side, transforming if necessary.
    pub fn to_side(&self, side: Side) -> Result<Field> {
        if self.side == side {
            Ok(self.clone())
        } else {
            match side {
                Side::Frequency => self.forward_transform(),
                Side::Space => self.inverse_transform(),
            }
        }
    }

    /// L2 norm with the measure of the side the field lives on
    /// (h^dim on the space side, (2*pi/L)^dim on the frequency side).
    pub fn l2_norm(&self) -> f64 {
        let cell = match self.side {
            Side::Space => self.grid.spacing(),
            Side::Frequency => self.grid.freq_spacing(),
        };
        let measure = cell.powi(self.grid.dim() as i32);
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * measure).sqrt()
    }

    /// f_R(z) = f(R z) on a grid of side L/R. For power-of-two R both lattices
    /// coincide node for node, so this is an exact relabeling of the samples.
    pub fn dilate(&self, factor: f64) -> Result<Field> {
        self.expect_side(Side::Space)?;
        let k = power_of_two_exponent(factor)?;
        if k != 0 && factor > 1.0 {
            // shrinking the box: reject data carrying frequencies the spec's
            // band-limit precondition excludes
            let limit = self.grid.nyquist() / factor;
            let spec = self.forward_transform()?;
            let mut total = 0.0;
            let mut high = 0.0;
            for (i, v) in spec.values.iter().enumerate() {
                let e = v.norm_sqr();
                total += e;
                if norm2(spec.grid.freq(i)) > limit * (1.0 + 1e-12) {
                    high += e;
                }
            }
            if total > 0.0 && high > 1e-12 * total {
                return Err(Error::BandLimitViolation {
                    limit,
                    energy: high / total,
                });
            }
        }
        let grid = crate::grid::make_grid(
            self.grid.dim(),
            self.grid.points_per_axis(),
            self.grid.side_length() / factor,
        )?;
        Ok(Field {
            grid,
            side: Side::Space,
            values: self.values.clone(),
        })
    }

    /// tau_h f(x) = f(x + h) for an on-lattice offset; a cyclic index shift.
    pub fn translate(&self, offset: Point) -> Result<Field> {
        self.expect_side(Side::Space)?;
        let h = self.grid.spacing();
        let n = self.grid.points_per_axis();
        let mut shift = [0usize; 2];
        for k in 0..self.grid.dim() {
            let steps = offset[k] / h;
            let rounded = steps.round();
            if (steps - rounded).abs() > 1e-9 {
                return Err(Error::OffLatticeShift(offset[k]));
            }
            shift[k] = (rounded as i64).rem_euclid(n as i64) as usize;
        }
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        match self.grid.dim() {
            1 => {
                for (i, v) in values.iter_mut().enumerate() {
                    *v = self.values[(i + shift[0]) % n];
                }
            }
            _ => {
                for i0 in 0..n {
                    let src0 = (i0 + shift[0]) % n;
                    for i1 in 0..n {
                        let src1 = (i1 + shift[1]) % n;
                        values[i0 * n + i1] = self.values[src0 * n + src1];
                    }
                }
            }
        }
        Ok(Field {
            grid: self.grid,
            side: Side::Space,
            values,
        })
    }

    /// (sum_{x in region} |f(x)|^p h^dim)^{1/p}, or the sup for p = infinity.
    pub fn restrict_norm(&self, region: &Region, p: LpExponent) -> Result<f64> {
        self.expect_side(Side::Space)?;
        region.check_fits(&self.grid)?;
        let measure = self.grid.spacing().powi(self.grid.dim() as i32);
        match p {
            LpExponent::Infinity => {
                let mut sup = 0.0f64;
                for (i, v) in self.values.iter().enumerate() {
                    if region.contains(&self.grid, self.grid.coord(i)) {
                        sup = sup.max(v.norm());
                    }
                }
                Ok(sup)
            }
            LpExponent::Finite(p) => {
                if p < 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "Lp exponent must be >= 1, got {p}"
                    )));
                }
                let mut acc = 0.0;
                for (i, v) in self.values.iter().enumerate() {
                    if region.contains(&self.grid, self.grid.coord(i)) {
                        acc += v.norm().powf(p) * measure;
                    }
                }
                Ok(acc.powf(1.0 / p))
            }
        }
    }

    /// L2 norm over a region; the common case of `restrict_norm`.
    pub fn l2_region(&self, region: &Region) -> Result<f64> {
        self.expect_side(Side::Space)?;
        region.check_fits(&self.grid)?;
        let measure = self.grid.spacing().powi(self.grid.dim() as i32);
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            if region.contains(&self.grid, self.grid.coord(i)) {
                acc += v.norm_sqr();
            }
        }
        Ok((acc * measure).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

/// |p| for a point, using only the live dimensions (trailing zeros are inert).
#[inline]
pub fn norm2(p: Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn power_of_two_exponent(factor: f64) -> Result<i32> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::BadDilationFactor(factor));
    }
    let k = factor.log2().round() as i32;
    if (2.0f64).powi(k) != factor {
        return Err(Error::BadDilationFactor(factor));
    }
    Ok(k)
}

/// Two independent standard normals via Box-Muller.
pub fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (crate::grid::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Planned FFTs for one grid size, reusable across many transforms.
pub struct FftEngine {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transpose_buf: Vec<Complex64>,
}

impl FftEngine {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points_per_axis();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let transpose_buf = if grid.dim() == 2 {
            vec![Complex64::new(0.0, 0.0); grid.len()]
        } else {
            Vec::new()
        };
        FftEngine {
            grid,
            fwd,
            inv,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transpose_buf,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// In-place scaled forward transform (space values -> fhat values).
    pub fn forward(&mut self, values: &mut [Complex64]) {
        self.raw(values, true);
        let scale = self.grid.spacing().powi(self.grid.dim() as i32);
        for v in values.iter_mut() {
            *v *= scale;
        }
    }

    /// In-place scaled inverse transform (fhat values -> space values).
    pub fn inverse(&mut self, values: &mut [Complex64]) {
        self.raw(values, false);
        let scale = self.grid.side_length().powi(-(self.grid.dim() as i32));
        for v in values.iter_mut() {
            *v *= scale;
        }
    }

    fn raw(&mut self, values: &mut [Complex64], forward: bool) {
        assert_eq!(values.len(), self.grid.len());
        let plan = if forward { &self.fwd } else { &self.inv };
        match self.grid.dim() {
            1 => plan.process_with_scratch(values, &mut self.scratch),
            _ => {
                let n = self.grid.points_per_axis();
                plan.process_with_scratch(values, &mut self.scratch);
                transpose(values, &mut self.transpose_buf, n);
                plan.process_with_scratch(&mut self.transpose_buf, &mut self.scratch);
                transpose(&self.transpose_buf, values, n);
            }
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, TAU};
    use approx::assert_relative_eq;

    fn rel_err(a: &Field, b: &Field) -> f64 {
        let diff: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        let denom: f64 = b.values().iter().map(|v| v.norm_sqr()).sum();
        (diff / denom).sqrt()
    }

    #[test]
    fn constant_field_transforms_to_dc_mass() {
        let g = make_grid(1, 16, TAU).unwrap();
        let f = Field::from_space_fn(g, |_| Complex64::new(1.0, 0.0));
        let spec = f.forward_transform().unwrap();
        assert_relative_eq!(spec.values()[0].re, TAU, max_relative = 1e-12);
        for v in &spec.values()[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn pure_tone_lands_in_a_single_bin() {
        let g = make_grid(1, 16, TAU).unwrap();
        let f = Field::from_space_fn(g, |x| Complex64::new(0.0, x[0]).exp());
        let spec = f.forward_transform().unwrap();
        for (i, v) in spec.values().iter().enumerate() {
            if g.freq(i)[0] == 1.0 {
                assert_relative_eq!(v.re, TAU, max_relative = 1e-12);
            } else {
                assert!(v.norm() < 1e-10, "leakage at bin {i}: {v}");
            }
        }
    }

    #[test]
    fn gaussian_matches_its_analytic_transform() {
        let g = make_grid(1, 4096, 64.0 * std::f64::consts::PI).unwrap();
        let f = Field::from_space_fn(g, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let spec = f.forward_transform().unwrap();
        let scale = TAU.sqrt();
        for i in 0..g.len() {
            let xi = g.freq(i)[0];
            if xi.abs() <= 8.0 {
                let expected = scale * (-xi * xi / 2.0).exp();
                assert_relative_eq!(spec.values()[i].re, expected, max_relative = 1e-8);
                assert!(spec.values()[i].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let g = make_grid(2, 32, 13.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist() * 0.9, 17).unwrap();
        let back = f.forward_transform().unwrap().inverse_transform().unwrap();
        assert!(rel_err(&back, &f) < 1e-12);
    }

    #[test]
    fn inverse_of_dc_bin_is_constant() {
        let g = make_grid(1, 16, TAU).unwrap();
        let mut spec = Field::zeros(g, Side::Frequency);
        spec.values_mut()[0] = Complex64::new(TAU, 0.0);
        let f = spec.inverse_transform().unwrap();
        for v in f.values() {
            assert_relative_eq!(v.re, 1.0, max_relative = 1e-12);
            assert!(v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn parseval_links_the_two_sides() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist(), 3).unwrap();
        let spec = f.forward_transform().unwrap();
        let lhs = f.l2_norm();
        let rhs = spec.l2_norm() / TAU.sqrt();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn dilation_relabels_and_scales_norms() {
        let g = make_grid(1, 64, 16.0).unwrap();
        let f = Field::random_band_limited(g, 2.0, 5).unwrap();
        let fr = f.dilate(2.0).unwrap();
        assert_eq!(fr.grid().side_length(), 8.0);
        assert_relative_eq!(fr.l2_norm(), f.l2_norm() / 2.0f64.sqrt(), max_relative = 1e-10);
        // the unit dilation is the identity
        let f1 = f.dilate(1.0).unwrap();
        assert_eq!(f1, f);
        assert!(matches!(f.dilate(3.0), Err(Error::BadDilationFactor(_))));
    }

    #[test]
    fn dilation_rejects_out_of_band_data() {
        let g = make_grid(1, 64, 16.0).unwrap();
        // content right at Nyquist violates the band limit for R = 4
        let f = Field::random_band_limited(g, g.nyquist(), 7).unwrap();
        assert!(matches!(
            f.dilate(4.0),
            Err(Error::BandLimitViolation { .. })
        ));
    }

    #[test]
    fn translate_is_an_exact_cyclic_permutation() {
        let g = make_grid(1, 32, 8.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist(), 11).unwrap();
        let h = g.spacing();
        let shifted = f.translate([h, 0.0]).unwrap();
        // delta check: value at node x comes from node x + h
        for i in 0..31 {
            assert_eq!(shifted.values()[i], f.values()[i + 1]);
        }
        assert_eq!(shifted.values()[31], f.values()[0]);
        // the sample multiset is preserved bitwise
        let mut a: Vec<f64> = f.values().iter().map(|v| v.norm_sqr()).collect();
        let mut b: Vec<f64> = shifted.values().iter().map(|v| v.norm_sqr()).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        assert!(matches!(
            f.translate([h / 2.0, 0.0]),
            Err(Error::OffLatticeShift(_))
        ));
        let zero = f.translate([0.0, 0.0]).unwrap();
        assert_eq!(zero, f);
    }

    #[test]
    fn restricted_norms_match_hand_values() {
        let g = make_grid(1, 4096, 16.0).unwrap();
        let one = Field::from_space_fn(g, |_| Complex64::new(1.0, 0.0));
        let ball = Region::unit_ball();
        let v = one.restrict_norm(&ball, LpExponent::Finite(2.0)).unwrap();
        assert!((v - 2.0f64.sqrt()).abs() < 2.0 * g.spacing());
        let tone = Field::from_space_fn(g, |x| Complex64::new(0.0, x[0]).exp());
        let sup = tone.restrict_norm(&Region::All, LpExponent::Infinity).unwrap();
        assert_relative_eq!(sup, 1.0, max_relative = 1e-12);
        assert!(matches!(
            one.restrict_norm(&Region::ball([0.0, 0.0], 9.0), LpExponent::Finite(2.0)),
            Err(Error::RegionTooLarge { .. })
        ));
    }

    #[test]
    fn two_dim_round_trip_and_parseval() {
        let g = make_grid(2, 32, 9.0).unwrap();
        let f = Field::random_band_limited(g, g.nyquist() * 0.8, 23).unwrap();
        let spec = f.forward_transform().unwrap();
        assert_relative_eq!(f.l2_norm(), spec.l2_norm() / TAU, max_relative = 1e-10);
        let back = spec.inverse_transform().unwrap();
        assert!(rel_err(&back, &f) < 1e-12);
    }
}
