//! Application of the dispersive group e^{it phi(D)}, its linearized
//! variant with a per-point time field, the discrete maximal function over a
//! time grid, the cutoff and weighted variants, and direct kernel
//! quadratures for decay experiments.
//!
//! Every time slice, whether requested through `apply_t`, a linearized
//! gather, or the maximal sweep, is produced by the same multiplier
//! construction in `PhasePropagator::slice_into`. This makes the documented
//! exact identities (constant time field = fixed-time application, sup field
//! = gathered argmax slice) hold bitwise instead of merely to rounding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, FftEngine, Side};
use crate::fit::least_squares;
use crate::grid::{Grid, Point, Region, TAU};
use crate::lpdecomp::chi;
use crate::phase::{derived_constants, PhaseFn};
use crate::quad::{adaptive_integral, adaptive_integral_2d, panel_integral};

/// Uniform nodes t_j = j * t_max / count for j = 1..count. Index 0 is the
/// time 0, which gathers accept (identity multiplier) even though the sup
/// ranges over the open interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    count: usize,
    t_max: f64,
}

impl TimeGrid {
    pub fn new(count: usize, t_max: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter(
                "time grid needs at least one node".into(),
            ));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time horizon must be positive, got {t_max}"
            )));
        }
        Ok(TimeGrid { count, t_max })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.count as f64
    }

    /// Node j; j = 0 gives time 0.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    /// The positive nodes t_1 .. t_Nt, in order.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.count).map(|j| self.node(j))
    }

    /// Index of a value that must already sit on a node (0 allowed).
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let steps = t / self.dt();
        let j = steps.round();
        if (steps - j).abs() > 1e-6 || j < 0.0 || j > self.count as f64 {
            return Err(Error::TimeOffNodes(t));
        }
        Ok(j as usize)
    }

    /// Same horizon, twice the nodes; every old node is kept bitwise.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            count: self.count * 2,
            t_max: self.t_max,
        }
    }
}

/// A measurable time per grid point, each value in [0, t_max].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeField {
    grid: Grid,
    t_max: f64,
    values: Vec<f64>,
}

impl TimeField {
    pub fn new(grid: Grid, t_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "time field has {} entries, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time horizon must be positive, got {t_max}"
            )));
        }
        for &v in &values {
            if !(0.0..=t_max).contains(&v) {
                return Err(Error::TimeOutOfRange { value: v, t_max });
            }
        }
        Ok(TimeField {
            grid,
            t_max,
            values,
        })
    }

    pub fn constant(grid: Grid, t: f64, t_max: f64) -> Result<Self> {
        Self::new(grid, t_max, vec![t; grid.len()])
    }

    /// Build from per-point node indices on a time grid.
    pub fn from_node_indices(grid: Grid, tgrid: &TimeGrid, indices: &[usize]) -> Result<Self> {
        let values = indices.iter().map(|&j| tgrid.node(j)).collect();
        Self::new(grid, tgrid.t_max(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Pointwise max of |T_{t_j} f| over the nodes, with the maximizing node
/// per point. sup_field(x) always equals the gathered slice at
/// argmax_tfield(x) bitwise.
#[derive(Debug, Clone)]
pub struct MaximalResult {
    pub sup_field: Field,
    pub argmax_tfield: TimeField,
    pub argmax_indices: Vec<usize>,
}

/// FFT plans, phase samples, and one loaded spectrum; reused across many
/// time slices so the planner runs once per grid.
pub struct PhasePropagator {
    grid: Grid,
    engine: FftEngine,
    phase_vals: Vec<f64>,
    extra: Option<Vec<f64>>,
    fhat: Vec<Complex64>,
}

impl PhasePropagator {
    pub fn new(grid: Grid, phase: &PhaseFn) -> Result<Self> {
        Self::build(grid, phase, None)
    }

    /// Like `new` but with a fixed real frequency multiplier applied to
    /// every slice (a cutoff or a Sobolev-type weight).
    pub fn with_extra(grid: Grid, phase: &PhaseFn, extra: Vec<f64>) -> Result<Self> {
        if extra.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "extra multiplier has {} entries, grid has {}",
                extra.len(),
                grid.len()
            )));
        }
        Self::build(grid, phase, Some(extra))
    }

    fn build(grid: Grid, phase: &PhaseFn, extra: Option<Vec<f64>>) -> Result<Self> {
        if phase.dim() != grid.dim() {
            return Err(Error::BadDimension(phase.dim()));
        }
        let mut phase_vals = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let v = phase.eval(grid.freq(i));
            if !v.is_finite() {
                return Err(Error::PhaseCondition(format!(
                    "phase evaluated to {v} at xi = {:?}",
                    grid.freq(i)
                )));
            }
            phase_vals.push(v);
        }
        Ok(PhasePropagator {
            grid,
            engine: FftEngine::new(grid),
            phase_vals,
            extra,
            fhat: vec![Complex64::new(0.0, 0.0); grid.len()],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Load the spectrum of f (transforming once if f is on the space side).
    pub fn load(&mut self, f: &Field) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        match f.side() {
            Side::Frequency => self.fhat.copy_from_slice(f.values()),
            Side::Space => {
                self.fhat.copy_from_slice(f.values());
                self.engine.forward(&mut self.fhat);
            }
        }
        Ok(())
    }

    /// Write the space-side samples of the slice at time t into `out`.
    pub fn slice_into(&mut self, t: f64, out: &mut [Complex64]) {
        match &self.extra {
            None => {
                for ((o, &f), &p) in out.iter_mut().zip(&self.fhat).zip(&self.phase_vals) {
                    let (s, c) = (t * p).sin_cos();
                    *o = f * Complex64::new(c, s);
                }
            }
            Some(extra) => {
                for (((o, &f), &p), &e) in out
                    .iter_mut()
                    .zip(&self.fhat)
                    .zip(&self.phase_vals)
                    .zip(extra)
                {
                    let (s, c) = (t * p).sin_cos();
                    *o = f * Complex64::new(c, s) * e;
                }
            }
        }
        self.engine.inverse(out);
    }

    pub fn slice_field(&mut self, t: f64) -> Field {
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.slice_into(t, &mut out);
        Field::new(self.grid, Side::Space, out).expect("buffer sized to grid")
    }
}

/// T_t f: the frequency multiplier e^{i t phi(xi)} followed by the inverse
/// transform. Unitary on L2 for every t.
pub fn apply_t(f: &Field, t: f64, phase: &PhaseFn) -> Result<Field> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite, got {t}")));
    }
    let mut prop = PhasePropagator::new(*f.grid(), phase)?;
    prop.load(f)?;
    Ok(prop.slice_field(t))
}

fn gather(
    f: &Field,
    tf: &TimeField,
    tgrid: &TimeGrid,
    phase: &PhaseFn,
    extra: Option<Vec<f64>>,
) -> Result<Field> {
    if f.grid() != tf.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *f.grid();
    let mut indices = Vec::with_capacity(grid.len());
    for &t in tf.values() {
        indices.push(tgrid.node_index(t)?);
    }
    let mut present = vec![false; tgrid.count() + 1];
    for &j in &indices {
        present[j] = true;
    }
    let mut prop = match extra {
        None => PhasePropagator::new(grid, phase)?,
        Some(e) => PhasePropagator::with_extra(grid, phase, e)?,
    };
    prop.load(f)?;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (j, _) in present.iter().enumerate().filter(|(_, p)| **p) {
        prop.slice_into(tgrid.node(j), &mut buf);
        for (x, &jx) in indices.iter().enumerate() {
            if jx == j {
                out[x] = buf[x];
            }
        }
    }
    Field::new(grid, Side::Space, out)
}

/// T_{t(x)} f: one slice per distinct node value in the time field,
/// gathered pointwise. Cost is one FFT per distinct node, never N_t * N
/// direct sums.
pub fn apply_t_linearized(
    f: &Field,
    tf: &TimeField,
    tgrid: &TimeGrid,
    phase: &PhaseFn,
) -> Result<Field> {
    gather(f, tf, tgrid, phase, None)
}

/// The low-frequency operator: same gather with the cutoff chi(xi) riding
/// the multiplier.
pub fn apply_r_lowfreq(
    f: &Field,
    tf: &TimeField,
    tgrid: &TimeGrid,
    phase: &PhaseFn,
) -> Result<Field> {
    apply_r_lowfreq_with(f, tf, tgrid, phase, chi)
}

/// Low-frequency gather with a caller-supplied cutoff profile.
pub fn apply_r_lowfreq_with(
    f: &Field,
    tf: &TimeField,
    tgrid: &TimeGrid,
    phase: &PhaseFn,
    cutoff: impl Fn(Point) -> f64,
) -> Result<Field> {
    let grid = f.grid();
    let extra: Vec<f64> = (0..grid.len()).map(|i| cutoff(grid.freq(i))).collect();
    gather(f, tf, tgrid, phase, Some(extra))
}

/// The weighted gather: multiplier `<xi>^{-exponent} e^{i t(x) phi(xi)}`.
pub fn apply_t_weighted(
    f: &Field,
    tf: &TimeField,
    tgrid: &TimeGrid,
    phase: &PhaseFn,
    exponent: f64,
) -> Result<Field> {
    if exponent < 0.0 || exponent.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "weight exponent must be >= 0, got {exponent}"
        )));
    }
    if exponent == 0.0 {
        return apply_t_linearized(f, tf, tgrid, phase);
    }
    let grid = f.grid();
    let extra: Vec<f64> = (0..grid.len())
        .map(|i| {
            let xi = grid.freq(i);
            (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(-exponent / 2.0)
        })
        .collect();
    gather(f, tf, tgrid, phase, Some(extra))
}

/// Pointwise max of |T_{t_j} f| over the positive nodes, with argmax. Ties
/// keep the smallest node index.
pub fn maximal_function(f: &Field, tgrid: &TimeGrid, phase: &PhaseFn) -> Result<MaximalResult> {
    let grid = *f.grid();
    let mut prop = PhasePropagator::new(grid, phase)?;
    prop.load(f)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut sup = vec![0.0f64; grid.len()];
    let mut argmax = vec![0usize; grid.len()];
    for j in 1..=tgrid.count() {
        prop.slice_into(tgrid.node(j), &mut buf);
        if j == 1 {
            for (x, v) in buf.iter().enumerate() {
                sup[x] = v.norm();
                argmax[x] = 1;
            }
        } else {
            for (x, v) in buf.iter().enumerate() {
                let a = v.norm();
                if a > sup[x] {
                    sup[x] = a;
                    argmax[x] = j;
                }
            }
        }
    }
    let sup_field = Field::new(
        grid,
        Side::Space,
        sup.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )?;
    let argmax_tfield = TimeField::from_node_indices(grid, tgrid, &argmax)?;
    Ok(MaximalResult {
        sup_field,
        argmax_tfield,
        argmax_indices: argmax,
    })
}

/// K(z) = (2 pi)^{-dim} * integral of cutoff(xi) e^{i (z.xi + t phi(xi))}
/// over the cutoff's support in B(0,2), by adaptive panel quadrature.
/// In dimension 1 the panels split at xi = 0, where phases like |xi| kink.
pub fn kernel_quadrature(
    x_minus_y: Point,
    t: f64,
    phase: &PhaseFn,
    cutoff: impl Fn(Point) -> f64,
    quad_points: usize,
) -> Result<Complex64> {
    let initial_panels = (quad_points / 16).max(4);
    let max_panels = 1usize << 18;
    let abs_tol = 1e-13;
    match phase.dim() {
        1 => {
            let z = x_minus_y[0];
            let f = |xi: f64| {
                let p: Point = [xi, 0.0];
                let amp = cutoff(p);
                if amp == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let theta = z * xi + t * phase.eval(p);
                let (s, c) = theta.sin_cos();
                Complex64::new(c * amp, s * amp)
            };
            let left = adaptive_integral(&f, -2.0, 0.0, initial_panels, abs_tol, max_panels)?;
            let right = adaptive_integral(&f, 0.0, 2.0, initial_panels, abs_tol, max_panels)?;
            Ok((left + right) / TAU)
        }
        _ => {
            let f = |x0: f64, x1: f64| {
                let p: Point = [x0, x1];
                let amp = cutoff(p);
                if amp == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let theta = x_minus_y[0] * x0 + x_minus_y[1] * x1 + t * phase.eval(p);
                let (s, c) = theta.sin_cos();
                Complex64::new(c * amp, s * amp)
            };
            let v = adaptive_integral_2d(&f, -2.0, 2.0, initial_panels, abs_tol, max_panels)?;
            Ok(v / (TAU * TAU))
        }
    }
}

/// A smooth compactly supported amplitude on the line.
pub struct BumpSpec<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub support: (f64, f64),
}

/// A one-parameter family of phases Phi(param, xi) with its xi-derivative.
pub struct PhaseFamily<'a> {
    pub phi: &'a dyn Fn(f64, f64) -> f64,
    pub dphi: &'a dyn Fn(f64, f64) -> f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DecayPoint {
    pub param: f64,
    pub integral_abs: f64,
    pub min_grad: f64,
    /// integration-by-parts reference: sum over orders <= k of
    /// integral |d^order F| * |dPhi|^{-k}, with unit constant
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub k: usize,
    pub points: Vec<DecayPoint>,
    /// exponent e in |integral| ~ min_grad^{-e}, fitted over the points
    pub fitted_exponent: Option<f64>,
}

/// Measures |integral of F e^{i Phi}| against the non-stationary-phase
/// bound for each parameter, and fits the decay exponent in min |dPhi|.
pub fn nonstationary_decay_probe(
    bump: &BumpSpec,
    family: &PhaseFamily,
    k: usize,
    params: &[f64],
) -> Result<DecayReport> {
    if params.is_empty() {
        return Err(Error::InvalidParameter("no probe parameters given".into()));
    }
    if k > 6 {
        return Err(Error::InvalidParameter(format!(
            "finite differences cap the derivative order at 6, got {k}"
        )));
    }
    let (a, b) = bump.support;
    let mut points = Vec::with_capacity(params.len());
    for &p in params {
        let mut min_grad = f64::INFINITY;
        let samples = 4096;
        for i in 0..=samples {
            let xi = a + (b - a) * i as f64 / samples as f64;
            min_grad = min_grad.min((family.dphi)(p, xi).abs());
        }
        if min_grad <= 1e-12 {
            return Err(Error::VanishingGradient(min_grad));
        }
        let integrand = |xi: f64| {
            let amp = (bump.f)(xi);
            let theta = (family.phi)(p, xi);
            let (s, c) = theta.sin_cos();
            Complex64::new(c * amp, s * amp)
        };
        let integral = adaptive_integral(&integrand, a, b, 8, 1e-13, 1 << 18)?;
        let step = (b - a) * 1e-3;
        let mut bound = 0.0;
        for order in 0..=k {
            let deriv_abs = |xi: f64| {
                let d = fd_derivative(bump.f, xi, order, step).abs();
                let g = (family.dphi)(p, xi).abs().max(min_grad);
                Complex64::new(d * g.powi(-(k as i32)), 0.0)
            };
            bound += panel_integral(&deriv_abs, a, b, 64).re;
        }
        let integral_abs = integral.norm();
        points.push(DecayPoint {
            param: p,
            integral_abs,
            min_grad,
            bound,
            ratio: if bound > 0.0 {
                integral_abs / bound
            } else {
                f64::INFINITY
            },
        });
    }
    let xs: Vec<f64> = points.iter().map(|pt| pt.min_grad.ln()).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|pt| pt.integral_abs.max(f64::MIN_POSITIVE).ln())
        .collect();
    let fitted_exponent = least_squares(&xs, &ys).map(|(slope, _)| -slope);
    Ok(DecayReport {
        k,
        points,
        fitted_exponent,
    })
}

/// |integral of amplitude * e^{i phase}| over the support, for one-off
/// oscillatory measurements such as the far-field kernel probe.
pub fn oscillatory_integral(
    amplitude: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    phase: &dyn Fn(f64) -> f64,
) -> Result<Complex64> {
    let f = |xi: f64| {
        let amp = amplitude(xi);
        let theta = phase(xi);
        let (s, c) = theta.sin_cos();
        Complex64::new(c * amp, s * amp)
    };
    adaptive_integral(&f, support.0, support.1, 8, 1e-13, 1 << 18)
}

fn fd_derivative(f: &dyn Fn(f64) -> f64, x: f64, order: usize, step: f64) -> f64 {
    if order == 0 {
        return f(x);
    }
    (fd_derivative(f, x + step, order - 1, step) - fd_derivative(f, x - step, order - 1, step))
        / (2.0 * step)
}

/// Group-velocity bound on the torus side needed so wave packets started in
/// the data region cannot wrap around within the horizon: data diameter
/// plus twice the maximal transport distance M (2 R)^{a-1} t_max.
pub fn required_side(data_diameter: f64, r_max: f64, t_max: f64, phase: &PhaseFn) -> Result<f64> {
    let constants = derived_constants(phase, 1024)?;
    let a = phase.degree();
    Ok(data_diameter + 2.0 * constants.big_m * (2.0 * r_max).powf(a - 1.0) * t_max)
}

/// Hard error when a grid is too small for the requested experiment.
pub fn check_aliasing_budget(
    grid: &Grid,
    data_diameter: f64,
    r_max: f64,
    t_max: f64,
    phase: &PhaseFn,
) -> Result<()> {
    let required = required_side(data_diameter, r_max, t_max, phase)?;
    if grid.side_length() < required {
        return Err(Error::AliasingBudget {
            side: grid.side_length(),
            required,
        });
    }
    Ok(())
}

/// Both sides of the parabolic-rescaling identity, computed independently:
/// the L2 norm of T_{tau(x)} f over B(0, R), and R^{dim/2} times the norm of
/// the dilated evolution with time field tau(R.)/R^a over B(0, 1).
pub fn rescaling_identity_pair(
    f: &Field,
    tau: &TimeField,
    tgrid: &TimeGrid,
    r: f64,
    phase: &PhaseFn,
) -> Result<(f64, f64)> {
    let a = phase.degree();
    let ra = if a.fract() == 0.0 {
        r.powi(a as i32)
    } else {
        r.powf(a)
    };
    let lhs_field = apply_t_linearized(f, tau, tgrid, phase)?;
    let lhs = lhs_field.l2_region(&Region::ball([0.0, 0.0], r))?;

    let f_r = f.dilate(r)?;
    let scaled_values: Vec<f64> = tau.values().iter().map(|&v| v / ra).collect();
    let scaled_tau = TimeField::new(*f_r.grid(), tgrid.t_max() / ra, scaled_values)?;
    let scaled_tgrid = TimeGrid::new(tgrid.count(), tgrid.t_max() / ra)?;
    let rhs_field = apply_t_linearized(&f_r, &scaled_tau, &scaled_tgrid, phase)?;
    let rhs = r.powf(f.grid().dim() as f64 / 2.0) * rhs_field.l2_region(&Region::unit_ball())?;
    Ok((lhs, rhs))
}
