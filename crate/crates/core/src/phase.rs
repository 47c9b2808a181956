//! Homogeneous phase symbols and their sanity checks.
//!
//! A phase is a real function on frequency space, positively homogeneous of
//! degree a >= 1, smooth away from the origin, with nonvanishing gradient on
//! the unit sphere. Built-ins cover the classical dispersion relations; user
//! phases go through the same validators before an experiment will touch them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::norm2;
use crate::grid::{Point, TAU};

type EvalFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Wave,
    Schrodinger,
    Fractional(f64),
    Airy,
    Custom { eval: EvalFn, grad: GradFn },
}

/// A positively homogeneous phase, pinned to a spatial dimension.
#[derive(Clone)]
pub struct PhaseFn {
    name: String,
    degree: f64,
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for PhaseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseFn")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("dim", &self.dim)
            .finish()
    }
}

impl PhaseFn {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// phi(xi); the origin is pinned to 0, the homogeneous limit.
    pub fn eval(&self, xi: Point) -> f64 {
        let r = norm2(xi);
        if r == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Wave => r,
            Kind::Schrodinger => r * r,
            Kind::Fractional(a) => r.powf(*a),
            Kind::Airy => xi[0] * xi[0] * xi[0],
            Kind::Custom { eval, .. } => eval(xi),
        }
    }

    /// grad phi(xi); returns the zero vector at the origin, where the
    /// homogeneous extension may genuinely be non-smooth.
    pub fn grad(&self, xi: Point) -> Point {
        let r = norm2(xi);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        match &self.kind {
            Kind::Wave => [xi[0] / r, xi[1] / r],
            Kind::Schrodinger => [2.0 * xi[0], 2.0 * xi[1]],
            Kind::Fractional(a) => {
                let s = a * r.powf(a - 2.0);
                [s * xi[0], s * xi[1]]
            }
            Kind::Airy => [3.0 * xi[0] * xi[0], 0.0],
            Kind::Custom { grad, .. } => grad(xi),
        }
    }

    /// Wrap user-supplied closures. The result still has to pass
    /// `check_homogeneity` before the estimators will accept it.
    pub fn custom(
        name: impl Into<String>,
        degree: f64,
        dim: usize,
        eval: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point) -> Point + Send + Sync + 'static,
    ) -> Result<Self> {
        if degree < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "phase degree must be >= 1, got {degree}"
            )));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::BadDimension(dim));
        }
        Ok(PhaseFn {
            name: name.into(),
            degree,
            dim,
            kind: Kind::Custom {
                eval: Arc::new(eval),
                grad: Arc::new(grad),
            },
        })
    }
}

/// Sphere-gradient extrema and the far-field separation constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConstants {
    pub m: f64,
    pub big_m: f64,
    pub kappa: f64,
}

/// Output of `check_derivative_bounds`.
#[derive(Debug, Clone)]
pub struct PhaseCheckReport {
    pub homogeneity_dev: f64,
    /// |alpha| -> sup |d^alpha phi| * |xi|^(|alpha| - a) over the sample set
    pub derivative_bound_consts: BTreeMap<u32, f64>,
    pub min_grad: f64,
}

/// Look up a phase by name: `wave`, `schrodinger`, `airy`, or
/// `fractional:a=<degree>`.
pub fn builtin_phase(name: &str, dim: usize) -> Result<PhaseFn> {
    if dim != 1 && dim != 2 {
        return Err(Error::BadDimension(dim));
    }
    match name {
        "wave" => Ok(PhaseFn {
            name: "wave".into(),
            degree: 1.0,
            dim,
            kind: Kind::Wave,
        }),
        "schrodinger" => Ok(PhaseFn {
            name: "schrodinger".into(),
            degree: 2.0,
            dim,
            kind: Kind::Schrodinger,
        }),
        "airy" => {
            if dim != 1 {
                return Err(Error::InvalidParameter(
                    "airy phase is defined in dimension 1 only".into(),
                ));
            }
            Ok(PhaseFn {
                name: "airy".into(),
                degree: 3.0,
                dim,
                kind: Kind::Airy,
            })
        }
        other => {
            if let Some(rest) = other.strip_prefix("fractional:a=") {
                let a: f64 = rest
                    .parse()
                    .map_err(|_| Error::UnknownPhase(other.into()))?;
                if !(a >= 1.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "fractional degree must be >= 1, got {a}"
                    )));
                }
                Ok(PhaseFn {
                    name: format!("fractional:a={a}"),
                    degree: a,
                    dim,
                    kind: Kind::Fractional(a),
                })
            } else {
                Err(Error::UnknownPhase(other.into()))
            }
        }
    }
}

fn sphere_points(dim: usize, count: usize) -> Vec<Point> {
    if dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        (0..count)
            .map(|i| {
                let th = TAU * (i as f64) / (count as f64);
                [th.cos(), th.sin()]
            })
            .collect()
    }
}

/// Worst relative deviation of phi(r xi) from r^a phi(xi) over random samples.
pub fn check_homogeneity(phase: &PhaseFn, sample_count: usize, rng_seed: u64) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter(
            "homogeneity check needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let a = phase.degree();
    let mut worst = 0.0f64;
    for _ in 0..sample_count {
        let dir = random_direction(phase.dim(), &mut rng);
        let mag = 10.0f64.powf(rng.random_range(-1.0..1.0));
        let xi = [dir[0] * mag, dir[1] * mag];
        let r = 2.0f64.powf(rng.random_range(-3.0..3.0));
        let scaled = [xi[0] * r, xi[1] * r];
        let lhs = phase.eval(scaled);
        let rhs = r.powf(a) * phase.eval(xi);
        let denom = r.powf(a) * phase.eval(xi).abs() + f64::EPSILON;
        worst = worst.max((lhs - rhs).abs() / denom);
    }
    Ok(worst)
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Point {
    if dim == 1 {
        if rng.random::<bool>() {
            [1.0, 0.0]
        } else {
            [-1.0, 0.0]
        }
    } else {
        let th: f64 = rng.random_range(0.0..TAU);
        [th.cos(), th.sin()]
    }
}

/// m, M, and kappa = 4^a M. Closed forms for built-ins, dense sphere
/// sampling for custom phases.
pub fn derived_constants(phase: &PhaseFn, sphere_samples: usize) -> Result<PhaseConstants> {
    if sphere_samples < 64 {
        return Err(Error::InvalidParameter(format!(
            "need at least 64 sphere samples, got {sphere_samples}"
        )));
    }
    let (m, big_m) = match &phase.kind {
        Kind::Wave => (1.0, 1.0),
        Kind::Schrodinger => (2.0, 2.0),
        Kind::Fractional(a) => (*a, *a),
        Kind::Airy => (3.0, 3.0),
        Kind::Custom { .. } => {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for p in sphere_points(phase.dim(), sphere_samples) {
                let g = norm2(phase.grad(p));
                lo = lo.min(g);
                hi = hi.max(g);
            }
            (lo, hi)
        }
    };
    if m <= 1e-9 {
        return Err(Error::VanishingGradient(m));
    }
    let kappa = 4.0f64.powf(phase.degree()) * big_m;
    Ok(PhaseConstants { m, big_m, kappa })
}

/// Estimate the symbol-bound constants sup |d^alpha phi| |xi|^(|alpha|-a)
/// for |alpha| <= max_order by central finite differences on a log-spaced
/// sample of radii and directions.
pub fn check_derivative_bounds(phase: &PhaseFn, max_order: u32) -> Result<PhaseCheckReport> {
    if max_order == 0 {
        return Err(Error::InvalidParameter(
            "derivative bound check needs max_order >= 1".into(),
        ));
    }
    let a = phase.degree();
    let dirs = sphere_points(phase.dim(), 64);
    let radii: Vec<f64> = (0..25)
        .map(|i| 10.0f64.powf(-1.0 + 2.0 * (i as f64) / 24.0))
        .collect();
    let mut consts: BTreeMap<u32, f64> = BTreeMap::new();
    for order in 1..=max_order.min(2) {
        let mut sup = 0.0f64;
        for &r in &radii {
            let delta = 1e-4 * r;
            for d in &dirs {
                let xi = [d[0] * r, d[1] * r];
                let weight = r.powf(order as f64 - a);
                match order {
                    1 => {
                        for axis in 0..phase.dim() {
                            let v = fd_first(phase, xi, axis, delta);
                            sup = sup.max(v.abs() * weight);
                        }
                    }
                    _ => {
                        for axis in 0..phase.dim() {
                            let v = fd_second(phase, xi, axis, delta);
                            sup = sup.max(v.abs() * weight);
                        }
                        if phase.dim() == 2 {
                            let v = fd_mixed(phase, xi, delta);
                            sup = sup.max(v.abs() * weight);
                        }
                    }
                }
            }
        }
        if !sup.is_finite() {
            return Err(Error::PhaseCondition(format!(
                "derivative bound constant diverged at order {order}"
            )));
        }
        consts.insert(order, sup);
    }
    let constants = derived_constants(phase, 1024)?;
    Ok(PhaseCheckReport {
        homogeneity_dev: check_homogeneity(phase, 256, 0x5eed)?,
        derivative_bound_consts: consts,
        min_grad: constants.m,
    })
}

fn fd_first(phase: &PhaseFn, xi: Point, axis: usize, delta: f64) -> f64 {
    let mut plus = xi;
    let mut minus = xi;
    plus[axis] += delta;
    minus[axis] -= delta;
    (phase.eval(plus) - phase.eval(minus)) / (2.0 * delta)
}

fn fd_second(phase: &PhaseFn, xi: Point, axis: usize, delta: f64) -> f64 {
    let mut plus = xi;
    let mut minus = xi;
    plus[axis] += delta;
    minus[axis] -= delta;
    (phase.eval(plus) - 2.0 * phase.eval(xi) + phase.eval(minus)) / (delta * delta)
}

fn fd_mixed(phase: &PhaseFn, xi: Point, delta: f64) -> f64 {
    let pp = phase.eval([xi[0] + delta, xi[1] + delta]);
    let pm = phase.eval([xi[0] + delta, xi[1] - delta]);
    let mp = phase.eval([xi[0] - delta, xi[1] + delta]);
    let mm = phase.eval([xi[0] - delta, xi[1] - delta]);
    (pp - pm - mp + mm) / (4.0 * delta * delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_values_and_gradients() {
        let s = builtin_phase("schrodinger", 2).unwrap();
        assert_eq!(s.eval([1.0, 0.0]), 1.0);
        assert_eq!(s.grad([1.0, 0.0]), [2.0, 0.0]);

        let w = builtin_phase("wave", 2).unwrap();
        assert_eq!(w.eval([3.0, 4.0]), 5.0);
        let g = w.grad([3.0, 4.0]);
        assert_relative_eq!(g[0], 0.6, max_relative = 1e-14);
        assert_relative_eq!(g[1], 0.8, max_relative = 1e-14);

        let airy = builtin_phase("airy", 1).unwrap();
        assert_eq!(airy.eval([-2.0, 0.0]), -8.0);
        assert_eq!(airy.grad([-2.0, 0.0])[0], 12.0);

        let fr = builtin_phase("fractional:a=1.5", 1).unwrap();
        assert_relative_eq!(fr.eval([4.0, 0.0]), 8.0, max_relative = 1e-14);
    }

    #[test]
    fn lookup_rejects_bad_names_and_dims() {
        assert!(matches!(
            builtin_phase("helmholtz", 2),
            Err(Error::UnknownPhase(_))
        ));
        assert!(builtin_phase("airy", 2).is_err());
        assert!(builtin_phase("fractional:a=0.5", 1).is_err());
        assert!(builtin_phase("wave", 3).is_err());
    }

    #[test]
    fn origin_is_pinned_to_zero() {
        for name in ["wave", "schrodinger", "fractional:a=1.7"] {
            let p = builtin_phase(name, 2).unwrap();
            assert_eq!(p.eval([0.0, 0.0]), 0.0);
            assert_eq!(p.grad([0.0, 0.0]), [0.0, 0.0]);
        }
    }

    #[test]
    fn builtins_are_exactly_homogeneous() {
        for (name, dim) in [
            ("wave", 2),
            ("schrodinger", 2),
            ("airy", 1),
            ("fractional:a=1.5", 2),
        ] {
            let p = builtin_phase(name, dim).unwrap();
            let dev = check_homogeneity(&p, 500, 42).unwrap();
            assert!(dev < 1e-9, "{name}: deviation {dev}");
        }
    }

    #[test]
    fn inhomogeneous_phase_is_flagged() {
        let p = PhaseFn::custom(
            "shifted",
            2.0,
            2,
            |xi| xi[0] * xi[0] + xi[1] * xi[1] + 1.0,
            |xi| [2.0 * xi[0], 2.0 * xi[1]],
        )
        .unwrap();
        let dev = check_homogeneity(&p, 200, 7).unwrap();
        assert!(dev > 0.01, "expected O(1) deviation, got {dev}");
    }

    #[test]
    fn sphere_constants_match_closed_forms() {
        let cases = [
            ("schrodinger", 2, 2.0, 32.0),
            ("wave", 2, 1.0, 4.0),
            ("airy", 1, 3.0, 192.0),
            ("fractional:a=1.5", 2, 1.5, 12.0),
        ];
        for (name, dim, grad, kappa) in cases {
            let p = builtin_phase(name, dim).unwrap();
            let c = derived_constants(&p, 1024).unwrap();
            assert_relative_eq!(c.m, grad, max_relative = 1e-12);
            assert_relative_eq!(c.big_m, grad, max_relative = 1e-12);
            assert_relative_eq!(c.kappa, kappa, max_relative = 1e-12);
            assert_eq!(c.kappa / c.big_m, 4.0f64.powf(p.degree()));
        }
    }

    #[test]
    fn custom_constants_come_from_sampling() {
        // phi = xi_1^2 + 4 xi_2^2: |grad| on the circle ranges over [2, 8]
        let p = PhaseFn::custom(
            "anisotropic",
            2.0,
            2,
            |xi| xi[0] * xi[0] + 4.0 * xi[1] * xi[1],
            |xi| [2.0 * xi[0], 8.0 * xi[1]],
        )
        .unwrap();
        let c = derived_constants(&p, 4096).unwrap();
        assert_relative_eq!(c.m, 2.0, max_relative = 1e-3);
        assert_relative_eq!(c.big_m, 8.0, max_relative = 1e-3);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (name, dim) in [("wave", 2), ("schrodinger", 2), ("fractional:a=1.5", 2), ("airy", 1)] {
            let p = builtin_phase(name, dim).unwrap();
            for _ in 0..100 {
                let d = random_direction(dim, &mut rng);
                let mag = 10.0f64.powf(rng.random_range(-1.0..1.0));
                let xi = [d[0] * mag, d[1] * mag];
                let g = p.grad(xi);
                for (axis, &ga) in g.iter().enumerate().take(dim) {
                    let fd = fd_first(&p, xi, axis, 1e-5 * mag);
                    assert_relative_eq!(ga, fd, max_relative = 1e-6, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn derivative_bound_constants_match_hand_values() {
        let s = builtin_phase("schrodinger", 2).unwrap();
        let rep = check_derivative_bounds(&s, 2).unwrap();
        assert_relative_eq!(rep.derivative_bound_consts[&1], 2.0, max_relative = 1e-6);
        assert_relative_eq!(rep.derivative_bound_consts[&2], 2.0, max_relative = 1e-4);
        assert_relative_eq!(rep.min_grad, 2.0, max_relative = 1e-12);

        let w = builtin_phase("wave", 2).unwrap();
        let rep = check_derivative_bounds(&w, 1).unwrap();
        assert_relative_eq!(rep.derivative_bound_consts[&1], 1.0, max_relative = 1e-6);

        let airy = builtin_phase("airy", 1).unwrap();
        let rep = check_derivative_bounds(&airy, 2).unwrap();
        assert_relative_eq!(rep.derivative_bound_consts[&2], 6.0, max_relative = 1e-4);
    }
}
