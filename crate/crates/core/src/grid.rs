//! Periodic grids and geometric regions.
//!
//! A `Grid` discretizes the torus [-L/2, L/2)^dim with N nodes per axis.
//! Node index i per axis maps to the signed integer m = i for i < N/2 and
//! m = i - N otherwise, so spatial nodes are x = m*h and frequency nodes are
//! xi = m*(2*pi/L), the usual FFT layout with m in [-N/2, N/2).

use crate::error::{Error, Result};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Point in at most two dimensions; unused trailing coordinates are zero.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    side_length: f64,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    /// Spatial spacing h = L/N.
    pub fn spacing(&self) -> f64 {
        self.side_length / self.points_per_axis as f64
    }

    /// Frequency spacing 2*pi/L.
    pub fn freq_spacing(&self) -> f64 {
        TAU / self.side_length
    }

    /// Largest representable frequency magnitude per axis, pi/h.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    /// Total number of nodes N^dim.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed lattice integer for a per-axis index.
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Per-axis indices of a flat node index (row-major in dim 2).
    #[inline]
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.points_per_axis, flat % self.points_per_axis],
        }
    }

    #[inline]
    pub fn flat_index(&self, axes: [usize; 2]) -> usize {
        match self.dim {
            1 => axes[0],
            _ => axes[0] * self.points_per_axis + axes[1],
        }
    }

    /// Spatial coordinates of a node, in [-L/2, L/2)^dim.
    #[inline]
    pub fn coord(&self, flat: usize) -> Point {
        let [i0, i1] = self.axis_indices(flat);
        let h = self.spacing();
        match self.dim {
            1 => [self.signed_index(i0) as f64 * h, 0.0],
            _ => [
                self.signed_index(i0) as f64 * h,
                self.signed_index(i1) as f64 * h,
            ],
        }
    }

    /// Frequency coordinates of a node.
    #[inline]
    pub fn freq(&self, flat: usize) -> Point {
        let [i0, i1] = self.axis_indices(flat);
        let d = self.freq_spacing();
        match self.dim {
            1 => [self.signed_index(i0) as f64 * d, 0.0],
            _ => [
                self.signed_index(i0) as f64 * d,
                self.signed_index(i1) as f64 * d,
            ],
        }
    }

    /// Euclidean distance from `p` to `center` on the torus (minimum image).
    #[inline]
    pub fn torus_distance(&self, p: Point, center: Point) -> f64 {
        let l = self.side_length;
        let mut acc = 0.0;
        for k in 0..self.dim {
            let mut d = (p[k] - center[k]).rem_euclid(l);
            if d > l / 2.0 {
                d -= l;
            }
            acc += d * d;
        }
        acc.sqrt()
    }
}

/// Build a periodic grid. N must be a power of two >= 16 and dim 1 or 2.
pub fn make_grid(dim: usize, points_per_axis: usize, side_length: f64) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(Error::BadDimension(dim));
    }
    if points_per_axis < 16 || !points_per_axis.is_power_of_two() {
        return Err(Error::BadPointCount(points_per_axis));
    }
    if !(side_length.is_finite() && side_length > 0.0) {
        return Err(Error::BadSideLength(side_length));
    }
    Ok(Grid {
        dim,
        points_per_axis,
        side_length,
    })
}

/// Subset of the torus (space side) or of frequency space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball { center: Point, radius: f64 },
    Annulus { inner: f64, outer: f64 },
    All,
}

impl Region {
    pub fn ball(center: Point, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn unit_ball() -> Self {
        Region::Ball {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    /// Annulus {inner <= |x| <= outer} centered at the origin.
    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        if inner >= outer || inner.is_nan() || outer.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "annulus needs inner < outer, got [{inner}, {outer}]"
            )));
        }
        Ok(Region::Annulus { inner, outer })
    }

    /// Whether a spatial point of `grid` belongs to the region.
    #[inline]
    pub fn contains(&self, grid: &Grid, p: Point) -> bool {
        match *self {
            Region::Ball { center, radius } => grid.torus_distance(p, center) <= radius,
            Region::Annulus { inner, outer } => {
                let r = grid.torus_distance(p, [0.0, 0.0]);
                inner <= r && r <= outer
            }
            Region::All => true,
        }
    }

    /// Diameter the region occupies on the torus; used by the aliasing budget.
    pub fn extent(&self) -> f64 {
        match *self {
            Region::Ball { radius, .. } => 2.0 * radius,
            Region::Annulus { outer, .. } => 2.0 * outer,
            Region::All => 0.0,
        }
    }

    /// A ball or annulus must fit inside one period.
    pub fn check_fits(&self, grid: &Grid) -> Result<()> {
        let needed = match *self {
            Region::Ball { radius, .. } => 2.0 * radius,
            Region::Annulus { outer, .. } => 2.0 * outer,
            Region::All => 0.0,
        };
        if needed > grid.side_length() {
            return Err(Error::RegionTooLarge {
                needed,
                period: grid.side_length(),
            });
        }
        Ok(())
    }
}
