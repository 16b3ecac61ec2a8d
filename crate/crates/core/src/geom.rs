//! Simulation window and wrap-aware metric.

use crate::error::{Error, Result};

/// Coordinates are stored padded to three axes; axes past `Window::dim`
/// are always zero.
pub type Point = [f64; 3];

/// Edge handling for everything metric: distances, hard-core checks,
/// second-order estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wrap {
    /// All distances computed on the torus. Default: no boundary bias.
    Toroidal,
    /// Plain Euclidean distances; statistics that need edge correction
    /// restrict centers to points at least `band` away from the boundary.
    GuardBand { band: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub dim: usize,
    pub sides: [f64; 3],
    pub wrap: Wrap,
}

impl Window {
    pub fn new(dim: usize, sides: &[f64], wrap: Wrap) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::parameter(format!("window: dim must be 1..=3, got {dim}")));
        }
        if sides.len() != dim {
            return Err(Error::parameter(format!(
                "window: got {} side lengths for dimension {dim}",
                sides.len()
            )));
        }
        let mut s = [0.0; 3];
        for (i, &v) in sides.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::parameter(format!("window: side {i} must be > 0, got {v}")));
            }
            s[i] = v;
        }
        if let Wrap::GuardBand { band } = wrap {
            if !(band >= 0.0) {
                return Err(Error::parameter(format!("window: guard band must be >= 0, got {band}")));
            }
        }
        Ok(Window { dim, sides: s, wrap })
    }

    pub fn square(side: f64) -> Result<Self> {
        Window::new(2, &[side, side], Wrap::Toroidal)
    }

    pub fn line(len: f64) -> Result<Self> {
        Window::new(1, &[len], Wrap::Toroidal)
    }

    pub fn cube(side: f64) -> Result<Self> {
        Window::new(3, &[side, side, side], Wrap::Toroidal)
    }

    pub fn volume(&self) -> f64 {
        self.sides[..self.dim].iter().product()
    }

    pub fn min_side(&self) -> f64 {
        self.sides[..self.dim]
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|i| p[i] >= 0.0 && p[i] < self.sides[i])
            && (self.dim..3).all(|i| p[i] == 0.0)
    }

    /// Wrap a point back into [0, side) per axis (used after toroidal
    /// displacement of daughters/offsets).
    pub fn wrap_point(&self, p: &Point) -> Point {
        let mut out = [0.0; 3];
        for i in 0..self.dim {
            out[i] = p[i].rem_euclid(self.sides[i]);
            // rem_euclid can return side for tiny negative inputs
            if out[i] >= self.sides[i] {
                out[i] = 0.0;
            }
        }
        out
    }

    #[inline]
    pub fn distance_sq(&self, a: &Point, b: &Point) -> f64 {
        let mut acc = 0.0;
        match self.wrap {
            Wrap::Toroidal => {
                for i in 0..self.dim {
                    let mut d = (a[i] - b[i]).abs();
                    let s = self.sides[i];
                    if d > 0.5 * s {
                        d = s - d;
                    }
                    acc += d * d;
                }
            }
            Wrap::GuardBand { .. } => {
                for i in 0..self.dim {
                    let d = a[i] - b[i];
                    acc += d * d;
                }
            }
        }
        acc
    }

    #[inline]
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    /// Largest radius at which toroidal pair statistics are unambiguous.
    pub fn max_metric_radius(&self) -> f64 {
        match self.wrap {
            Wrap::Toroidal => 0.5 * self.min_side(),
            Wrap::GuardBand { .. } => self.min_side(),
        }
    }

    /// True if `p` is at least `margin` away from every boundary
    /// (trivially true under toroidal wrap).
    pub fn is_interior(&self, p: &Point, margin: f64) -> bool {
        match self.wrap {
            Wrap::Toroidal => true,
            Wrap::GuardBand { .. } => (0..self.dim)
                .all(|i| p[i] >= margin && p[i] <= self.sides[i] - margin),
        }
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; 3];
        for i in 0..self.dim {
            c[i] = 0.5 * self.sides[i];
        }
        c
    }
}
