//! Planar geometry primitives.
//!
//! Everything downstream (medial axes, losses, evaluation) is built on the
//! three types here: [`Point2`], [`PolyChain`] and [`Polygon`]. Coordinates
//! are real-valued pixels; integer annotation inputs are widened on load.

mod chain;
mod polygon;
mod raster;

pub use chain::{ChainSample, PolyChain, Projection};
pub use polygon::{polygon_iou, Polygon};
pub use raster::rasterize_iou;

use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

/// Errors from constructing or querying geometric primitives.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("a polygonal chain needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("consecutive identical points at index {0}")]
    DuplicatePoint(usize),
    #[error("polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("polygon area is zero or numerically degenerate")]
    DegenerateArea,
    #[error("arc-length sampling needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// A point in the image plane, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product, i.e. the signed parallelogram area.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Angle of the vector in radians, in (-pi, pi].
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise quarter turn.
    pub fn rot90(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn rotated(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Affine interpolation; exact at `t = 0` and `t = 1`.
    pub fn lerp(a: Point2, b: Point2, t: f64) -> Point2 {
        Point2::new((1.0 - t) * a.x + t * b.x, (1.0 - t) * a.y + t * b.y)
    }

    pub fn from_angle(theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c, s)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point2 {
    type Output = Point2;
    fn div(self, s: f64) -> Point2 {
        Point2::new(self.x / s, self.y / s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Fold an angle difference into [0, pi/2], treating directions modulo pi.
///
/// Chains are undirected for our purposes, so a 180-degree flip costs nothing.
pub fn fold_angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b).abs() % std::f64::consts::PI;
    if d > std::f64::consts::FRAC_PI_2 {
        d = std::f64::consts::PI - d;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_angle_basics() {
        assert!(fold_angle_diff(0.0, std::f64::consts::PI) < 1e-12);
        assert!((fold_angle_diff(0.0, std::f64::consts::FRAC_PI_2) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((fold_angle_diff(0.1, -0.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn lerp_is_exact_at_ends() {
        let a = Point2::new(0.1 + 0.2, -7.3);
        let b = Point2::new(4.0 / 3.0, 9.9);
        assert_eq!(Point2::lerp(a, b, 0.0), a);
        assert_eq!(Point2::lerp(a, b, 1.0), b);
    }
}
