//! Simple polygons and exact intersection-over-union.

use super::{GeomError, Point2};
use geo::{Area, BooleanOps};

const AREA_EPS: f64 = 1e-9;

/// A simple polygon with positive area, stored counter-clockwise.
///
/// Validity is enforced at construction: inputs that self-intersect, pinch,
/// or collapse to zero area are rejected with a diagnostic instead of being
/// silently repaired. Everything downstream assumes simple polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
    area: f64,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::TooFewVertices(vertices.len()));
        }
        for (i, p) in vertices.iter().enumerate() {
            if !p.is_finite() {
                return Err(GeomError::NonFinite(i));
            }
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeomError::DuplicatePoint((i + 1) % n));
            }
        }
        if let Some((i, j)) = find_self_intersection(&vertices) {
            return Err(GeomError::SelfIntersecting(i, j));
        }
        let signed = signed_area(&vertices);
        if signed.abs() <= AREA_EPS {
            return Err(GeomError::DegenerateArea);
        }
        let mut vertices = vertices;
        if signed < 0.0 {
            vertices.reverse();
        }
        let area = signed.abs();
        Ok(Polygon { vertices, area })
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self, GeomError> {
        Polygon::new(coords.iter().map(|&(x, y)| Point2::new(x, y)).collect())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Axis-aligned bounding box as (min corner, max corner).
    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd point-in-polygon test. Points exactly on the boundary may
    /// report either side; callers that care use `distance_to_boundary`.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from a point to the closest boundary edge.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        let mut best = f64::INFINITY;
        for (a, b) in self.edges() {
            let v = b - a;
            let t = ((p - a).dot(v) / v.norm_sq()).clamp(0.0, 1.0);
            best = best.min(p.dist(Point2::lerp(a, b, t)));
        }
        best
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn transformed(&self, f: impl Fn(Point2) -> Point2) -> Result<Polygon, GeomError> {
        Polygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    fn to_geo(&self) -> geo::Polygon<f64> {
        let ring: Vec<(f64, f64)> = self.vertices.iter().map(|p| (p.x, p.y)).collect();
        geo::Polygon::new(geo::LineString::from(ring), vec![])
    }
}

pub(crate) fn signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.cross(b);
    }
    s / 2.0
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Whether closed segments [a,b] and [c,d] share any point.
pub(crate) fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Scan all edge pairs for a simplicity violation. Adjacent edges share one
/// endpoint by construction; they only violate simplicity when they fold
/// back along each other (a zero-angle spike).
fn find_self_intersection(pts: &[Point2]) -> Option<(usize, usize)> {
    let n = pts.len();
    let edge = |i: usize| (pts[i], pts[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        let j = (i + 1) % n;
        let (_, c) = edge(j);
        if (b - a).cross(c - b) == 0.0 && (b - a).dot(c - b) < 0.0 {
            return Some((i, j));
        }
    }
    for i in 0..n {
        let (a, b) = edge(i);
        let (alo, ahi) = (a.x.min(b.x), a.x.max(b.x));
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue; // adjacent around the wrap
            }
            let (c, d) = edge(j);
            if c.x.min(d.x) > ahi || c.x.max(d.x) < alo {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// True when `b` is a cyclic rotation of `a` (same direction, exact equality).
fn ring_equal(a: &[Point2], b: &[Point2]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let n = a.len();
    'outer: for off in 0..n {
        for i in 0..n {
            if a[i] != b[(i + off) % n] {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

/// Exact polygon intersection-over-union via boolean clipping.
///
/// Handles concave simple polygons. The union is derived as
/// `area(a) + area(b) - area(a n b)` so only one clipping pass is needed.
pub fn polygon_iou(a: &Polygon, b: &Polygon) -> f64 {
    // Bit-identical rings short-circuit to 1, and strictly separated boxes
    // to 0, so the reference cases are exact rather than clipper-dependent.
    if ring_equal(a.vertices(), b.vertices()) {
        return 1.0;
    }
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    if alo.x > bhi.x || blo.x > ahi.x || alo.y > bhi.y || blo.y > ahi.y {
        return 0.0;
    }
    let inter = a.to_geo().intersection(&b.to_geo());
    let raw = inter.unsigned_area();
    if raw <= 0.0 {
        return 0.0;
    }
    // clamp clipper output into the mathematically possible range
    let ai = raw.min(a.area()).min(b.area());
    let union = a.area() + b.area() - ai;
    (ai / union).clamp(0.0, 1.0)
}
