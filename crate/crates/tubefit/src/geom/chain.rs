//! Open polygonal chains with arc-length parametrization.

use super::{GeomError, Point2};

/// An open polygonal chain: at least two points, no two consecutive points
/// identical, total length strictly positive.
///
/// The chain carries its cumulative arc lengths so sampling and closest-point
/// queries are O(log n) and O(n) respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyChain {
    points: Vec<Point2>,
    cum: Vec<f64>,
}

/// One arc-length sample of a chain.
#[derive(Debug, Clone, Copy)]
pub struct ChainSample {
    /// Position of the sample.
    pub point: Point2,
    /// Angle of the segment the sample lies on.
    pub tangent_angle: f64,
    /// Arc-length fraction in [0, 1].
    pub t: f64,
    /// Index of the containing segment.
    pub segment: usize,
    /// Fraction within the containing segment; the position equals
    /// `lerp(points[segment], points[segment + 1], frac)`.
    pub frac: f64,
}

/// Result of projecting a point onto a chain.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// Distance from the query point to the chain.
    pub distance: f64,
    /// The attaining point on the chain.
    pub foot: Point2,
    /// Angle of the attaining segment. Ties break to the lowest segment index.
    pub tangent_angle: f64,
    /// Index of the attaining segment.
    pub segment: usize,
    /// Clamped parameter of the foot within the attaining segment.
    pub frac: f64,
}

impl PolyChain {
    pub fn new(points: Vec<Point2>) -> Result<Self, GeomError> {
        if points.len() < 2 {
            return Err(GeomError::TooFewPoints(points.len()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(GeomError::NonFinite(i));
            }
        }
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for i in 1..points.len() {
            let d = points[i].dist(points[i - 1]);
            if d == 0.0 {
                return Err(GeomError::DuplicatePoint(i));
            }
            cum.push(cum[i - 1] + d);
        }
        Ok(PolyChain { points, cum })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_segments(&self) -> usize {
        self.points.len() - 1
    }

    /// Total arc length.
    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn end(&self) -> Point2 {
        *self.points.last().unwrap()
    }

    pub fn segment(&self, i: usize) -> (Point2, Point2) {
        (self.points[i], self.points[i + 1])
    }

    pub fn segment_len(&self, i: usize) -> f64 {
        self.cum[i + 1] - self.cum[i]
    }

    pub fn segment_angle(&self, i: usize) -> f64 {
        (self.points[i + 1] - self.points[i]).angle()
    }

    /// Length and index of the shortest segment.
    pub fn min_segment(&self) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.num_segments() {
            let l = self.points[i + 1].dist(self.points[i]);
            if l < best.1 {
                best = (i, l);
            }
        }
        best
    }

    /// Allocate an arc length `s` to a segment: the first segment whose far
    /// cumulative length reaches `s`. A sample falling exactly on a vertex is
    /// assigned to the earlier segment, matching the lowest-index tie-break
    /// of [`PolyChain::project`]. Returns (segment index, fraction in [0,1]).
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let nseg = self.num_segments();
        // partition_point returns the first index with cum[i+1] >= s
        let i = self.cum[1..].partition_point(|&c| c < s).min(nseg - 1);
        let len = self.cum[i + 1] - self.cum[i];
        let u = if len > 0.0 { ((s - self.cum[i]) / len).clamp(0.0, 1.0) } else { 0.0 };
        (i, u)
    }

    pub fn point_at(&self, s: f64) -> Point2 {
        let (i, u) = self.locate(s);
        Point2::lerp(self.points[i], self.points[i + 1], u)
    }

    /// `m` samples at inclusive uniform arc-length fractions t = j/(m-1).
    ///
    /// Each sample position is an affine combination of the two vertices of
    /// its containing segment, so for a fixed allocation the positions are
    /// affine in the chain's vertex coordinates.
    pub fn arc_length_sample(&self, m: usize) -> Result<Vec<ChainSample>, GeomError> {
        if m < 2 {
            return Err(GeomError::TooFewSamples(m));
        }
        let total = self.length();
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let t = j as f64 / (m - 1) as f64;
            let (seg, u) = self.locate(t * total);
            out.push(ChainSample {
                point: Point2::lerp(self.points[seg], self.points[seg + 1], u),
                tangent_angle: self.segment_angle(seg),
                t,
                segment: seg,
                frac: u,
            });
        }
        Ok(out)
    }

    /// Closest point on the chain; ties break to the lowest segment index.
    pub fn project(&self, p: Point2) -> Projection {
        let mut best = Projection {
            distance: f64::INFINITY,
            foot: self.points[0],
            tangent_angle: 0.0,
            segment: 0,
            frac: 0.0,
        };
        for i in 0..self.num_segments() {
            let (a, b) = self.segment(i);
            let v = b - a;
            let t = ((p - a).dot(v) / v.norm_sq()).clamp(0.0, 1.0);
            let foot = Point2::lerp(a, b, t);
            let d = p.dist(foot);
            if d < best.distance {
                best = Projection {
                    distance: d,
                    foot,
                    tangent_angle: v.angle(),
                    segment: i,
                    frac: t,
                };
            }
        }
        best
    }

    pub fn reversed(&self) -> PolyChain {
        let mut pts = self.points.clone();
        pts.reverse();
        PolyChain::new(pts).expect("reversal preserves chain validity")
    }

    /// Resample to `n` points at uniform arc-length fractions.
    pub fn resample(&self, n: usize) -> Result<PolyChain, GeomError> {
        let samples = self.arc_length_sample(n)?;
        PolyChain::new(samples.into_iter().map(|s| s.point).collect())
    }

    /// Ramer-Douglas-Peucker simplification; keeps endpoints.
    pub fn simplify_rdp(&self, eps: f64) -> PolyChain {
        fn recurse(pts: &[Point2], eps: f64, keep: &mut Vec<Point2>) {
            if pts.len() <= 2 {
                return;
            }
            let a = pts[0];
            let b = *pts.last().unwrap();
            let v = b - a;
            let vn = v.norm();
            let mut worst = (0usize, -1.0f64);
            for (i, &p) in pts.iter().enumerate().skip(1).take(pts.len() - 2) {
                let d = if vn > 0.0 { (v.cross(p - a) / vn).abs() } else { p.dist(a) };
                if d > worst.1 {
                    worst = (i, d);
                }
            }
            if worst.1 > eps {
                recurse(&pts[..=worst.0], eps, keep);
                keep.push(pts[worst.0]);
                recurse(&pts[worst.0..], eps, keep);
            }
        }
        let mut keep = vec![self.points[0]];
        recurse(&self.points, eps, &mut keep);
        keep.push(*self.points.last().unwrap());
        PolyChain::new(keep).unwrap_or_else(|_| self.clone())
    }

    /// True when any two non-adjacent segments intersect, or when adjacent
    /// segments fold back onto each other.
    pub fn is_self_intersecting(&self) -> bool {
        let n = self.num_segments();
        for i in 0..n {
            let (a, b) = self.segment(i);
            // adjacent fold-back: exact 180-degree turn
            if i + 1 < n {
                let c = self.points[i + 2];
                if (b - a).cross(c - b) == 0.0 && (b - a).dot(c - b) < 0.0 {
                    return true;
                }
            }
            for j in i + 2..n {
                let (c, d) = self.segment(j);
                if super::polygon::segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }

    /// Symmetric Hausdorff distance between two chains, estimated from dense
    /// arc-length samples at roughly `step` spacing.
    pub fn hausdorff_to(&self, other: &PolyChain, step: f64) -> f64 {
        let one_way = |from: &PolyChain, to: &PolyChain| {
            let m = ((from.length() / step).ceil() as usize).clamp(2, 20_000);
            from.arc_length_sample(m)
                .unwrap()
                .iter()
                .map(|s| to.project(s.point).distance)
                .fold(0.0f64, f64::max)
        };
        one_way(self, other).max(one_way(other, self))
    }

    pub fn transformed(&self, f: impl Fn(Point2) -> Point2) -> Result<PolyChain, GeomError> {
        PolyChain::new(self.points.iter().map(|&p| f(p)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(pts: &[(f64, f64)]) -> PolyChain {
        PolyChain::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(
            PolyChain::new(vec![Point2::new(0.0, 0.0)]),
            Err(GeomError::TooFewPoints(1))
        ));
        assert!(matches!(
            PolyChain::new(vec![Point2::new(1.0, 2.0), Point2::new(1.0, 2.0)]),
            Err(GeomError::DuplicatePoint(1))
        ));
    }

    #[test]
    fn sample_uniform_on_segment() {
        let c = chain(&[(0.0, 0.0), (10.0, 0.0)]);
        let s = c.arc_length_sample(3).unwrap();
        assert_eq!(s.len(), 3);
        assert_abs_diff_eq!(s[0].point.x, 0.0);
        assert_abs_diff_eq!(s[1].point.x, 5.0);
        assert_abs_diff_eq!(s[2].point.x, 10.0);
        for smp in &s {
            assert_abs_diff_eq!(smp.point.y, 0.0);
            assert_abs_diff_eq!(smp.tangent_angle, 0.0);
        }
    }

    #[test]
    fn sample_unit_spacing_across_corner() {
        // length 7, eight samples => unit spacing
        let c = chain(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0)]);
        let s = c.arc_length_sample(8).unwrap();
        let expect = [
            (0.0, 0.0),
            (1.0, 0.0),
            (2.0, 0.0),
            (3.0, 0.0),
            (4.0, 0.0),
            (4.0, 1.0),
            (4.0, 2.0),
            (4.0, 3.0),
        ];
        for (got, want) in s.iter().zip(expect) {
            assert_abs_diff_eq!(got.point.x, want.0, epsilon = 1e-12);
            assert_abs_diff_eq!(got.point.y, want.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn sample_two_points_gives_endpoints() {
        let c = chain(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0)]);
        let s = c.arc_length_sample(2).unwrap();
        assert_eq!(s[0].point, Point2::new(0.0, 0.0));
        assert_eq!(s[1].point, Point2::new(4.0, 3.0));
    }

    #[test]
    fn sample_rejects_m_below_two() {
        let c = chain(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(c.arc_length_sample(1).is_err());
    }

    #[test]
    fn project_vertical_drop() {
        let c = chain(&[(0.0, 0.0), (10.0, 0.0)]);
        let p = c.project(Point2::new(3.0, 4.0));
        assert_abs_diff_eq!(p.distance, 4.0);
        assert_eq!(p.foot, Point2::new(3.0, 0.0));
        assert_abs_diff_eq!(p.tangent_angle, 0.0);
    }

    #[test]
    fn project_clamps_to_endpoints() {
        let c = chain(&[(0.0, 0.0), (10.0, 0.0)]);
        let p = c.project(Point2::new(-3.0, 4.0));
        assert_abs_diff_eq!(p.distance, 5.0);
        assert_eq!(p.foot, Point2::new(0.0, 0.0));
        let q = c.project(Point2::new(12.0, 0.0));
        assert_abs_diff_eq!(q.distance, 2.0);
        assert_eq!(q.foot, Point2::new(10.0, 0.0));
    }

    #[test]
    fn project_tie_breaks_to_lowest_segment() {
        // query at the corner vertex: both segments attain distance 0
        let c = chain(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0)]);
        let p = c.project(Point2::new(4.0, 0.0));
        assert_eq!(p.segment, 0);
        assert_abs_diff_eq!(p.distance, 0.0);
    }

    #[test]
    fn vertex_sample_angle_matches_projection_tie_break() {
        let c = chain(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0)]);
        // locate exactly at the corner arc length
        let (seg, u) = c.locate(4.0);
        assert_eq!(seg, 0);
        assert_abs_diff_eq!(u, 1.0);
    }

    #[test]
    fn self_intersection_detected() {
        assert!(chain(&[(0.0, 0.0), (10.0, 0.0), (5.0, 5.0), (5.0, -5.0)]).is_self_intersecting());
        assert!(!chain(&[(0.0, 0.0), (10.0, 0.0), (10.0, 5.0)]).is_self_intersecting());
    }

    #[test]
    fn rdp_collapses_collinear_jitter() {
        let c = chain(&[(0.0, 0.0), (1.0, 0.001), (2.0, -0.001), (3.0, 0.0)]);
        let s = c.simplify_rdp(0.01);
        assert_eq!(s.num_points(), 2);
    }
}
