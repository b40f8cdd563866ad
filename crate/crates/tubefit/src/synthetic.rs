//! Seeded generators for synthetic instances: bands with controlled width
//! profiles, random tubes and their perturbations, random star polygons.
//!
//! Shared between the test suites and the demo/benchmark subcommands so
//! that both exercise the same fixture distribution.

use crate::geom::{Point2, PolyChain, Polygon};
use crate::medial::Tube;
use rand::Rng;

/// A smooth sine-flavored axis with `n` points spanning `length` pixels.
pub fn wavy_axis(length: f64, amplitude: f64, phase: f64, periods: f64, n: usize) -> PolyChain {
    let pts: Vec<Point2> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let x = t * length;
            let y = amplitude * (periods * std::f64::consts::TAU * t + phase).sin();
            Point2::new(x, y)
        })
        .collect();
    PolyChain::new(pts).expect("wavy axis is non-degenerate")
}

/// Band polygon around a dense axis: boundary offset along per-vertex
/// normals by a varying half width, closed with round end caps.
///
/// `half_width` is evaluated at the arc-length fraction of each axis vertex.
/// The construction stays simple as long as the width is well below the
/// local turning radius of the axis.
pub fn band_polygon(
    axis: &PolyChain,
    half_width: impl Fn(f64) -> f64,
    cap_segments: usize,
) -> Polygon {
    let pts = axis.points();
    let n = pts.len();
    let total = axis.length();
    // averaged vertex normals
    let mut normals = Vec::with_capacity(n);
    for i in 0..n {
        let before = if i > 0 { (pts[i] - pts[i - 1]).normalized().unwrap() } else { Point2::ZERO };
        let after =
            if i + 1 < n { (pts[i + 1] - pts[i]).normalized().unwrap() } else { Point2::ZERO };
        let dir = (before + after).normalized().unwrap_or(Point2::new(1.0, 0.0));
        normals.push(dir.rot90());
    }
    let mut cum = vec![0.0];
    for i in 1..n {
        cum.push(cum[i - 1] + pts[i].dist(pts[i - 1]));
    }

    let mut boundary: Vec<Point2> = Vec::new();
    for i in 0..n {
        boundary.push(pts[i] + normals[i] * half_width(cum[i] / total));
    }
    // end cap around the last point
    let w_end = half_width(1.0);
    for k in 1..cap_segments {
        let ang = normals[n - 1].angle() - std::f64::consts::PI * k as f64 / cap_segments as f64;
        boundary.push(pts[n - 1] + Point2::from_angle(ang) * w_end);
    }
    for i in (0..n).rev() {
        boundary.push(pts[i] - normals[i] * half_width(cum[i] / total));
    }
    let w_start = half_width(0.0);
    for k in 1..cap_segments {
        let ang =
            (-normals[0]).angle() - std::f64::consts::PI * k as f64 / cap_segments as f64;
        boundary.push(pts[0] + Point2::from_angle(ang) * w_start);
    }
    Polygon::new(boundary).expect("band construction stays simple for gentle axes")
}

/// Flat-ended band: normal offsets only, no caps. Produces the classic
/// paired-chain annotation layout (top chain, then reversed bottom chain)
/// when `axis` has k points: the polygon has 2k vertices.
pub fn paired_band_polygon(axis: &PolyChain, half_width: f64) -> Polygon {
    let pts = axis.points();
    let n = pts.len();
    let mut normals = Vec::with_capacity(n);
    for i in 0..n {
        let before = if i > 0 { (pts[i] - pts[i - 1]).normalized().unwrap() } else { Point2::ZERO };
        let after =
            if i + 1 < n { (pts[i + 1] - pts[i]).normalized().unwrap() } else { Point2::ZERO };
        let dir = (before + after).normalized().unwrap_or(Point2::new(1.0, 0.0));
        normals.push(dir.rot90());
    }
    let mut boundary: Vec<Point2> = Vec::new();
    for i in 0..n {
        boundary.push(pts[i] + normals[i] * half_width);
    }
    for i in (0..n).rev() {
        boundary.push(pts[i] - normals[i] * half_width);
    }
    Polygon::new(boundary).expect("paired band stays simple for gentle axes")
}

/// Parameters of one random band fixture.
#[derive(Debug, Clone)]
pub struct BandSpec {
    pub length: f64,
    pub base_half_width: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub width_wobble: f64,
    pub width_cycles: f64,
}

impl BandSpec {
    /// Draw a gentle band: long relative to its width, mild curvature, and
    /// a width profile varying by at most `2 * width_wobble` relative.
    pub fn sample<R: Rng>(rng: &mut R, max_wobble: f64) -> BandSpec {
        let base_half_width = rng.gen_range(2.5..4.0);
        let aspect = rng.gen_range(30.0..55.0);
        BandSpec {
            length: base_half_width * aspect,
            base_half_width,
            amplitude: base_half_width * rng.gen_range(0.0..0.7),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            width_wobble: rng.gen_range(0.2 * max_wobble..max_wobble),
            width_cycles: rng.gen_range(1.0..2.5),
        }
    }

    pub fn axis(&self, n: usize) -> PolyChain {
        wavy_axis(self.length, self.amplitude, self.phase, 0.4, n)
    }

    pub fn polygon(&self) -> Polygon {
        let axis = self.axis(60);
        let w0 = self.base_half_width;
        let wob = self.width_wobble;
        let cyc = self.width_cycles;
        let ph = self.phase;
        band_polygon(
            &axis,
            move |t| w0 * (1.0 + wob * (std::f64::consts::TAU * cyc * t + ph).sin()),
            12,
        )
    }
}

/// A random gentle ground-truth tube with `n_points` medial points.
pub fn random_tube<R: Rng>(rng: &mut R, n_points: usize) -> Tube {
    let radius = rng.gen_range(3.0..6.0);
    let length = radius * rng.gen_range(18.0..30.0);
    let amplitude = radius * rng.gen_range(0.0..1.0);
    let axis = wavy_axis(length, amplitude, rng.gen_range(0.0..std::f64::consts::TAU), 0.4, n_points);
    Tube::new(axis, radius).expect("gentle axes are valid")
}

/// Perturb a tube: vertex noise uniform in a disk of radius
/// `noise_frac * radius` and radius scaled uniformly in
/// `[radius_lo, radius_hi]`. Retries until the perturbed tube is valid.
pub fn perturbed_tube<R: Rng>(
    rng: &mut R,
    gt: &Tube,
    noise_frac: f64,
    radius_lo: f64,
    radius_hi: f64,
) -> Tube {
    loop {
        let pts: Vec<Point2> = gt
            .axis()
            .points()
            .iter()
            .map(|&p| {
                let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                let mag = rng.gen_range(0.0..noise_frac * gt.radius());
                p + Point2::from_angle(ang) * mag
            })
            .collect();
        let radius = gt.radius() * rng.gen_range(radius_lo..radius_hi);
        if let Ok(chain) = PolyChain::new(pts) {
            if let Ok(tube) = Tube::new(chain, radius) {
                return tube;
            }
        }
    }
}

/// Random star-shaped polygon: strictly increasing angles around a center
/// guarantee simplicity.
pub fn random_star_polygon<R: Rng>(
    rng: &mut R,
    center: Point2,
    r_min: f64,
    r_max: f64,
    n_vertices: usize,
) -> Polygon {
    let verts: Vec<Point2> = (0..n_vertices)
        .map(|i| {
            let ang = std::f64::consts::TAU * (i as f64 + rng.gen_range(0.15..0.85))
                / n_vertices as f64;
            center + Point2::from_angle(ang) * rng.gen_range(r_min..r_max)
        })
        .collect();
    Polygon::new(verts).expect("star polygons are simple by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_polygon_is_valid_and_sized() {
        let axis = wavy_axis(100.0, 4.0, 0.3, 0.4, 60);
        let poly = band_polygon(&axis, |_| 3.0, 12);
        // about 2 w L plus caps
        let expect = 2.0 * 3.0 * axis.length() + std::f64::consts::PI * 9.0;
        assert!((poly.area() - expect).abs() / expect < 0.05, "area {}", poly.area());
    }

    #[test]
    fn generators_are_deterministic_under_seed() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let ta = random_tube(&mut a, 5);
        let tb = random_tube(&mut b, 5);
        assert_eq!(ta.axis().points(), tb.axis().points());
        assert_eq!(ta.radius(), tb.radius());
    }

    #[test]
    fn star_polygons_are_simple() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_star_polygon(&mut rng, Point2::new(5.0, 5.0), 2.0, 6.0, 10);
            assert!(p.area() > 0.0);
        }
    }

    #[test]
    fn paired_band_has_twice_the_axis_points() {
        let axis = wavy_axis(80.0, 5.0, 0.1, 0.4, 7);
        let poly = paired_band_polygon(&axis, 4.0);
        assert_eq!(poly.vertices().len(), 14);
    }
}
