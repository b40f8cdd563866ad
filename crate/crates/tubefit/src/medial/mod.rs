//! Fit tubes to annotation polygons.
//!
//! A tube is the pair (medial axis chain, constant radius). Extraction
//! approximates the medial axis — the centers of all maximal inscribed disks
//! — from the interior Voronoi structure of a densely resampled boundary,
//! prunes spur branches by leaf clearance, extends the end segments until
//! they meet the polygon, and resamples the chain to a fixed number of
//! medial points. The radius is the mean clearance along the pre-extension
//! chain, i.e. the average maximal-disk radius under arc-length measure.

mod envelope;
mod graph;

pub use envelope::tube_envelope;

use crate::geom::{fold_angle_diff, GeomError, Point2, PolyChain, Polygon};
use thiserror::Error;

/// Number of arc-length samples used when averaging clearances.
const RADIUS_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum MedialError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("polygon too thin for boundary spacing {spacing}; retry with a finer spacing")]
    TooThin { spacing: f64 },
    #[error("branch pruning emptied the medial graph")]
    EmptyAfterPruning,
    #[error("axis touches the polygon boundary at sample {sample}; estimate the radius on the pre-extension chain")]
    AxisTouchesBoundary { sample: usize },
    #[error("end-segment extension found no boundary intersection")]
    ExtensionFailed,
    #[error("offset self-overlaps near axis vertex {vertex}: radius exceeds the local turning radius")]
    OffsetCollision { vertex: usize },
    #[error("tube envelope is not a simple polygon: {0}")]
    EnvelopeNotSimple(#[source] GeomError),
    #[error("paired midpoint axis needs an even vertex count, got {0}")]
    OddVertexCount(usize),
    #[error("tube radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("tube axis is self-intersecting")]
    SelfIntersectingAxis,
    #[error("invalid medial configuration: {0}")]
    InvalidConfig(&'static str),
}

/// A polygonal-chain medial axis with one constant radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    axis: PolyChain,
    radius: f64,
}

impl Tube {
    pub fn new(axis: PolyChain, radius: f64) -> Result<Self, MedialError> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(MedialError::InvalidRadius(radius));
        }
        if axis.is_self_intersecting() {
            return Err(MedialError::SelfIntersectingAxis);
        }
        Ok(Tube { axis, radius })
    }

    pub fn axis(&self) -> &PolyChain {
        &self.axis
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn transformed(
        &self,
        f: impl Fn(Point2) -> Point2,
        radius_scale: f64,
    ) -> Result<Tube, MedialError> {
        Tube::new(self.axis.transformed(&f)?, self.radius * radius_scale)
    }
}

/// Tuning knobs for medial-axis extraction.
#[derive(Debug, Clone)]
pub struct MedialConfig {
    /// Number of medial points of the fitted axis.
    pub n_points: usize,
    /// Boundary resampling step; `None` picks min(bbox side) / 50.
    pub boundary_spacing: Option<f64>,
    /// Leaf branches with clearance below this fraction of the maximum
    /// clearance are trimmed.
    pub prune_clearance_fraction: f64,
    /// Chords per half-turn when reconstructing envelopes.
    pub cap_segments: usize,
}

impl Default for MedialConfig {
    fn default() -> Self {
        MedialConfig {
            n_points: 5,
            boundary_spacing: None,
            prune_clearance_fraction: 0.5,
            cap_segments: 8,
        }
    }
}

impl MedialConfig {
    pub fn validate(&self) -> Result<(), MedialError> {
        if self.n_points < 4 {
            return Err(MedialError::InvalidConfig("n_points must be >= 4"));
        }
        if !(self.prune_clearance_fraction > 0.0 && self.prune_clearance_fraction < 1.0) {
            return Err(MedialError::InvalidConfig(
                "prune_clearance_fraction must lie in (0, 1)",
            ));
        }
        if self.cap_segments == 0 {
            return Err(MedialError::InvalidConfig("cap_segments must be >= 1"));
        }
        if let Some(s) = self.boundary_spacing {
            if !(s > 0.0) {
                return Err(MedialError::InvalidConfig("boundary_spacing must be > 0"));
            }
        }
        Ok(())
    }

    fn spacing_for(&self, poly: &Polygon) -> f64 {
        self.boundary_spacing.unwrap_or_else(|| {
            let (lo, hi) = poly.bbox();
            ((hi.x - lo.x).min(hi.y - lo.y) / 50.0).max(1e-9)
        })
    }
}

/// A fitted tube together with the pre-extension chain the radius was
/// estimated on.
#[derive(Debug, Clone)]
pub struct TubeFit {
    pub tube: Tube,
    pub pruned_axis: PolyChain,
}

/// Straight/curved verdict for an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Curved,
    Straight,
}

fn nearest_ray_exit(poly: &Polygon, origin: Point2, dir: Point2) -> Result<Point2, MedialError> {
    let mut best = f64::INFINITY;
    for (a, b) in poly.edges() {
        let e = b - a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            continue;
        }
        let ao = a - origin;
        let t = ao.cross(e) / denom;
        let s = ao.cross(dir) / denom;
        if t > 1e-9 && (-1e-9..=1.0 + 1e-9).contains(&s) {
            best = best.min(t);
        }
    }
    if best.is_finite() {
        Ok(origin + dir * best)
    } else {
        Err(MedialError::ExtensionFailed)
    }
}

fn extend_to_boundary(chain: &PolyChain, poly: &Polygon) -> Result<PolyChain, MedialError> {
    let pts = chain.points();
    let n = pts.len();
    let dir_start = (pts[0] - pts[1]).normalized().ok_or(MedialError::ExtensionFailed)?;
    let dir_end = (pts[n - 1] - pts[n - 2]).normalized().ok_or(MedialError::ExtensionFailed)?;
    let hit_start = nearest_ray_exit(poly, pts[0], dir_start)?;
    let hit_end = nearest_ray_exit(poly, pts[n - 1], dir_end)?;
    let mut out = Vec::with_capacity(n + 2);
    out.push(hit_start);
    out.extend_from_slice(pts);
    out.push(hit_end);
    Ok(PolyChain::new(out)?)
}

fn extract_stages(
    poly: &Polygon,
    cfg: &MedialConfig,
) -> Result<(PolyChain, PolyChain), MedialError> {
    let spacing = cfg.spacing_for(poly);
    let g = graph::build_graph(poly, spacing)?;
    let alive = graph::prune(&g, cfg.prune_clearance_fraction)?;
    let raw = graph::diameter_path(&g, &alive)?;

    // collapse numerically coincident circumcenters, then flatten jitter
    let mut pts: Vec<Point2> = Vec::with_capacity(raw.len());
    let tol = spacing * 1e-9;
    for p in raw {
        if pts.last().map_or(true, |q| q.dist(p) > tol) {
            pts.push(p);
        }
    }
    if pts.len() < 2 {
        return Err(MedialError::TooThin { spacing });
    }
    // the diameter path has no inherent direction; fix one for determinism
    if (pts[0].x, pts[0].y) > (pts[pts.len() - 1].x, pts[pts.len() - 1].y) {
        pts.reverse();
    }
    let pruned = PolyChain::new(pts)?.simplify_rdp(spacing * 0.5);

    let extended = extend_to_boundary(&pruned, poly)?;
    let axis = extended.resample(cfg.n_points)?;
    Ok((pruned, axis))
}

/// Extract the medial axis of a polygon as a chain of `cfg.n_points` points
/// at uniform arc length, end-extended to the boundary.
pub fn extract_medial_axis(poly: &Polygon, cfg: &MedialConfig) -> Result<PolyChain, MedialError> {
    cfg.validate()?;
    extract_stages(poly, cfg).map(|(_, axis)| axis)
}

/// Fast path for annotations whose 2k vertices run along the top side and
/// back along the bottom: midpoints of vertex pairs (i, 2k-1-i).
pub fn paired_midpoint_axis(poly: &Polygon) -> Result<PolyChain, MedialError> {
    let v = poly.vertices();
    if v.len() % 2 != 0 {
        return Err(MedialError::OddVertexCount(v.len()));
    }
    let k = v.len() / 2;
    let mids: Vec<Point2> = (0..k).map(|i| (v[i] + v[v.len() - 1 - i]) * 0.5).collect();
    Ok(PolyChain::new(mids)?)
}

/// Mean clearance over `m` uniform arc-length samples of the pre-extension
/// chain. Errors out if any sample touches the boundary, which indicates the
/// chain was extended before radius estimation.
pub fn estimate_radius(poly: &Polygon, pruned_axis: &PolyChain, m: usize) -> Result<f64, MedialError> {
    clearance_profile(poly, pruned_axis, m).map(|c| c.iter().sum::<f64>() / c.len() as f64)
}

/// Relative clearance variation (max - min) / mean along the pre-extension
/// chain.
pub fn radius_variation(
    poly: &Polygon,
    pruned_axis: &PolyChain,
    m: usize,
) -> Result<f64, MedialError> {
    let c = clearance_profile(poly, pruned_axis, m)?;
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let max = c.iter().cloned().fold(f64::MIN, f64::max);
    let min = c.iter().cloned().fold(f64::MAX, f64::min);
    Ok((max - min) / mean)
}

fn clearance_profile(
    poly: &Polygon,
    axis: &PolyChain,
    m: usize,
) -> Result<Vec<f64>, MedialError> {
    let samples = axis.arc_length_sample(m)?;
    let (lo, hi) = poly.bbox();
    let eps = 1e-9 * (1.0 + (hi - lo).norm());
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let c = poly.distance_to_boundary(s.point);
            if c <= eps {
                Err(MedialError::AxisTouchesBoundary { sample: i })
            } else {
                Ok(c)
            }
        })
        .collect()
}

/// Largest pairwise difference between segment directions, folded into
/// [0, pi/2]. Any two distinct segments are compared, not just adjacent ones.
pub fn max_angle_difference(axis: &PolyChain) -> f64 {
    let n = axis.num_segments();
    let angles: Vec<f64> = (0..n).map(|i| axis.segment_angle(i)).collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max(fold_angle_diff(angles[i], angles[j]));
        }
    }
    worst
}

/// Curved iff some pair of segments differs in direction by strictly more
/// than `threshold` radians. Single-segment chains are straight.
pub fn classify_curvature(axis: &PolyChain, threshold: f64) -> Curvature {
    if max_angle_difference(axis) > threshold {
        Curvature::Curved
    } else {
        Curvature::Straight
    }
}

/// Default curvature threshold in radians (about six degrees).
pub const CURVATURE_THRESHOLD: f64 = 0.1;

/// Fit a tube: extract the axis, estimate the radius on the pre-extension
/// chain, return the extended and resampled axis with that radius.
pub fn fit_tube(poly: &Polygon, cfg: &MedialConfig) -> Result<Tube, MedialError> {
    fit_tube_full(poly, cfg).map(|f| f.tube)
}

/// Like [`fit_tube`] but keeps the pre-extension chain, which statistics
/// such as radius variation are computed on.
pub fn fit_tube_full(poly: &Polygon, cfg: &MedialConfig) -> Result<TubeFit, MedialError> {
    cfg.validate()?;
    let (pruned, axis) = extract_stages(poly, cfg)?;
    let radius = estimate_radius(poly, &pruned, RADIUS_SAMPLES)?;
    Ok(TubeFit {
        tube: Tube::new(axis, radius)?,
        pruned_axis: pruned,
    })
}

/// Fit a tube through the paired-midpoint fast path. The radius is the mean
/// half distance between paired vertices, which equals the mean inscribed
/// disk radius on near-constant-width bands.
pub fn fit_tube_paired(poly: &Polygon, cfg: &MedialConfig) -> Result<Tube, MedialError> {
    cfg.validate()?;
    let axis = paired_midpoint_axis(poly)?.resample(cfg.n_points)?;
    let v = poly.vertices();
    let k = v.len() / 2;
    let radius =
        (0..k).map(|i| v[i].dist(v[v.len() - 1 - i]) / 2.0).sum::<f64>() / k as f64;
    Tube::new(axis, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rectangle(w: f64, h: f64) -> Polygon {
        Polygon::from_xy(&[(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]).unwrap()
    }

    #[test]
    fn rectangle_axis_is_the_midline() {
        let poly = rectangle(10.0, 4.0);
        let axis = extract_medial_axis(&poly, &MedialConfig::default()).unwrap();
        assert_eq!(axis.num_points(), 5);
        let expect = [(0.0, 2.0), (2.5, 2.0), (5.0, 2.0), (7.5, 2.0), (10.0, 2.0)];
        for (p, (x, y)) in axis.points().iter().zip(expect) {
            assert_abs_diff_eq!(p.x, x, epsilon = 0.05);
            assert_abs_diff_eq!(p.y, y, epsilon = 0.05);
        }
    }

    #[test]
    fn rectangle_radius_is_half_height() {
        let fit = fit_tube_full(&rectangle(10.0, 4.0), &MedialConfig::default()).unwrap();
        assert_abs_diff_eq!(fit.tube.radius(), 2.0, epsilon = 0.02);
        // scale equivariance
        let scaled = rectangle(30.0, 12.0);
        let fit3 = fit_tube_full(&scaled, &MedialConfig::default()).unwrap();
        assert_abs_diff_eq!(fit3.tube.radius(), 6.0, epsilon = 0.06);
    }

    #[test]
    fn paired_midpoints_on_six_vertex_band() {
        let poly = Polygon::from_xy(&[
            (0.0, 4.0),
            (5.0, 5.0),
            (10.0, 4.0),
            (10.0, 0.0),
            (5.0, 1.0),
            (0.0, 0.0),
        ])
        .unwrap();
        let axis = paired_midpoint_axis(&poly).unwrap();
        let expect = [(0.0, 2.0), (5.0, 3.0), (10.0, 2.0)];
        // construction may have reversed the ring; accept either direction
        let pts = axis.points();
        let fwd = pts
            .iter()
            .zip(expect)
            .all(|(p, (x, y))| (p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12);
        let bwd = pts
            .iter()
            .rev()
            .zip(expect)
            .all(|(p, (x, y))| (p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12);
        assert!(fwd || bwd, "got {pts:?}");
    }

    #[test]
    fn paired_midpoints_rejects_odd_count() {
        let poly =
            Polygon::from_xy(&[(0.0, 0.0), (10.0, 0.0), (10.0, 4.0), (5.0, 5.0), (0.0, 4.0)])
                .unwrap();
        assert!(matches!(
            paired_midpoint_axis(&poly),
            Err(MedialError::OddVertexCount(5))
        ));
    }

    #[test]
    fn paired_rectangle_gives_midline_endpoints() {
        let axis = paired_midpoint_axis(&rectangle(10.0, 4.0)).unwrap();
        assert_eq!(axis.num_points(), 2);
        let ys: Vec<f64> = axis.points().iter().map(|p| p.y).collect();
        assert!(ys.iter().all(|&y| (y - 2.0).abs() < 1e-12));
    }

    #[test]
    fn estimate_radius_constant_clearance() {
        let poly = rectangle(10.0, 4.0);
        let chain = PolyChain::new(vec![Point2::new(2.0, 2.0), Point2::new(8.0, 2.0)]).unwrap();
        assert_abs_diff_eq!(estimate_radius(&poly, &chain, 100).unwrap(), 2.0);
        assert_abs_diff_eq!(radius_variation(&poly, &chain, 100).unwrap(), 0.0);
    }

    #[test]
    fn estimate_radius_rejects_extended_chain() {
        let poly = rectangle(10.0, 4.0);
        let extended =
            PolyChain::new(vec![Point2::new(0.0, 2.0), Point2::new(10.0, 2.0)]).unwrap();
        assert!(matches!(
            estimate_radius(&poly, &extended, 100),
            Err(MedialError::AxisTouchesBoundary { .. })
        ));
    }

    #[test]
    fn curvature_classification() {
        let straight = PolyChain::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(5.0, 0.0),
            Point2::new(10.0, 0.0),
        ])
        .unwrap();
        assert_eq!(classify_curvature(&straight, 0.1), Curvature::Straight);

        let bent = PolyChain::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.3),
        ])
        .unwrap();
        // angle difference is atan(0.3) ~ 0.2915 rad
        assert_abs_diff_eq!(max_angle_difference(&bent), 0.3f64.atan(), epsilon = 1e-12);
        assert_eq!(classify_curvature(&bent, 0.1), Curvature::Curved);

        // exactly the threshold stays straight: strictly-greater test
        let exact = PolyChain::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0 + 0.1f64.cos(), 0.1f64.sin()),
        ])
        .unwrap();
        assert_eq!(classify_curvature(&exact, max_angle_difference(&exact)), Curvature::Straight);

        let single = PolyChain::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]).unwrap();
        assert_eq!(classify_curvature(&single, 0.1), Curvature::Straight);
    }

    #[test]
    fn fit_tube_rectangle_round_trip() {
        let poly = rectangle(10.0, 4.0);
        let cfg = MedialConfig::default();
        let tube = fit_tube(&poly, &cfg).unwrap();
        assert_eq!(tube.axis().num_points(), 5);
        assert_abs_diff_eq!(tube.radius(), 2.0, epsilon = 0.02);
        // translated copy gives the translated tube
        let moved = poly.transformed(|p| p + Point2::new(7.0, -3.0)).unwrap();
        let tube2 = fit_tube(&moved, &cfg).unwrap();
        assert_abs_diff_eq!(tube2.radius(), tube.radius(), epsilon = 1e-6);
        let d = tube2.axis().points()[2] - tube.axis().points()[2];
        assert_abs_diff_eq!(d.x, 7.0, epsilon = 0.05);
        assert_abs_diff_eq!(d.y, -3.0, epsilon = 0.05);
    }

    #[test]
    fn axis_endpoints_reach_the_boundary() {
        let poly = rectangle(10.0, 4.0);
        let axis = extract_medial_axis(&poly, &MedialConfig::default()).unwrap();
        assert!(poly.distance_to_boundary(axis.start()) < 0.05);
        assert!(poly.distance_to_boundary(axis.end()) < 0.05);
    }
}
