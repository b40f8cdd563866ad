//! Reconstruct the region polygon of a tube: the axis offset by the radius
//! on both sides, closed with rounded end caps.

use super::{MedialError, Tube};
use crate::geom::{Point2, Polygon};

const ANG_EPS: f64 = 1e-9;

/// Emit a fan of tangent-line intersection vertices approximating an arc of
/// radius `r` around `center`, from angle `a0` sweeping by `sweep`.
///
/// Consecutive tangent lines (including the adjoining straight offsets, which
/// are themselves tangents at the arc endpoints) intersect at radius
/// `r / cos(step/2)`, so the polygonal boundary always contains the true arc
/// and overshoots it by O(sweep^2 / k^2).
fn arc_fan(out: &mut Vec<Point2>, center: Point2, a0: f64, sweep: f64, r: f64, cap_segments: usize) {
    let k = ((sweep.abs() / (std::f64::consts::PI / cap_segments as f64)).ceil() as usize).max(1);
    let half_step = sweep.abs() / (2.0 * k as f64);
    let rad = r / half_step.cos();
    for j in 1..=k {
        let ang = a0 + (j as f64 - 0.5) * sweep / k as f64;
        out.push(center + Point2::from_angle(ang) * rad);
    }
}

/// Left-side offset polyline of `pts` at distance `r`.
///
/// Convex turns get an arc fan; concave turns are mitered, trimming both
/// adjacent offset segments. If a trim consumes a whole segment the offset
/// self-overlaps and the offending vertex index is returned.
fn offset_side(
    pts: &[Point2],
    r: f64,
    cap_segments: usize,
    out: &mut Vec<Point2>,
) -> Result<(), usize> {
    let nseg = pts.len() - 1;
    let dirs: Vec<Point2> = (0..nseg)
        .map(|i| (pts[i + 1] - pts[i]).normalized().expect("chain has no zero segment"))
        .collect();
    let normals: Vec<Point2> = dirs.iter().map(|d| d.rot90()).collect();
    let lens: Vec<f64> = (0..nseg).map(|i| pts[i + 1].dist(pts[i])).collect();

    #[derive(Clone, Copy)]
    enum Join {
        Straight,
        Convex(f64),
        Concave,
    }
    let mut joins = vec![Join::Straight; nseg.saturating_sub(1)];
    let mut start_trim = vec![0.0f64; nseg];
    let mut end_trim = lens.clone();
    for v in 1..nseg {
        let turn = dirs[v - 1].cross(dirs[v]).atan2(dirs[v - 1].dot(dirs[v]));
        if turn > ANG_EPS {
            let cut = r * (turn / 2.0).tan();
            end_trim[v - 1] -= cut;
            start_trim[v] += cut;
            joins[v - 1] = Join::Concave;
        } else if turn < -ANG_EPS {
            joins[v - 1] = Join::Convex(turn);
        }
    }
    for i in 0..nseg {
        if end_trim[i] < start_trim[i] - 1e-9 * (1.0 + lens[i]) {
            // blame the concave join that ate the segment
            return Err(if start_trim[i] > lens[i] - end_trim[i] { i } else { i + 1 });
        }
    }

    for i in 0..nseg {
        let base = pts[i] + normals[i] * r;
        out.push(base + dirs[i] * start_trim[i]);
        out.push(base + dirs[i] * end_trim[i]);
        if i + 1 < nseg {
            if let Join::Convex(turn) = joins[i] {
                arc_fan(out, pts[i + 1], normals[i].angle(), turn, r, cap_segments);
            }
        }
    }
    Ok(())
}

fn dedupe(points: Vec<Point2>, tol: f64) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().map_or(true, |q| q.dist(p) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(*out.last().unwrap()) <= tol {
        out.pop();
    }
    out
}

/// Reconstruct the tube's region as a simple polygon.
///
/// The boundary is the left offset polyline, a rounded end cap, the right
/// offset polyline and the start cap; caps and convex joins are approximated
/// by `cap_segments` tangent chords per half turn, so the polygon contains
/// the true region and its area overshoots by O(r^2 / cap_segments^2).
pub fn tube_envelope(tube: &Tube, cap_segments: usize) -> Result<Polygon, MedialError> {
    if cap_segments == 0 {
        return Err(MedialError::InvalidConfig("cap_segments must be >= 1"));
    }
    let pts = tube.axis().points();
    let r = tube.radius();
    let n = pts.len();
    let mut boundary = Vec::new();

    offset_side(pts, r, cap_segments, &mut boundary)
        .map_err(|v| MedialError::OffsetCollision { vertex: v })?;
    // end cap: from the forward side's last normal, half a turn clockwise
    let d_last = (pts[n - 1] - pts[n - 2]).normalized().unwrap();
    arc_fan(
        &mut boundary,
        pts[n - 1],
        d_last.rot90().angle(),
        -std::f64::consts::PI,
        r,
        cap_segments,
    );

    let rev: Vec<Point2> = pts.iter().rev().copied().collect();
    offset_side(&rev, r, cap_segments, &mut boundary)
        .map_err(|v| MedialError::OffsetCollision { vertex: n - 1 - v })?;
    let d_first = (pts[0] - pts[1]).normalized().unwrap();
    arc_fan(
        &mut boundary,
        pts[0],
        d_first.rot90().angle(),
        -std::f64::consts::PI,
        r,
        cap_segments,
    );

    let scale = tube.axis().length() + r;
    let boundary = dedupe(boundary, 1e-10 * scale);
    Polygon::new(boundary).map_err(MedialError::EnvelopeNotSimple)
}
