//! Gradient descent on the total tube loss with backtracking line search.
//!
//! A desk-scale stand-in for a trained regression head: it demonstrates that
//! the loss surface is descendable from perturbed initializations.

use super::grad::{grad_for_chain, FrozenSamples};
use super::{report_for_chain, LossConfig, LossError};
use crate::geom::{Point2, PolyChain};
use crate::medial::Tube;

const GRAD_TOL: f64 = 1e-6;
const MAX_BACKTRACKS: usize = 48;

/// Result of a descent run.
#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub tube: Tube,
    /// Total loss after every accepted step, starting with the initial loss.
    /// Non-increasing by construction.
    pub trajectory: Vec<f64>,
    /// True when the gradient norm dropped below 1e-6 or no further descent
    /// step exists; false when the iteration budget ran out.
    pub converged: bool,
}

/// Minimize the total loss from `init` toward `gt` by gradient descent.
///
/// Each iteration recomputes the frozen sample allocation at the current
/// geometry, takes the analytic gradient, and backtracks from a step size
/// that starts at twice the previously accepted one (clamped to 64x `step`).
/// Steps are only accepted on strict decrease, so the trajectory is
/// non-increasing; when no decrease exists the run stops as converged.
pub fn fit_tube_descent(
    init: &Tube,
    gt: &Tube,
    cfg: &LossConfig,
    max_iters: usize,
    step: f64,
) -> Result<DescentOutcome, LossError> {
    cfg.validate()?;
    if init.axis().num_points() != cfg.n_points {
        return Err(LossError::PointCountMismatch {
            expected: cfg.n_points,
            got: init.axis().num_points(),
        });
    }
    if !(step > 0.0) {
        return Err(LossError::InvalidConfig("step must be > 0"));
    }

    let eval = |pts: &[Point2], r: f64| -> Option<f64> {
        if !(r > 0.0) {
            return None;
        }
        let chain = PolyChain::new(pts.to_vec()).ok()?;
        report_for_chain(&chain, r, gt, cfg).ok().map(|rep| rep.total)
    };

    let mut points = init.axis().points().to_vec();
    let mut radius = init.radius();
    let mut loss = eval(&points, radius)
        .ok_or(LossError::InvalidConfig("initial tube does not evaluate"))?;
    let mut trajectory = vec![loss];
    let mut eta = step;
    let mut converged = false;

    for _ in 0..max_iters {
        let chain = PolyChain::new(points.clone())?;
        let frozen = FrozenSamples::capture(&chain, gt, cfg)?;
        let grad = grad_for_chain(&points, radius, &frozen, gt, cfg);
        if !grad.norm().is_finite() || !loss.is_finite() {
            return Err(LossError::Diverged { trajectory });
        }
        if grad.norm() < GRAD_TOL {
            converged = true;
            break;
        }

        let mut try_eta = (eta * 2.0).min(step * 64.0);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand_pts: Vec<Point2> = points
                .iter()
                .zip(&grad.d_points)
                .map(|(&p, &g)| p - g * try_eta)
                .collect();
            let cand_r = radius - grad.d_radius * try_eta;
            if let Some(cand_loss) = eval(&cand_pts, cand_r) {
                if cand_loss < loss - 1e-15 * (1.0 + loss.abs()) {
                    accepted = Some((cand_pts, cand_r, cand_loss, try_eta));
                    break;
                }
            }
            try_eta /= 2.0;
        }
        match accepted {
            Some((p, r, l, e)) => {
                points = p;
                radius = r;
                loss = l;
                eta = e;
                trajectory.push(loss);
            }
            None => {
                // no descent direction at this kink or minimum
                converged = true;
                break;
            }
        }
    }

    let tube = Tube::new(PolyChain::new(points)?, radius)?;
    Ok(DescentOutcome { tube, trajectory, converged })
}

impl From<crate::medial::MedialError> for LossError {
    fn from(e: crate::medial::MedialError) -> Self {
        match e {
            crate::medial::MedialError::Geom(g) => LossError::Geom(g),
            _ => LossError::InvalidConfig("descent produced an invalid tube"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tube(pts: &[(f64, f64)], r: f64) -> Tube {
        Tube::new(
            PolyChain::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap(),
            r,
        )
        .unwrap()
    }

    fn gt_tube() -> Tube {
        tube(&[(0.0, 0.0), (10.0, 1.0), (20.0, 0.0), (30.0, -1.5), (40.0, 0.0)], 4.0)
    }

    #[test]
    fn identity_returns_immediately() {
        let gt = gt_tube();
        let out = fit_tube_descent(&gt, &gt, &LossConfig::default(), 100, 1.0).unwrap();
        assert!(out.converged);
        assert_eq!(out.trajectory.len(), 1);
        assert_abs_diff_eq!(out.trajectory[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn recovers_scaled_radius() {
        let gt = gt_tube();
        let init = Tube::new(gt.axis().clone(), gt.radius() * 1.3).unwrap();
        let out = fit_tube_descent(&init, &gt, &LossConfig::default(), 200, 1.0).unwrap();
        assert_abs_diff_eq!(out.tube.radius(), gt.radius(), epsilon = 1e-3);
        for w in out.trajectory.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trajectory increased");
        }
    }

    #[test]
    fn trajectory_non_increasing_from_noisy_start() {
        let gt = gt_tube();
        let init = tube(
            &[(1.0, 1.5), (9.0, -0.5), (21.0, 1.2), (29.0, -3.0), (39.0, 1.0)],
            5.0,
        );
        let out = fit_tube_descent(&init, &gt, &LossConfig::default(), 300, 1.0).unwrap();
        for w in out.trajectory.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(out.trajectory.last().unwrap() < &out.trajectory[0]);
    }
}
