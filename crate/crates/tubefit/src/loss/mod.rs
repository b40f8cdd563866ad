//! Alignment loss between a predicted and a ground-truth tube.
//!
//! The axis term compares the two medial axes as *curves*: both are sampled
//! at uniform arc length, so chains that trace the same curve with different
//! vertex lists score identically. Two Gaussian kernels enter it: one on the
//! point-to-curve distance and one on sin^2 of the tangent angle difference,
//! blended by `alpha`. Radius and endpoints are plain L1 terms, and a hinge
//! on the shortest predicted segment keeps medial points from collapsing
//! together.
//!
//! The total is the weighted sum
//! `radius + axis + endpoints + spread` with equal default weights.

mod descent;
mod grad;

pub use descent::{fit_tube_descent, DescentOutcome};
pub use grad::{fd_gradient, grad_loss_tube, loss_total_frozen, FrozenSamples, NonSmooth, TubeGradient};

use crate::geom::{GeomError, PolyChain};
use crate::medial::Tube;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("predicted tube has {got} medial points but the configuration expects {expected}")]
    PointCountMismatch { expected: usize, got: usize },
    #[error("invalid loss configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("descent diverged to a non-finite loss; trajectory kept")]
    Diverged { trajectory: Vec<f64> },
}

/// Weights of the four loss terms. Cross-validated equal by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeights {
    pub radius: f64,
    pub axis: f64,
    pub endpoints: f64,
    pub spread: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        TermWeights { radius: 1.0, axis: 1.0, endpoints: 1.0, spread: 1.0 }
    }
}

/// Loss hyperparameters.
#[derive(Debug, Clone)]
pub struct LossConfig {
    /// Blend between the distance kernel (weight `alpha`) and the tangent
    /// kernel (weight `1 - alpha`).
    pub alpha: f64,
    /// Bandwidth of the distance kernel, in pixels. `None` adapts it to the
    /// ground-truth tube radius, the natural length scale of an instance.
    pub sigma_abs: Option<f64>,
    /// Bandwidth of the tangent kernel; its input sin^2 lies in [0, 1].
    pub sigma_tan: f64,
    /// Samples per curve for the kernel integrals.
    pub n_samples: usize,
    /// Medial points the prediction must carry.
    pub n_points: usize,
    pub weights: TermWeights,
    /// Also sample the ground truth and average both directions of the axis
    /// kernels instead of sampling the prediction only.
    pub symmetric: bool,
    /// Divide the pixel-valued terms (radius, endpoints, spread) by the
    /// ground-truth radius for scale-free comparisons.
    pub normalize_by_radius: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 0.5,
            sigma_abs: None,
            sigma_tan: 0.5,
            n_samples: 100,
            n_points: 5,
            weights: TermWeights::default(),
            symmetric: false,
            normalize_by_radius: false,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(LossError::InvalidConfig("alpha must lie in [0, 1]"));
        }
        if let Some(s) = self.sigma_abs {
            if !(s > 0.0) {
                return Err(LossError::InvalidConfig("sigma_abs must be > 0"));
            }
        }
        if !(self.sigma_tan > 0.0) {
            return Err(LossError::InvalidConfig("sigma_tan must be > 0"));
        }
        if self.n_samples < 2 {
            return Err(LossError::InvalidConfig("n_samples must be >= 2"));
        }
        if self.n_points < 2 {
            return Err(LossError::InvalidConfig("n_points must be >= 2"));
        }
        let w = &self.weights;
        if w.radius < 0.0 || w.axis < 0.0 || w.endpoints < 0.0 || w.spread < 0.0 {
            return Err(LossError::InvalidConfig("term weights must be >= 0"));
        }
        Ok(())
    }

    pub(crate) fn resolve_sigma_abs(&self, gt: &Tube) -> f64 {
        self.sigma_abs.unwrap_or_else(|| gt.radius())
    }
}

/// Per-term values of one loss evaluation.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub radius_term: f64,
    pub axis_term: f64,
    pub endpoints_term: f64,
    pub spread_term: f64,
    /// Weighted sum of the four terms.
    pub total: f64,
    pub s_abs: f64,
    pub s_tan: f64,
}

/// Mean over `m` uniform arc-length samples of the prediction of
/// `exp(-d^2 / (2 sigma^2))`, `d` being the distance to the ground-truth
/// curve. 1 when the curves coincide, decaying with separation.
pub fn s_abs(pred: &PolyChain, gt: &PolyChain, sigma: f64, m: usize) -> Result<f64, LossError> {
    let samples = pred.arc_length_sample(m)?;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let sum: f64 = samples
        .iter()
        .map(|s| {
            let d = gt.project(s.point).distance;
            (-d * d * inv).exp()
        })
        .sum();
    Ok(sum / m as f64)
}

/// Mean of `exp(-sin^2(theta_pred - theta_gt) / (2 sigma_tan^2))` over the
/// same sampling; the ground-truth tangent is taken at the closest point of
/// each sample. sin^2 makes the comparison direction-free.
pub fn s_tan(pred: &PolyChain, gt: &PolyChain, sigma_tan: f64, m: usize) -> Result<f64, LossError> {
    let samples = pred.arc_length_sample(m)?;
    let inv = 1.0 / (2.0 * sigma_tan * sigma_tan);
    let sum: f64 = samples
        .iter()
        .map(|s| {
            let proj = gt.project(s.point);
            let sin = (s.tangent_angle - proj.tangent_angle).sin();
            (-sin * sin * inv).exp()
        })
        .sum();
    Ok(sum / m as f64)
}

/// Axis alignment: `1 - alpha * s_abs - (1 - alpha) * s_tan`, in [0, 1].
///
/// Requires an explicit `sigma_abs` in the configuration since no
/// ground-truth radius is available at this level.
pub fn loss_axis(pred: &PolyChain, gt: &PolyChain, cfg: &LossConfig) -> Result<f64, LossError> {
    cfg.validate()?;
    let sigma = cfg
        .sigma_abs
        .ok_or(LossError::InvalidConfig("sigma_abs must be set when no gt tube is given"))?;
    let (sa, st) = axis_kernels(pred, gt, sigma, cfg)?;
    Ok(1.0 - cfg.alpha * sa - (1.0 - cfg.alpha) * st)
}

fn axis_kernels(
    pred: &PolyChain,
    gt: &PolyChain,
    sigma: f64,
    cfg: &LossConfig,
) -> Result<(f64, f64), LossError> {
    let sa = s_abs(pred, gt, sigma, cfg.n_samples)?;
    let st = s_tan(pred, gt, cfg.sigma_tan, cfg.n_samples)?;
    if cfg.symmetric {
        let sa2 = s_abs(gt, pred, sigma, cfg.n_samples)?;
        let st2 = s_tan(gt, pred, cfg.sigma_tan, cfg.n_samples)?;
        Ok(((sa + sa2) / 2.0, (st + st2) / 2.0))
    } else {
        Ok((sa, st))
    }
}

/// Hinge keeping medial points spread out: `max(0, d_threshold - d_min)`
/// where `d_min` is the shortest predicted segment and
/// `d_threshold = l / (2 (n_points - 1))` with `l` the ground-truth axis
/// length.
pub fn loss_spread(pred: &PolyChain, gt_length: f64, n_points: usize) -> f64 {
    let d_threshold = gt_length / (2.0 * (n_points - 1) as f64);
    let (_, d_min) = pred.min_segment();
    (d_threshold - d_min).max(0.0)
}

/// L1 distance between matched endpoints, minimized over the two possible
/// endpoint pairings: chain direction is an annotation artifact, the
/// endpoints themselves are not.
pub fn loss_endpoints(pred: &PolyChain, gt: &PolyChain) -> f64 {
    let l1 = |a: crate::geom::Point2, b: crate::geom::Point2| (a.x - b.x).abs() + (a.y - b.y).abs();
    let same = l1(pred.start(), gt.start()) + l1(pred.end(), gt.end());
    let flipped = l1(pred.start(), gt.end()) + l1(pred.end(), gt.start());
    same.min(flipped)
}

/// Plain L1 between the radii.
pub fn loss_radius(pred_radius: f64, gt_radius: f64) -> f64 {
    (pred_radius - gt_radius).abs()
}

/// Full loss between chains, used by both the public tube entry point and
/// the descent loop (which must evaluate candidates that are not yet valid
/// tubes).
pub(crate) fn report_for_chain(
    pred_axis: &PolyChain,
    pred_radius: f64,
    gt: &Tube,
    cfg: &LossConfig,
) -> Result<LossReport, LossError> {
    let sigma = cfg.resolve_sigma_abs(gt);
    let (sa, st) = axis_kernels(pred_axis, gt.axis(), sigma, cfg)?;
    let axis_term = 1.0 - cfg.alpha * sa - (1.0 - cfg.alpha) * st;
    let norm = if cfg.normalize_by_radius { 1.0 / gt.radius() } else { 1.0 };
    let radius_term = loss_radius(pred_radius, gt.radius()) * norm;
    let endpoints_term = loss_endpoints(pred_axis, gt.axis()) * norm;
    let spread_term = loss_spread(pred_axis, gt.axis().length(), cfg.n_points) * norm;
    let w = &cfg.weights;
    let total = w.radius * radius_term
        + w.axis * axis_term
        + w.endpoints * endpoints_term
        + w.spread * spread_term;
    Ok(LossReport {
        radius_term,
        axis_term,
        endpoints_term,
        spread_term,
        total,
        s_abs: sa,
        s_tan: st,
    })
}

/// Evaluate all four terms between a predicted and a ground-truth tube.
pub fn loss_tube(pred: &Tube, gt: &Tube, cfg: &LossConfig) -> Result<LossReport, LossError> {
    cfg.validate()?;
    if pred.axis().num_points() != cfg.n_points {
        return Err(LossError::PointCountMismatch {
            expected: cfg.n_points,
            got: pred.axis().num_points(),
        });
    }
    report_for_chain(pred.axis(), pred.radius(), gt, cfg)
}
