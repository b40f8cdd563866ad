//! Polygonal PASCAL-VOC style evaluation: greedy IoU matching, PR curves,
//! average precision, maximum F-score and subset recall.

use crate::geom::{polygon_iou, Polygon};
use crate::medial::{classify_curvature, extract_medial_axis, Curvature, MedialConfig, MedialError, CURVATURE_THRESHOLD};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation needs at least one ground-truth instance")]
    NoGroundTruth,
    #[error("the requested subset contains no ground-truth instances")]
    EmptySubset,
}

/// One annotated instance with its curvature subset label.
#[derive(Debug, Clone)]
pub struct GroundTruthInstance {
    pub image_id: String,
    pub polygon: Polygon,
    pub subset: Curvature,
}

impl GroundTruthInstance {
    /// Label the instance by fitting its medial axis and classifying the
    /// largest pairwise segment-angle difference against 0.1 rad.
    pub fn labeled(
        image_id: impl Into<String>,
        polygon: Polygon,
        cfg: &MedialConfig,
    ) -> Result<Self, MedialError> {
        let axis = extract_medial_axis(&polygon, cfg)?;
        Ok(GroundTruthInstance {
            image_id: image_id.into(),
            polygon,
            subset: classify_curvature(&axis, CURVATURE_THRESHOLD),
        })
    }
}

/// A detection reduced to its polygon (tube envelopes are converted upstream).
#[derive(Debug, Clone)]
pub struct EvalDetection {
    pub image_id: String,
    pub polygon: Polygon,
    pub score: f64,
}

/// Result of greedy matching.
#[derive(Debug, Clone)]
pub struct MatchOutcome {
    /// (score, is_true_positive) in descending score order.
    pub labels: Vec<(f64, bool)>,
    /// Per ground-truth instance: whether some detection matched it.
    pub gt_matched: Vec<bool>,
    /// Detections referencing images with no ground truth.
    pub warnings: Vec<String>,
}

/// Greedy matching: detections in descending score order (ties by input
/// index) take the highest-IoU unmatched ground truth of their image; a
/// detection is a true positive iff that IoU strictly exceeds the
/// threshold. Every ground truth matches at most once.
pub fn match_detections(
    dets: &[EvalDetection],
    gts: &[GroundTruthInstance],
    iou_threshold: f64,
) -> MatchOutcome {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).unwrap().then(a.cmp(&b)));

    let mut gt_matched = vec![false; gts.len()];
    let mut labels = Vec::with_capacity(dets.len());
    let mut warnings = Vec::new();
    for &di in &order {
        let det = &dets[di];
        let known_image = gts.iter().any(|g| g.image_id == det.image_id);
        if !known_image {
            warnings.push(format!(
                "detection {} references image '{}' with no ground truth; counted as false positive",
                di, det.image_id
            ));
            labels.push((det.score, false));
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_matched[gi] || gt.image_id != det.image_id {
                continue;
            }
            let iou = polygon_iou(&det.polygon, &gt.polygon);
            let better = match best {
                None => true,
                Some((_, b)) => iou > b,
            };
            if better {
                best = Some((gi, iou));
            }
        }
        match best {
            Some((gi, iou)) if iou > iou_threshold => {
                gt_matched[gi] = true;
                labels.push((det.score, true));
            }
            _ => labels.push((det.score, false)),
        }
    }
    MatchOutcome { labels, gt_matched, warnings }
}

/// Precision-recall summary of a ranked label list.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// (precision, recall) after each detection, in descending score order.
    pub pr_points: Vec<(f64, f64)>,
    /// All-points interpolated AP: area under the monotone precision
    /// envelope.
    pub average_precision: f64,
    pub max_f: f64,
    pub p_at_max_f: f64,
    pub r_at_max_f: f64,
    pub n_gt: usize,
    pub n_det: usize,
}

/// Harmonic mean of precision and recall.
pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Build the PR curve, AP and the maximum-F operating point from ranked
/// (score, is_tp) labels.
pub fn pr_curve(labels: &[(f64, bool)], n_gt: usize) -> Result<EvalReport, EvalError> {
    if n_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let mut ranked = labels.to_vec();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut pr_points = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    for (k, &(_, is_tp)) in ranked.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        let precision = tp as f64 / (k + 1) as f64;
        let recall = tp as f64 / n_gt as f64;
        pr_points.push((precision, recall));
    }

    // monotone precision envelope, then sum over recall increments
    let mut average_precision = 0.0;
    {
        let n = pr_points.len();
        let mut envelope = vec![0.0; n];
        let mut running = 0.0;
        for i in (0..n).rev() {
            running = running.max(pr_points[i].0);
            envelope[i] = running;
        }
        let mut prev_recall = 0.0;
        for i in 0..n {
            let r = pr_points[i].1;
            if r > prev_recall {
                average_precision += (r - prev_recall) * envelope[i];
                prev_recall = r;
            }
        }
    }

    let mut max_f = 0.0;
    let mut p_at_max_f = 0.0;
    let mut r_at_max_f = 0.0;
    for &(p, r) in &pr_points {
        let f = f_score(p, r);
        if f > max_f {
            max_f = f;
            p_at_max_f = p;
            r_at_max_f = r;
        }
    }

    Ok(EvalReport {
        n_det: pr_points.len(),
        pr_points,
        average_precision,
        max_f,
        p_at_max_f,
        r_at_max_f,
        n_gt,
    })
}

/// Fraction of the subset's ground truths recovered by any detection.
///
/// Matching runs over the full ground-truth set, so instances of the other
/// subset still absorb their detections; they just do not enter the
/// denominator.
pub fn subset_recall(
    dets: &[EvalDetection],
    gts: &[GroundTruthInstance],
    subset: Curvature,
    iou_threshold: f64,
) -> Result<f64, EvalError> {
    let total = gts.iter().filter(|g| g.subset == subset).count();
    if total == 0 {
        return Err(EvalError::EmptySubset);
    }
    let outcome = match_detections(dets, gts, iou_threshold);
    let hit = gts
        .iter()
        .zip(&outcome.gt_matched)
        .filter(|(g, &m)| g.subset == subset && m)
        .count();
    Ok(hit as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square(x0: f64, y0: f64, side: f64) -> Polygon {
        Polygon::from_xy(&[(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)])
            .unwrap()
    }

    fn gt(image: &str, poly: Polygon) -> GroundTruthInstance {
        GroundTruthInstance { image_id: image.into(), polygon: poly, subset: Curvature::Straight }
    }

    fn det(image: &str, poly: Polygon, score: f64) -> EvalDetection {
        EvalDetection { image_id: image.into(), polygon: poly, score }
    }

    #[test]
    fn single_match_rule() {
        let gts = vec![gt("a", square(0.0, 0.0, 2.0))];
        let dets = vec![
            det("a", square(0.1, 0.0, 2.0), 0.9),
            det("a", square(0.0, 0.1, 2.0), 0.8),
        ];
        let out = match_detections(&dets, &gts, 0.5);
        assert_eq!(out.labels, vec![(0.9, true), (0.8, false)]);
    }

    #[test]
    fn exact_threshold_is_a_false_positive() {
        // containment giving IoU exactly 0.5
        let gts = vec![gt("a", square(0.0, 0.0, 2.0))];
        let half = Polygon::from_xy(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_eq!(polygon_iou(&gts[0].polygon, &half), 0.5);
        let out = match_detections(&[det("a", half, 0.9)], &gts, 0.5);
        assert_eq!(out.labels, vec![(0.9, false)]);
    }

    #[test]
    fn unknown_image_yields_warning_fp() {
        let gts = vec![gt("a", square(0.0, 0.0, 2.0))];
        let out = match_detections(&[det("zzz", square(0.0, 0.0, 2.0), 0.9)], &gts, 0.5);
        assert_eq!(out.labels, vec![(0.9, false)]);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn pr_curve_tiny_fixture() {
        let rep = pr_curve(&[(0.9, true), (0.8, false)], 1).unwrap();
        assert_eq!(rep.pr_points, vec![(1.0, 1.0), (0.5, 1.0)]);
        assert_abs_diff_eq!(rep.max_f, 1.0);
        assert_abs_diff_eq!(rep.average_precision, 1.0);
        assert_eq!((rep.n_gt, rep.n_det), (1, 2));
    }

    #[test]
    fn pr_curve_all_false_positives() {
        let rep = pr_curve(&[(0.9, false), (0.8, false)], 3).unwrap();
        assert_abs_diff_eq!(rep.average_precision, 0.0);
        assert_abs_diff_eq!(rep.max_f, 0.0);
    }

    #[test]
    fn pr_curve_rejects_zero_gt() {
        assert!(matches!(pr_curve(&[(0.9, true)], 0), Err(EvalError::NoGroundTruth)));
    }

    #[test]
    fn reported_f_matches_formula() {
        // the headline arithmetic: P 87.65, R 80.00 -> F 83.65
        let f = f_score(0.8765, 0.8000);
        assert_abs_diff_eq!(f, 0.8365, epsilon = 2e-4);
        let f2 = f_score(0.8425, 0.7350);
        assert_abs_diff_eq!(f2, 0.7851, epsilon = 2e-4);
    }

    #[test]
    fn max_f_invariant_to_trailing_zero_scores() {
        let mut labels = vec![(0.9, true), (0.7, true), (0.5, false)];
        let base = pr_curve(&labels, 2).unwrap();
        labels.extend([(0.0, false); 5]);
        let padded = pr_curve(&labels, 2).unwrap();
        assert_abs_diff_eq!(base.max_f, padded.max_f, epsilon = 1e-12);
    }

    #[test]
    fn subset_recall_absorbs_excluded_matches() {
        let mut g1 = gt("a", square(0.0, 0.0, 2.0));
        g1.subset = Curvature::Curved;
        let g2 = gt("a", square(10.0, 0.0, 2.0));
        let gts = vec![g1, g2];
        // one detection covering only the straight instance
        let dets = vec![det("a", square(10.0, 0.1, 2.0), 0.9)];
        assert_abs_diff_eq!(subset_recall(&dets, &gts, Curvature::Straight, 0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(subset_recall(&dets, &gts, Curvature::Curved, 0.5).unwrap(), 0.0);
        // detections covering both
        let dets = vec![
            det("a", square(0.0, 0.1, 2.0), 0.8),
            det("a", square(10.0, 0.1, 2.0), 0.9),
        ];
        assert_abs_diff_eq!(subset_recall(&dets, &gts, Curvature::Curved, 0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(subset_recall(&dets, &gts, Curvature::Straight, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn subset_recall_rejects_empty_subset() {
        let gts = vec![gt("a", square(0.0, 0.0, 2.0))];
        assert!(matches!(
            subset_recall(&[], &gts, Curvature::Curved, 0.5),
            Err(EvalError::EmptySubset)
        ));
    }

    #[test]
    fn duplicate_detections_single_tp_stable() {
        let gts = vec![gt("a", square(0.0, 0.0, 2.0))];
        let d = det("a", square(0.0, 0.0, 2.0), 0.5);
        let out = match_detections(&[d.clone(), d.clone(), d], &gts, 0.4);
        let tp_count = out.labels.iter().filter(|(_, t)| *t).count();
        assert_eq!(tp_count, 1);
    }
}
