//! Detection post-processing: soft-NMS over axis-aligned boxes and hard NMS
//! over tube envelopes via polygonal intersection.

use crate::geom::polygon_iou;
use crate::medial::{tube_envelope, MedialError, Tube};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PostprocessError {
    #[error("invalid box: need xmin < xmax and ymin < ymax, got {0:?}")]
    InvalidBox([f64; 4]),
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("envelope construction failed for detection {index} on image {image_id}: {source}")]
    Envelope {
        index: usize,
        image_id: String,
        #[source]
        source: MedialError,
    },
}

/// An axis-aligned box detection, `[xmin, ymin, xmax, ymax]` in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDetection {
    bbox: [f64; 4],
    score: f64,
}

impl BoxDetection {
    pub fn new(bbox: [f64; 4], score: f64) -> Result<Self, PostprocessError> {
        if !(bbox[0] < bbox[2] && bbox[1] < bbox[3]) || bbox.iter().any(|v| !v.is_finite()) {
            return Err(PostprocessError::InvalidBox(bbox));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(PostprocessError::InvalidScore(score));
        }
        Ok(BoxDetection { bbox, score })
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// A tube detection on one image.
#[derive(Debug, Clone)]
pub struct TubeDetection {
    pub tube: Tube,
    pub score: f64,
    pub image_id: String,
}

/// IoU of two axis-aligned boxes.
pub fn box_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let w = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let h = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = w * h;
    let area_a = (a[2] - a[0]) * (a[3] - a[1]);
    let area_b = (b[2] - b[0]) * (b[3] - b[1]);
    let union = area_a + area_b - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Soft-NMS parameters. Gaussian decay `exp(-iou^2 / decay_sigma)` is
/// applied to boxes overlapping the selected one beyond `iou_threshold`.
#[derive(Debug, Clone)]
pub struct SoftNmsConfig {
    pub iou_threshold: f64,
    pub decay_sigma: f64,
    pub score_floor: f64,
}

impl Default for SoftNmsConfig {
    fn default() -> Self {
        SoftNmsConfig { iou_threshold: 0.5, decay_sigma: 0.5, score_floor: 0.001 }
    }
}

/// Greedy soft-NMS: repeatedly take the highest-scoring box, decay the
/// scores of boxes overlapping it beyond the IoU threshold, and drop boxes
/// falling below the score floor. Ties break by input index, so the result
/// does not depend on input order beyond that index.
pub fn soft_nms(dets: &[BoxDetection], cfg: &SoftNmsConfig) -> Vec<BoxDetection> {
    let mut pool: Vec<(usize, [f64; 4], f64)> =
        dets.iter().enumerate().map(|(i, d)| (i, d.bbox, d.score)).collect();
    let mut kept: Vec<(usize, [f64; 4], f64)> = Vec::new();
    while !pool.is_empty() {
        let mut best = 0;
        for k in 1..pool.len() {
            let better = pool[k].2 > pool[best].2
                || (pool[k].2 == pool[best].2 && pool[k].0 < pool[best].0);
            if better {
                best = k;
            }
        }
        let (idx, bbox, score) = pool.swap_remove(best);
        kept.push((idx, bbox, score));
        for entry in pool.iter_mut() {
            let iou = box_iou(bbox, entry.1);
            if iou > cfg.iou_threshold {
                entry.2 *= (-iou * iou / cfg.decay_sigma).exp();
            }
        }
        pool.retain(|e| e.2 >= cfg.score_floor);
    }
    kept.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    kept.into_iter().map(|(_, bbox, score)| BoxDetection { bbox, score }).collect()
}

/// Hard NMS between tubes by polygonal intersection of their envelopes:
/// greedy by descending score, a detection survives iff its envelope's IoU
/// with every kept envelope stays at or below the threshold.
pub fn polygonal_nms(
    dets: &[TubeDetection],
    iou_threshold: f64,
    cap_segments: usize,
) -> Result<Vec<TubeDetection>, PostprocessError> {
    let envelopes: Vec<crate::geom::Polygon> = dets
        .iter()
        .enumerate()
        .map(|(index, d)| {
            tube_envelope(&d.tube, cap_segments).map_err(|source| PostprocessError::Envelope {
                index,
                image_id: d.image_id.clone(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b].score.partial_cmp(&dets[a].score).unwrap().then(a.cmp(&b))
    });

    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let overlaps =
            kept.iter().any(|&k| polygon_iou(&envelopes[i], &envelopes[k]) > iou_threshold);
        if !overlaps {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    Ok(kept.into_iter().map(|i| dets[i].clone()).collect())
}
