//! Annotation and detection interchange.
//!
//! The canonical format is line-delimited JSON, one object per line:
//!
//! - annotations: `{"image_id": "img1", "polygon": [[x, y], ...]}`
//! - detections:  `{"image_id": "img1", "score": 0.9, "tube": {"points":
//!   [[x, y], ...], "radius": r}}` or the same with `"polygon"` instead of
//!   `"tube"` (exactly one of the two).
//!
//! Raw-format adapters for common annotation layouts are best-effort and
//! config-driven; whatever fails validation lands in a rejects report with
//! the line number and reason instead of aborting the load.

use crate::geom::{Point2, PolyChain, Polygon};
use crate::medial::{
    fit_tube_full, max_angle_difference, radius_variation, tube_envelope, MedialConfig,
    MedialError, Tube, CURVATURE_THRESHOLD,
};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(String),
}

/// Supported annotation input layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationFormat {
    /// One JSON object per line with `image_id` and `polygon`.
    CanonicalJsonl,
    /// One instance per line of comma-separated integers forming 14 (x, y)
    /// vertex pairs; the image id is the file stem.
    CtwRaw { layout: CtwLayout },
    /// Lines carrying bracketed `x:` and `y:` coordinate lists of matching
    /// variable length; the image id is the file stem.
    TotalTextRaw,
}

/// Raw line layout variants seen in the wild for the 28-value convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtwLayout {
    /// 28 absolute coordinates.
    Absolute,
    /// 4 bounding-box values followed by 28 offsets relative to the box's
    /// top-left corner.
    BboxOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    Canonical,
    Ctw,
    TotalText,
}

/// A validated annotation: the polygon parses as simple with positive area.
#[derive(Debug, Clone)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub polygon: Vec<[f64; 2]>,
    pub source_format: SourceTag,
}

impl AnnotationRecord {
    pub fn to_polygon(&self) -> Polygon {
        Polygon::new(self.polygon.iter().map(|&[x, y]| Point2::new(x, y)).collect())
            .expect("AnnotationRecord holds a validated polygon")
    }
}

/// One rejected input line.
#[derive(Debug, Clone)]
pub struct Reject {
    pub file: String,
    pub line: usize,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub records: Vec<AnnotationRecord>,
    pub rejects: Vec<Reject>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalAnnotation {
    image_id: String,
    polygon: Vec<[f64; 2]>,
}

fn validate_coords(coords: &[[f64; 2]]) -> Result<(), String> {
    if coords.len() < 3 {
        return Err(format!("need at least 3 vertices, got {}", coords.len()));
    }
    Polygon::new(coords.iter().map(|&[x, y]| Point2::new(x, y)).collect())
        .map(|_| ())
        .map_err(|e| e.to_string())
}

fn files_for(path: &Path) -> Result<Vec<PathBuf>, DataError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

fn image_id_of(file: &Path) -> String {
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("unknown");
    stem.strip_prefix("poly_gt_").unwrap_or(stem).to_string()
}

/// Load annotations from a file (or a directory of files for the raw
/// formats). Invalid lines are collected as rejects, not errors.
pub fn load_annotations(path: &Path, format: AnnotationFormat) -> Result<LoadOutcome, DataError> {
    let mut out = LoadOutcome::default();
    for file in files_for(path)? {
        let reader = BufReader::new(std::fs::File::open(&file)?);
        let fname = file.file_name().and_then(|s| s.to_str()).unwrap_or("?").to_string();
        let image_id = image_id_of(&file);
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = match format {
                AnnotationFormat::CanonicalJsonl => parse_canonical_line(&line),
                AnnotationFormat::CtwRaw { layout } => {
                    parse_ctw_line(&line, layout).map(|poly| (image_id.clone(), poly))
                }
                AnnotationFormat::TotalTextRaw => {
                    parse_totaltext_line(&line).map(|poly| (image_id.clone(), poly))
                }
            };
            match parsed.and_then(|(id, poly)| {
                validate_coords(&poly).map_err(|e| format!("invalid polygon: {e}"))?;
                Ok((id, poly))
            }) {
                Ok((id, poly)) => out.records.push(AnnotationRecord {
                    image_id: id,
                    polygon: poly,
                    source_format: match format {
                        AnnotationFormat::CanonicalJsonl => SourceTag::Canonical,
                        AnnotationFormat::CtwRaw { .. } => SourceTag::Ctw,
                        AnnotationFormat::TotalTextRaw => SourceTag::TotalText,
                    },
                }),
                Err(reason) => out.rejects.push(Reject {
                    file: fname.clone(),
                    line: lineno,
                    reason,
                    raw: line,
                }),
            }
        }
    }
    Ok(out)
}

fn parse_canonical_line(line: &str) -> Result<(String, Vec<[f64; 2]>), String> {
    let rec: CanonicalAnnotation =
        serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    Ok((rec.image_id, rec.polygon))
}

fn parse_ctw_line(line: &str, layout: CtwLayout) -> Result<Vec<[f64; 2]>, String> {
    // transcriptions may trail after a '#'
    let numeric = line.split('#').next().unwrap_or("");
    let values: Result<Vec<i64>, _> = numeric
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|e| format!("'{t}': {e}")))
        .collect();
    let values = values.map_err(|e| format!("non-integer value {e}"))?;
    match layout {
        CtwLayout::Absolute => {
            if values.len() != 28 {
                return Err(format!("expected 28 comma-separated integers, got {}", values.len()));
            }
            Ok(values.chunks(2).map(|c| [c[0] as f64, c[1] as f64]).collect())
        }
        CtwLayout::BboxOffset => {
            if values.len() != 32 {
                return Err(format!(
                    "expected 4 box values plus 28 offsets (32 integers), got {}",
                    values.len()
                ));
            }
            let (x0, y0) = (values[0] as f64, values[1] as f64);
            Ok(values[4..]
                .chunks(2)
                .map(|c| [x0 + c[0] as f64, y0 + c[1] as f64])
                .collect())
        }
    }
}

fn bracketed_numbers(s: &str, key: &str) -> Result<Vec<f64>, String> {
    let kpos = s.find(key).ok_or_else(|| format!("missing '{key}' list"))?;
    let after = &s[kpos + key.len()..];
    let open = after.find('[').ok_or_else(|| format!("missing '[' after '{key}'"))?;
    let mut depth = 0usize;
    let mut body = String::new();
    for ch in after[open..].chars() {
        match ch {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            c => body.push(c),
        }
    }
    let nums: Result<Vec<f64>, _> = body
        .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect();
    nums.map_err(|e| format!("bad number in '{key}' list: {e}"))
}

fn parse_totaltext_line(line: &str) -> Result<Vec<[f64; 2]>, String> {
    let xs = bracketed_numbers(line, "x:")?;
    let ys = bracketed_numbers(line, "y:")?;
    if xs.len() != ys.len() {
        return Err(format!("x list has {} values but y list has {}", xs.len(), ys.len()));
    }
    Ok(xs.into_iter().zip(ys).map(|(x, y)| [x, y]).collect())
}

/// Write annotations in the canonical line-delimited schema.
pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        let line = serde_json::to_string(&CanonicalAnnotation {
            image_id: r.image_id.clone(),
            polygon: r.polygon.clone(),
        })
        .map_err(|e| DataError::Format(e.to_string()))?;
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// Write a rejects report: tab-separated file, line, reason, raw text.
pub fn write_rejects(path: &Path, rejects: &[Reject]) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# file\tline\treason\traw")?;
    for r in rejects {
        writeln!(f, "{}\t{}\t{}\t{}", r.file, r.line, r.reason, r.raw)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct TubeRepr {
    pub points: Vec<[f64; 2]>,
    pub radius: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
struct DetectionLine {
    image_id: String,
    score: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    tube: Option<TubeRepr>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    polygon: Option<Vec<[f64; 2]>>,
}

/// The geometric payload of a detection.
#[derive(Debug, Clone)]
pub enum DetectionShape {
    Tube(Tube),
    Polygon(Polygon),
}

/// A validated detection record.
#[derive(Debug, Clone)]
pub struct DetectionRecord {
    pub image_id: String,
    pub score: f64,
    pub shape: DetectionShape,
}

impl DetectionRecord {
    /// The polygon used for IoU-based evaluation; tubes are reconstructed
    /// into their envelopes.
    pub fn eval_polygon(&self, cap_segments: usize) -> Result<Polygon, MedialError> {
        match &self.shape {
            DetectionShape::Tube(t) => tube_envelope(t, cap_segments),
            DetectionShape::Polygon(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Default)]
pub struct DetectionLoad {
    pub records: Vec<DetectionRecord>,
    pub rejects: Vec<Reject>,
}

/// Load canonical detections; invalid lines become rejects.
pub fn load_detections(path: &Path) -> Result<DetectionLoad, DataError> {
    let mut out = DetectionLoad::default();
    let fname = path.file_name().and_then(|s| s.to_str()).unwrap_or("?").to_string();
    let reader = BufReader::new(std::fs::File::open(path)?);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_detection_line(&line) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => {
                out.rejects.push(Reject { file: fname.clone(), line: lineno, reason, raw: line })
            }
        }
    }
    Ok(out)
}

fn parse_detection_line(line: &str) -> Result<DetectionRecord, String> {
    let raw: DetectionLine = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    if !(0.0..=1.0).contains(&raw.score) {
        return Err(format!("score {} outside [0, 1]", raw.score));
    }
    let shape = match (raw.tube, raw.polygon) {
        (Some(t), None) => {
            let chain = PolyChain::new(t.points.iter().map(|&[x, y]| Point2::new(x, y)).collect())
                .map_err(|e| format!("invalid tube axis: {e}"))?;
            DetectionShape::Tube(Tube::new(chain, t.radius).map_err(|e| format!("invalid tube: {e}"))?)
        }
        (None, Some(p)) => {
            let poly = Polygon::new(p.iter().map(|&[x, y]| Point2::new(x, y)).collect())
                .map_err(|e| format!("invalid polygon: {e}"))?;
            DetectionShape::Polygon(poly)
        }
        (Some(_), Some(_)) => return Err("record carries both tube and polygon".into()),
        (None, None) => return Err("record carries neither tube nor polygon".into()),
    };
    Ok(DetectionRecord { image_id: raw.image_id, score: raw.score, shape })
}

/// Write detections in the canonical line-delimited schema.
pub fn write_detections(path: &Path, records: &[DetectionRecord]) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        let line = DetectionLine {
            image_id: r.image_id.clone(),
            score: r.score,
            tube: match &r.shape {
                DetectionShape::Tube(t) => Some(TubeRepr {
                    points: t.axis().points().iter().map(|p| [p.x, p.y]).collect(),
                    radius: t.radius(),
                }),
                DetectionShape::Polygon(_) => None,
            },
            polygon: match &r.shape {
                DetectionShape::Polygon(p) => {
                    Some(p.vertices().iter().map(|v| [v.x, v.y]).collect())
                }
                DetectionShape::Tube(_) => None,
            },
        };
        writeln!(f, "{}", serde_json::to_string(&line).map_err(|e| DataError::Format(e.to_string()))?)?;
    }
    Ok(())
}

/// Fixed-width histogram with overflow clamped into the edge bins.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram { lo, hi, counts: vec![0; bins] }
    }

    pub fn add(&mut self, v: f64) {
        let n = self.counts.len();
        let idx = ((v - self.lo) / (self.hi - self.lo) * n as f64).floor();
        let idx = (idx.max(0.0) as usize).min(n - 1);
        self.counts[idx] += 1;
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Corpus statistics from fitting a tube to every record.
#[derive(Debug, Clone)]
pub struct DatasetStats {
    /// Successfully fitted instances.
    pub n_instances: usize,
    pub n_curved: usize,
    pub n_straight: usize,
    /// Records whose fit failed; skipped in the histograms.
    pub n_failed: usize,
    /// Largest pairwise segment-angle difference, radians in [0, pi/2].
    pub curvature_hist: Histogram,
    /// Relative clearance variation (max - min) / mean, clamped into [0, 1].
    pub radius_variation_hist: Histogram,
}

/// Fit a tube per record and histogram curvature and radius variation.
/// Curved means the largest pairwise segment-angle difference strictly
/// exceeds 0.1 rad, matching the evaluation subsets.
pub fn dataset_stats(records: &[AnnotationRecord], cfg: &MedialConfig) -> DatasetStats {
    let mut stats = DatasetStats {
        n_instances: 0,
        n_curved: 0,
        n_straight: 0,
        n_failed: 0,
        curvature_hist: Histogram::new(0.0, std::f64::consts::FRAC_PI_2, 16),
        radius_variation_hist: Histogram::new(0.0, 1.0, 20),
    };
    for rec in records {
        let poly = rec.to_polygon();
        let fitted = fit_tube_full(&poly, cfg)
            .and_then(|fit| radius_variation(&poly, &fit.pruned_axis, 100).map(|v| (fit, v)));
        match fitted {
            Ok((fit, variation)) => {
                stats.n_instances += 1;
                let angle = max_angle_difference(fit.tube.axis());
                if angle > CURVATURE_THRESHOLD {
                    stats.n_curved += 1;
                } else {
                    stats.n_straight += 1;
                }
                stats.curvature_hist.add(angle);
                stats.radius_variation_hist.add(variation);
            }
            Err(_) => stats.n_failed += 1,
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn tmpfile(content: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("tubefit-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!(
            "t{}.txt",
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap().as_nanos()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn canonical_line_parses() {
        let path = tmpfile(r#"{"image_id":"img1","polygon":[[0,0],[10,0],[10,4],[0,4]]}"#);
        let out = load_annotations(&path, AnnotationFormat::CanonicalJsonl).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.rejects.is_empty());
        assert_eq!(out.records[0].image_id, "img1");
        assert_eq!(out.records[0].polygon.len(), 4);
    }

    #[test]
    fn canonical_rejects_malformed_and_invalid() {
        let body = [
            r#"{"image_id":"a","polygon":[[0,0],[10,0],[10,4],[0,4]]}"#,
            r#"{"image_id":"b","polygon":[[0,0],[1,1]]}"#,
            "not json at all",
        ]
        .join("\n");
        let path = tmpfile(&body);
        let out = load_annotations(&path, AnnotationFormat::CanonicalJsonl).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.rejects.len(), 2);
        assert_eq!(out.rejects[0].line, 2);
        assert_eq!(out.rejects[1].line, 3);
    }

    #[test]
    fn ctw_raw_28_values_round_trip() {
        // a 14-vertex band: top chain then reversed bottom chain
        let top: Vec<(i64, i64)> = (0..7).map(|i| (i * 10, 20 + (i % 2) * 2)).collect();
        let bot: Vec<(i64, i64)> = (0..7).rev().map(|i| (i * 10, (i % 2) * 2)).collect();
        let vals: Vec<String> =
            top.iter().chain(bot.iter()).flat_map(|&(x, y)| [x.to_string(), y.to_string()]).collect();
        let path = tmpfile(&vals.join(","));
        let out = load_annotations(&path, AnnotationFormat::CtwRaw { layout: CtwLayout::Absolute })
            .unwrap();
        assert_eq!(out.records.len(), 1, "rejects: {:?}", out.rejects);
        assert_eq!(out.records[0].polygon.len(), 14);

        // canonical round trip preserves the record
        let canon = tmpfile("");
        write_annotations(&canon, &out.records).unwrap();
        let back = load_annotations(&canon, AnnotationFormat::CanonicalJsonl).unwrap();
        assert_eq!(back.records.len(), 1);
        assert_eq!(back.records[0].polygon, out.records[0].polygon);
    }

    #[test]
    fn ctw_raw_odd_count_rejected_with_line() {
        let vals: Vec<String> = (0..27).map(|v| v.to_string()).collect();
        let path = tmpfile(&vals.join(","));
        let out = load_annotations(&path, AnnotationFormat::CtwRaw { layout: CtwLayout::Absolute })
            .unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].line, 1);
        assert!(out.rejects[0].reason.contains("28"));
    }

    #[test]
    fn ctw_bbox_offset_layout() {
        let mut vals = vec![100i64, 200, 170, 224];
        // absolute band shifted to origin offsets
        let top: Vec<(i64, i64)> = (0..7).map(|i| (i * 10, 20)).collect();
        let bot: Vec<(i64, i64)> = (0..7).rev().map(|i| (i * 10, 0)).collect();
        for &(x, y) in top.iter().chain(bot.iter()) {
            vals.push(x);
            vals.push(y);
        }
        let strs: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        let path = tmpfile(&strs.join(","));
        let out =
            load_annotations(&path, AnnotationFormat::CtwRaw { layout: CtwLayout::BboxOffset })
                .unwrap();
        assert_eq!(out.records.len(), 1, "rejects: {:?}", out.rejects);
        assert_eq!(out.records[0].polygon[0], [100.0, 220.0]);
    }

    #[test]
    fn totaltext_line_parses() {
        let path = tmpfile(
            "x: [[153 161 179 195]], y: [[347 323 305 347]], ornt: [u'c'], transcriptions: [u'the']",
        );
        let out = load_annotations(&path, AnnotationFormat::TotalTextRaw).unwrap();
        assert_eq!(out.records.len(), 1, "rejects: {:?}", out.rejects);
        assert_eq!(out.records[0].polygon.len(), 4);
        assert_eq!(out.records[0].polygon[0], [153.0, 347.0]);
    }

    #[test]
    fn detection_records_round_trip_and_validate() {
        let body = [
            r#"{"image_id":"a","score":0.9,"tube":{"points":[[0,0],[10,0]],"radius":2.0}}"#,
            r#"{"image_id":"a","score":0.8,"polygon":[[0,0],[10,0],[10,4],[0,4]]}"#,
            r#"{"image_id":"a","score":1.5,"polygon":[[0,0],[10,0],[10,4],[0,4]]}"#,
            r#"{"image_id":"a","score":0.5}"#,
        ]
        .join("\n");
        let path = tmpfile(&body);
        let out = load_detections(&path).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.rejects.len(), 2);

        let copy = tmpfile("");
        write_detections(&copy, &out.records).unwrap();
        let back = load_detections(&copy).unwrap();
        assert_eq!(back.records.len(), 2);
        assert!(back.rejects.is_empty());
    }

    #[test]
    fn stats_on_synthetic_rectangles() {
        let mk = |x0: f64| AnnotationRecord {
            image_id: "i".into(),
            polygon: vec![[x0, 0.0], [x0 + 30.0, 0.0], [x0 + 30.0, 8.0], [x0, 8.0]],
            source_format: SourceTag::Canonical,
        };
        let records = vec![mk(0.0), mk(100.0), mk(200.0)];
        let stats = dataset_stats(&records, &MedialConfig::default());
        assert_eq!(stats.n_instances, 3);
        assert_eq!(stats.n_straight, 3);
        assert_eq!(stats.n_curved, 0);
        assert_eq!(stats.n_failed, 0);
        assert_eq!(stats.curvature_hist.total(), 3);
        // constant clearance: all variation mass in the first bin
        assert_eq!(stats.radius_variation_hist.counts[0], 3);
    }

    #[test]
    fn stats_empty_input() {
        let stats = dataset_stats(&[], &MedialConfig::default());
        assert_eq!(stats.n_instances, 0);
        assert_eq!(stats.curvature_hist.total(), 0);
    }
}
