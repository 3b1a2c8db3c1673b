//! COCO-style average precision for boxes and masks.
//!
//! Matching is greedy in score order against the highest-IoU unmatched
//! ground truth; AP samples the interpolated precision envelope at evenly
//! spaced recall points. No crowd annotations and no area ranges.

mod report;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::imaging::{bbox_from_mask, bbox_iou, mask_iou, BinaryMask, BoundingBox, LabeledInstance, Rle, NUM_CLASSES};

pub use report::{report_rows, write_pr_curves_svg, write_report_csv};

/// A scored prediction on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: u64,
    pub class_id: u16,
    pub score: f64,
    pub bbox: BoundingBox,
    pub mask: BinaryMask,
}

#[derive(Serialize, Deserialize)]
struct DetectionRecord {
    image_id: u64,
    class_id: u16,
    score: f64,
    bbox: BoundingBox,
    segmentation: Rle,
}

impl Detection {
    pub fn from_mask(image_id: u64, class_id: u16, score: f64, mask: BinaryMask) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidArgument(format!("score {score} outside [0, 1]")));
        }
        Ok(Self {
            image_id,
            class_id,
            score,
            bbox: bbox_from_mask(&mask)?,
            mask,
        })
    }

    /// Treats a ground-truth instance as a prediction with the given score.
    pub fn from_instance(image_id: u64, inst: &LabeledInstance, score: f64) -> Self {
        Self {
            image_id,
            class_id: inst.class_id,
            score,
            bbox: inst.bbox,
            mask: inst.mask.clone(),
        }
    }
}

impl Serialize for Detection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DetectionRecord {
            image_id: self.image_id,
            class_id: self.class_id,
            score: self.score,
            bbox: self.bbox,
            segmentation: Rle::encode(&self.mask),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Detection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = DetectionRecord::deserialize(d)?;
        let mask = r.segmentation.decode().map_err(serde::de::Error::custom)?;
        Ok(Self {
            image_id: r.image_id,
            class_id: r.class_id,
            score: r.score,
            bbox: r.bbox,
            mask,
        })
    }
}

pub fn save_detections(path: &Path, dets: &[Detection]) -> Result<()> {
    let json = serde_json::to_string(dets)?;
    std::fs::write(path, json).at(path)
}

pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path).at(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouKind {
    Box,
    Mask,
}

impl IouKind {
    pub fn name(self) -> &'static str {
        match self {
            IouKind::Box => "box",
            IouKind::Mask => "mask",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    pub iou_kind: IouKind,
    pub max_detections_per_image: usize,
    pub recall_points: usize,
    pub num_classes: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect(),
            iou_kind: IouKind::Box,
            max_detections_per_image: 100,
            recall_points: 101,
            num_classes: NUM_CLASSES,
        }
    }
}

impl EvalConfig {
    pub fn with_kind(kind: IouKind) -> Self {
        Self {
            iou_kind: kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.iou_thresholds;
        let ordered = t.windows(2).all(|w| w[0] < w[1]);
        let in_range = t.iter().all(|&v| v > 0.0 && v <= 1.0);
        if t.is_empty() || !ordered || !in_range || self.recall_points < 2 || self.max_detections_per_image == 0 {
            return Err(Error::InvalidArgument(format!("invalid evaluation config {self:?}")));
        }
        Ok(())
    }
}

pub fn iou(a: &Detection, gt: &LabeledInstance, kind: IouKind) -> f64 {
    match kind {
        IouKind::Box => bbox_iou(&a.bbox, &gt.bbox),
        IouKind::Mask => mask_iou(&a.mask, &gt.mask).unwrap_or(0.0),
    }
}

/// Greedy matching from a precomputed IoU table (`ious[d][g]`). Returns TP
/// flags in the order of `dets`; detections are visited by descending score,
/// ties in input order.
pub fn match_from_ious(scores: &[f64], ious: &[Vec<f64>], num_gt: usize, threshold: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut taken = vec![false; num_gt];
    let mut tp = vec![false; scores.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for g in 0..num_gt {
            let v = ious[d][g];
            if taken[g] || v < threshold {
                continue;
            }
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            tp[d] = true;
        }
    }
    tp
}

/// TP flags for detections against ground truths of one image and class.
pub fn match_detections(dets: &[Detection], gts: &[LabeledInstance], iou_threshold: f64, kind: IouKind) -> Vec<bool> {
    let ious: Vec<Vec<f64>> = dets.iter().map(|d| gts.iter().map(|g| iou(d, g, kind)).collect()).collect();
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    match_from_ious(&scores, &ious, gts.len(), iou_threshold)
}

/// Precision/recall points in descending score order.
pub fn precision_recall(scores: &[f64], tp: &[bool], num_gt: usize) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut ntp, mut nfp) = (0usize, 0usize);
    order
        .into_iter()
        .map(|i| {
            if tp[i] {
                ntp += 1;
            } else {
                nfp += 1;
            }
            let recall = if num_gt == 0 { 0.0 } else { ntp as f64 / num_gt as f64 };
            (recall, ntp as f64 / (ntp + nfp) as f64)
        })
        .collect()
}

/// Interpolated AP. `None` when there is nothing to evaluate (no ground
/// truth and no detections); 0 when only detections exist.
pub fn average_precision(scores: &[f64], tp: &[bool], num_gt: usize, recall_points: usize) -> Option<f64> {
    if num_gt == 0 {
        return if scores.is_empty() { None } else { Some(0.0) };
    }
    let curve = precision_recall(scores, tp, num_gt);
    let mut envelope: Vec<f64> = curve.iter().map(|&(_, p)| p).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let last = recall_points - 1;
    let mut sum = 0.0;
    let mut i = 0;
    for k in 0..recall_points {
        let r = k as f64 / last as f64;
        while i < curve.len() && curve[i].0 < r {
            i += 1;
        }
        if i < curve.len() {
            sum += envelope[i];
        }
    }
    Some(sum / recall_points as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_kind: IouKind,
    pub ap_mean: f64,
    pub ap50: f64,
    pub ap75: f64,
    /// Threshold-mean AP per class with ground truth or detections.
    pub per_class: BTreeMap<u16, f64>,
    /// AP per class at each configured threshold.
    pub per_class_threshold: BTreeMap<u16, Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub detections: usize,
    pub ground_truths: usize,
    /// Precision-recall points per class at IoU 0.5.
    #[serde(skip)]
    pub pr_curves: BTreeMap<u16, Vec<(f64, f64)>>,
}

struct Cell<'a> {
    dets: Vec<&'a Detection>,
    gts: Vec<&'a LabeledInstance>,
}

/// Box or mask AP of `preds` against `gts` (`(image_id, instance)` pairs).
pub fn evaluate(preds: &[Detection], gts: &[(u64, LabeledInstance)], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    for d in preds {
        if usize::from(d.class_id) >= cfg.num_classes {
            return Err(Error::UnknownClass(d.class_id));
        }
    }
    for (_, g) in gts {
        if usize::from(g.class_id) >= cfg.num_classes {
            return Err(Error::UnknownClass(g.class_id));
        }
    }
    // cap per image by score, stable on ties
    let mut by_image: BTreeMap<u64, Vec<&Detection>> = BTreeMap::new();
    for d in preds {
        by_image.entry(d.image_id).or_default().push(d);
    }
    let mut cells: BTreeMap<(u16, u64), Cell> = BTreeMap::new();
    let mut n_dets = 0;
    for (&image, dets) in &mut by_image {
        dets.sort_by(|a, b| b.score.total_cmp(&a.score));
        dets.truncate(cfg.max_detections_per_image);
        n_dets += dets.len();
        for d in dets.iter() {
            cells
                .entry((d.class_id, image))
                .or_insert_with(|| Cell { dets: Vec::new(), gts: Vec::new() })
                .dets
                .push(d);
        }
    }
    for (image, g) in gts {
        cells
            .entry((g.class_id, *image))
            .or_insert_with(|| Cell { dets: Vec::new(), gts: Vec::new() })
            .gts
            .push(g);
    }

    let mut grid = cfg.iou_thresholds.clone();
    for extra in [0.5, 0.75] {
        if !grid.contains(&extra) {
            grid.push(extra);
        }
    }
    let at = |t: f64| grid.iter().position(|&v| v == t).expect("threshold in grid");

    // per class, per grid threshold: (scores, tp flags, num_gt)
    let mut table: BTreeMap<u16, Vec<(Vec<f64>, Vec<bool>, usize)>> = BTreeMap::new();
    for (&(class, _), cell) in &cells {
        let entry = table
            .entry(class)
            .or_insert_with(|| vec![(Vec::new(), Vec::new(), 0); grid.len()]);
        let ious: Vec<Vec<f64>> = cell
            .dets
            .iter()
            .map(|d| cell.gts.iter().map(|g| iou(d, g, cfg.iou_kind)).collect())
            .collect();
        let scores: Vec<f64> = cell.dets.iter().map(|d| d.score).collect();
        for (ti, &t) in grid.iter().enumerate() {
            let tp = match_from_ious(&scores, &ious, cell.gts.len(), t);
            let slot = &mut entry[ti];
            slot.0.extend_from_slice(&scores);
            slot.1.extend(tp);
            slot.2 += cell.gts.len();
        }
    }

    let mut per_class_grid: BTreeMap<u16, Vec<f64>> = BTreeMap::new();
    let mut pr_curves = BTreeMap::new();
    for (&class, slots) in &table {
        let aps: Option<Vec<f64>> = slots
            .iter()
            .map(|(s, tp, n)| average_precision(s, tp, *n, cfg.recall_points))
            .collect();
        if let Some(aps) = aps {
            per_class_grid.insert(class, aps);
            let (s, tp, n) = &slots[at(0.5)];
            pr_curves.insert(class, precision_recall(s, tp, *n));
        }
    }

    let n_t = cfg.iou_thresholds.len();
    let class_mean = |ti: usize| -> f64 {
        if per_class_grid.is_empty() {
            return 0.0;
        }
        per_class_grid.values().map(|v| v[ti]).sum::<f64>() / per_class_grid.len() as f64
    };
    let ap_mean = (0..n_t).map(class_mean).sum::<f64>() / n_t as f64;
    let per_class_threshold: BTreeMap<u16, Vec<f64>> = per_class_grid
        .iter()
        .map(|(&c, v)| (c, v[..n_t].to_vec()))
        .collect();
    let per_class = per_class_threshold
        .iter()
        .map(|(&c, v)| (c, v.iter().sum::<f64>() / n_t as f64))
        .collect();
    Ok(EvalReport {
        iou_kind: cfg.iou_kind,
        ap_mean,
        ap50: class_mean(at(0.5)),
        ap75: class_mean(at(0.75)),
        per_class,
        per_class_threshold,
        thresholds: cfg.iou_thresholds.clone(),
        detections: n_dets,
        ground_truths: gts.len(),
        pr_curves,
    })
}
