//! Helpers shared by the integration tests: random evaluation cases and a
//! brute-force COCO evaluator written without reference to the library's.

#![allow(dead_code)]

pub mod properties;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use trapkit::cocoeval::{Detection, IouKind};
use trapkit::imaging::{BinaryMask, BoundingBox, LabeledInstance};

pub const CANVAS: usize = 24;

/// Blob of random pixels inside a random rectangle; never empty.
pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize) -> BinaryMask {
    let bw = rng.gen_range(1..=w / 2);
    let bh = rng.gen_range(1..=h / 2);
    let x0 = rng.gen_range(0..=w - bw);
    let y0 = rng.gen_range(0..=h - bh);
    let fill: f64 = rng.gen_range(0.5..=1.0);
    let mut m = BinaryMask::from_fn(w, h, |x, y| {
        x >= x0 && x < x0 + bw && y >= y0 && y < y0 + bh && rng.gen_bool(fill)
    });
    if m.is_empty() {
        m.set(x0, y0, true);
    }
    m
}

/// Copy of `m` moved by `(dx, dy)` with a few pixels flipped; never empty.
pub fn jitter_mask(rng: &mut impl Rng, m: &BinaryMask, dx: i64, dy: i64, flips: usize) -> BinaryMask {
    let (w, h) = m.dims();
    let mut out = BinaryMask::from_fn(w, h, |x, y| {
        let (sx, sy) = (x as i64 - dx, y as i64 - dy);
        sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h && m.get(sx as usize, sy as usize)
    });
    for _ in 0..flips {
        let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
        out.set(x, y, !out.get(x, y));
    }
    if out.is_empty() {
        out.set(rng.gen_range(0..w), rng.gen_range(0..h), true);
    }
    out
}

/// Up to `max_gt` ground truths and `max_det` detections over 1–3 images and
/// `classes` classes. Most detections are perturbed copies of a ground truth
/// so IoUs spread over the whole threshold range.
pub fn random_case(
    rng: &mut impl Rng,
    max_gt: usize,
    max_det: usize,
    classes: u16,
) -> (Vec<Detection>, Vec<(u64, LabeledInstance)>) {
    let images = rng.gen_range(1..=3u64);
    let n_gt = rng.gen_range(0..=max_gt);
    let gts: Vec<(u64, LabeledInstance)> = (0..n_gt)
        .map(|_| {
            let mask = random_mask(rng, CANVAS, CANVAS);
            let class = rng.gen_range(0..classes);
            (rng.gen_range(0..images), LabeledInstance::from_mask(class, mask, None).unwrap())
        })
        .collect();
    let n_det = rng.gen_range(0..=max_det);
    let dets = (0..n_det)
        .map(|_| {
            let score = rng.gen_range(0.0..1.0);
            if !gts.is_empty() && rng.gen_bool(0.7) {
                let (image, g) = &gts[rng.gen_range(0..gts.len())];
                let class = if rng.gen_bool(0.85) { g.class_id } else { rng.gen_range(0..classes) };
                let (dx, dy, flips) = (rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(0..6));
                let mask = jitter_mask(rng, &g.mask, dx, dy, flips);
                Detection::from_mask(*image, class, score, mask).unwrap()
            } else {
                let mask = random_mask(rng, CANVAS, CANVAS);
                Detection::from_mask(rng.gen_range(0..images), rng.gen_range(0..classes), score, mask).unwrap()
            }
        })
        .collect();
    (dets, gts)
}

fn box_pixels(b: &BoundingBox) -> impl Iterator<Item = (u32, u32)> + '_ {
    (b.y..b.y + b.h).flat_map(move |y| (b.x..b.x + b.w).map(move |x| (x, y)))
}

/// IoU by counting pixels, as an exact `(intersection, union)` pair.
pub fn oracle_iou(det: &Detection, gt: &LabeledInstance, kind: IouKind) -> (u64, u64) {
    match kind {
        IouKind::Box => {
            let inter = box_pixels(&det.bbox).filter(|&(x, y)| gt.bbox.contains(x as usize, y as usize)).count() as u64;
            let union = u64::from(det.bbox.w * det.bbox.h + gt.bbox.w * gt.bbox.h) - inter;
            (inter, union)
        }
        IouKind::Mask => {
            let (w, h) = gt.mask.dims();
            let (mut inter, mut union) = (0, 0);
            for y in 0..h {
                for x in 0..w {
                    let (a, b) = (det.mask.get(x, y), gt.mask.get(x, y));
                    inter += u64::from(a && b);
                    union += u64::from(a || b);
                }
            }
            (inter, union)
        }
    }
}

/// Brute-force report: per class, AP at every threshold.
#[derive(Debug)]
pub struct OracleReport {
    pub per_class_threshold: BTreeMap<u16, Vec<f64>>,
    pub ap_mean: f64,
    pub ap50: f64,
    pub ap75: f64,
}

/// AP at IoU threshold `percent / 100`.
fn oracle_ap(dets: &[&Detection], gts: &[(u64, &LabeledInstance)], percent: u64, kind: IouKind) -> f64 {
    if gts.is_empty() {
        return 0.0;
    }
    // visit detections by descending score; ties by image then input order
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap()
            .then(dets[a].image_id.cmp(&dets[b].image_id))
            .then(a.cmp(&b))
    });
    let mut used = vec![false; gts.len()];
    let mut hits = Vec::with_capacity(dets.len());
    for &d in &order {
        let det = dets[d];
        let mut best: Option<(usize, u64, u64)> = None;
        for (g, (image, gt)) in gts.iter().enumerate() {
            if used[g] || *image != det.image_id {
                continue;
            }
            let (i, u) = oracle_iou(det, gt, kind);
            if u == 0 || 100 * i < percent * u {
                continue;
            }
            // strictly larger IoU replaces the incumbent: i/u > bi/bu
            if best.map_or(true, |(_, bi, bu)| i * bu > bi * u) {
                best = Some((g, i, u));
            }
        }
        if let Some((g, _, _)) = best {
            used[g] = true;
        }
        hits.push(best.is_some());
    }
    // (true positives, rank) after each detection
    let ranks: Vec<(u64, u64)> = (1..=hits.len())
        .map(|k| (hits[..k].iter().filter(|&&h| h).count() as u64, k as u64))
        .collect();
    let n_gt = gts.len() as u64;
    let mut total = 0.0;
    for step in 0..=100u64 {
        let best = ranks
            .iter()
            .filter(|&&(tp, _)| 100 * tp >= step * n_gt)
            .map(|&(tp, k)| tp as f64 / k as f64)
            .fold(0.0, f64::max);
        total += best;
    }
    total / 101.0
}

pub fn oracle_evaluate(dets: &[Detection], gts: &[(u64, LabeledInstance)], kind: IouKind) -> OracleReport {
    let thresholds: Vec<u64> = (0..10).map(|i| 50 + 5 * i).collect();
    let classes: BTreeSet<u16> = dets.iter().map(|d| d.class_id).chain(gts.iter().map(|(_, g)| g.class_id)).collect();
    let mut per_class_threshold = BTreeMap::new();
    for &c in &classes {
        let cd: Vec<&Detection> = dets.iter().filter(|d| d.class_id == c).collect();
        let cg: Vec<(u64, &LabeledInstance)> = gts.iter().filter(|(_, g)| g.class_id == c).map(|(i, g)| (*i, g)).collect();
        per_class_threshold.insert(c, thresholds.iter().map(|&t| oracle_ap(&cd, &cg, t, kind)).collect::<Vec<f64>>());
    }
    let mean_at = |i: usize| {
        if per_class_threshold.is_empty() {
            0.0
        } else {
            per_class_threshold.values().map(|v: &Vec<f64>| v[i]).sum::<f64>() / per_class_threshold.len() as f64
        }
    };
    let ap_mean = if per_class_threshold.is_empty() {
        0.0
    } else {
        per_class_threshold.values().flatten().sum::<f64>() / (10 * per_class_threshold.len()) as f64
    };
    OracleReport {
        ap50: mean_at(0),
        ap75: mean_at(5),
        ap_mean,
        per_class_threshold,
    }
}
