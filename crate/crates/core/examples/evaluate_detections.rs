//! Scores degraded copies of the ground truth with the COCO-style evaluator
//! and writes the report CSV and precision-recall curves.
//!
//! ```bash
//! cargo run --release -p trapkit --example evaluate_detections -- /tmp/eval
//! ```

use std::path::PathBuf;

use trapkit::cocoeval::{evaluate, write_pr_curves_svg, write_report_csv, Detection, EvalConfig, IouKind};
use trapkit::imaging::BinaryMask;
use trapkit::synthgen::{generate_samples, SceneRanges};

/// Drops the mask's right-most `cut` columns, keeping at least one.
fn shrink(mask: &BinaryMask, cut: usize) -> BinaryMask {
    let max_x = mask.iter_set().map(|(x, _)| x).max().unwrap_or(0);
    let min_x = mask.iter_set().map(|(x, _)| x).min().unwrap_or(0);
    let keep = max_x.saturating_sub(cut).max(min_x);
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| mask.get(x, y) && x <= keep)
}

fn main() -> trapkit::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("trapkit-eval"));
    std::fs::create_dir_all(&out).map_err(|source| trapkit::Error::Io { path: out.clone(), source })?;
    let samples = generate_samples(0, 40, &SceneRanges { min_gap_px: Some(2), ..SceneRanges::default() })?;
    let gts: Vec<_> = samples
        .iter()
        .flat_map(|s| s.instances.iter().map(move |i| (s.image_id, i.clone())))
        .collect();
    let mut preds = Vec::new();
    for (n, (image_id, inst)) in gts.iter().enumerate() {
        let score = 1.0 - (n % 10) as f64 / 10.0;
        // every third detection loses a third of its width; every fifth is mislabelled
        let mask = if n % 3 == 0 { shrink(&inst.mask, inst.bbox.w as usize / 3) } else { inst.mask.clone() };
        let class_id = if n % 5 == 0 { (inst.class_id + 1) % 4 } else { inst.class_id };
        preds.push(Detection::from_mask(*image_id, class_id, score, mask)?);
    }
    println!("{} ground-truth instances, {} detections", gts.len(), preds.len());
    for kind in [IouKind::Box, IouKind::Mask] {
        let report = evaluate(&preds, &gts, &EvalConfig::with_kind(kind))?;
        println!(
            "{:<4} AP {:.3}  AP50 {:.3}  AP75 {:.3}  per class {:?}",
            kind.name(),
            report.ap_mean,
            report.ap50,
            report.ap75,
            report.per_class
        );
        write_report_csv(&report, &out.join(format!("report_{}.csv", kind.name())))?;
        write_pr_curves_svg(&report, &out)?;
    }
    println!("wrote reports to {}", out.display());
    Ok(())
}
