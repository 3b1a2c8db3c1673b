use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::EvalReport;
use crate::error::{IoContext, Result};
use crate::imaging::CLASS_NAMES;

pub(crate) fn class_name(id: u16) -> String {
    CLASS_NAMES
        .get(usize::from(id))
        .map(|s| (*s).to_owned())
        .unwrap_or_else(|| format!("class{id}"))
}

/// `(metric, class, value)` rows in the order they are written to CSV.
pub fn report_rows(report: &EvalReport) -> Vec<(String, String, f64)> {
    let mut rows = vec![
        ("ap".to_owned(), "all".to_owned(), report.ap_mean),
        ("ap50".to_owned(), "all".to_owned(), report.ap50),
        ("ap75".to_owned(), "all".to_owned(), report.ap75),
    ];
    let idx = |t: f64| report.thresholds.iter().position(|&v| v == t);
    for (&class, &ap) in &report.per_class {
        let name = class_name(class);
        rows.push(("ap".to_owned(), name.clone(), ap));
        let per_t = &report.per_class_threshold[&class];
        if let Some(i) = idx(0.5) {
            rows.push(("ap50".to_owned(), name.clone(), per_t[i]));
        }
        if let Some(i) = idx(0.75) {
            rows.push(("ap75".to_owned(), name, per_t[i]));
        }
    }
    rows
}

pub fn write_report_csv(report: &EvalReport, path: &Path) -> Result<()> {
    let mut out = String::from("metric,class,value\n");
    for (metric, class, value) in report_rows(report) {
        writeln!(out, "{metric},{class},{value}").unwrap();
    }
    std::fs::write(path, out).at(path)
}

/// One precision-recall plot per class at IoU 0.5, named
/// `pr_<kind>_<class>.svg`.
pub fn write_pr_curves_svg(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).at(dir)?;
    let mut written = Vec::new();
    for (&class, curve) in &report.pr_curves {
        let name = class_name(class);
        let path = dir.join(format!("pr_{}_{}.svg", report.iou_kind.name(), name));
        let (w, h, m) = (320.0, 240.0, 30.0);
        let px = |r: f64| m + r * (w - 2.0 * m);
        let py = |p: f64| h - m - p * (h - 2.0 * m);
        let mut points = String::new();
        // step plot starting at recall 0
        let mut prev_r = 0.0;
        for &(r, p) in curve {
            write!(points, "{:.2},{:.2} {:.2},{:.2} ", px(prev_r), py(p), px(r), py(p)).unwrap();
            prev_r = r;
        }
        let ap50 = report.per_class_threshold[&class]
            .iter()
            .zip(&report.thresholds)
            .find(|(_, &t)| t == 0.5)
            .map(|(v, _)| *v);
        let title = match ap50 {
            Some(v) => format!("{name} ({}) AP50 = {:.3}", report.iou_kind.name(), v),
            None => format!("{name} ({})", report.iou_kind.name()),
        };
        let svg = format!(
            r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">
<rect width="{w}" height="{h}" fill="white"/>
<line x1="{m}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>
<line x1="{m}" y1="{y0}" x2="{m}" y2="{m}" stroke="black"/>
<text x="{cx}" y="{ty}" text-anchor="middle">recall</text>
<text x="8" y="{cy}" transform="rotate(-90 8 {cy})" text-anchor="middle">precision</text>
<text x="{cx}" y="18" text-anchor="middle">{title}</text>
<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{points}"/>
</svg>
"##,
            y0 = h - m,
            x1 = w - m,
            cx = w / 2.0,
            cy = h / 2.0,
            ty = h - 8.0,
        );
        std::fs::write(&path, svg).at(&path)?;
        written.push(path);
    }
    Ok(written)
}
