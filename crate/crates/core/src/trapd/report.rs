use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cocoeval::{report_rows, EvalReport};
use crate::error::{Error, IoContext, Result};

/// One line of the depth-on / depth-off comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: String,
    pub class: String,
    pub depth_on: f64,
    pub depth_off: f64,
    pub delta: f64,
}

/// Pairs metrics of two reports of the same kind.
pub fn compare_reports(on: &EvalReport, off: &EvalReport) -> Result<Vec<ComparisonRow>> {
    if on.iou_kind != off.iou_kind {
        return Err(Error::InvalidArgument("reports evaluate different IoU kinds".into()));
    }
    let classes = |r: &EvalReport| r.per_class.keys().copied().collect::<BTreeSet<_>>();
    if classes(on) != classes(off) {
        return Err(Error::MismatchedClasses);
    }
    let kind = on.iou_kind.name();
    Ok(report_rows(on)
        .into_iter()
        .zip(report_rows(off))
        .map(|((metric, class, a), (_, _, b))| ComparisonRow {
            metric: format!("{kind}_{metric}"),
            class,
            depth_on: a,
            depth_off: b,
            delta: a - b,
        })
        .collect())
}

fn bar_chart(rows: &[ComparisonRow], title: &str) -> String {
    let overall: Vec<&ComparisonRow> = rows.iter().filter(|r| r.class == "all").collect();
    let (w, h, m) = (120.0 * overall.len().max(1) as f64 + 60.0, 260.0, 40.0);
    let scale = h - 2.0 * m;
    let mut svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">
<rect width="{w}" height="{h}" fill="white"/>
<text x="{}" y="18" text-anchor="middle">{title}</text>
<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/>
"##,
        w / 2.0,
        h - m,
        w - 20.0,
        h - m
    );
    for (i, r) in overall.iter().enumerate() {
        let x0 = m + 120.0 * i as f64 + 10.0;
        for (j, (v, colour)) in [(r.depth_on, "#2ca02c"), (r.depth_off, "#7f7f7f")].into_iter().enumerate() {
            let bh = v.clamp(0.0, 1.0) * scale;
            writeln!(
                svg,
                r#"<rect x="{:.1}" y="{:.1}" width="40" height="{:.1}" fill="{colour}"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
                x0 + 45.0 * j as f64,
                h - m - bh,
                bh,
                x0 + 45.0 * j as f64 + 20.0,
                h - m - bh - 3.0,
                v
            )
            .unwrap();
        }
        writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x0 + 42.0, h - m + 15.0, r.metric).unwrap();
    }
    writeln!(
        svg,
        r##"<rect x="{m}" y="{}" width="10" height="10" fill="#2ca02c"/><text x="{}" y="{}">depth on</text><rect x="{}" y="{}" width="10" height="10" fill="#7f7f7f"/><text x="{}" y="{}">depth off</text>"##,
        h - 18.0,
        m + 14.0,
        h - 9.0,
        m + 90.0,
        h - 18.0,
        m + 104.0,
        h - 9.0
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

/// Writes `comparison.csv` with every metric of every `(depth_on, depth_off)`
/// pair and one bar chart per IoU kind (`comparison_box.svg`,
/// `comparison_mask.svg`).
pub fn emit_report(pairs: &[(EvalReport, EvalReport)], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let mut csv = String::from("metric,class,depth_on,depth_off,delta\n");
    let mut written = Vec::new();
    for (on, off) in pairs {
        let rows = compare_reports(on, off)?;
        for r in &rows {
            writeln!(csv, "{},{},{},{},{}", r.metric, r.class, r.depth_on, r.depth_off, r.delta).unwrap();
        }
        let kind = on.iou_kind.name();
        let path = out_dir.join(format!("comparison_{kind}.svg"));
        std::fs::write(&path, bar_chart(&rows, &format!("{kind} AP: depth on vs off"))).at(&path)?;
        written.push(path);
    }
    let path = out_dir.join("comparison.csv");
    std::fs::write(&path, csv).at(&path)?;
    written.insert(0, path);
    Ok(written)
}
