//! Recovers depth from a simulated stereo pair, with and without the
//! projected dot pattern, and compares against the rendered depth.
//!
//! ```bash
//! cargo run --release -p trapkit --example stereo_depth
//! ```

use trapkit::imaging::IntensityImage;
use trapkit::stereo::{
    block_match, disparity_from_depth, disparity_to_depth, project_dot_pattern, synthesize_right_view,
    RectifiedPair, StereoConfig,
};
use trapkit::synthgen::{render_scene, sample_scene, Range, SceneRanges};

const BASELINE: f64 = 0.2;

fn report(label: &str, left: &IntensityImage, truth: &trapkit::imaging::DepthMap, focal: f64) -> trapkit::Result<()> {
    let cfg = StereoConfig {
        max_disparity: 32,
        ..StereoConfig::default()
    };
    let right = synthesize_right_view(left, truth, BASELINE, focal);
    let disp = block_match(&RectifiedPair::new(left.clone(), right, BASELINE, focal)?, &cfg)?;
    let depth = disparity_to_depth(&disp, BASELINE, focal);
    let (w, h) = truth.dims();
    let (mut valid, mut close, mut total) = (0usize, 0usize, 0usize);
    for y in 0..h {
        for x in 0..w {
            let Some(expected) = disparity_from_depth(truth.get(x, y), BASELINE, focal) else {
                continue;
            };
            total += 1;
            if let Some(d) = disp.get(x, y) {
                valid += 1;
                close += usize::from((f64::from(d) - expected as f64).abs() <= 1.0);
            }
        }
    }
    let centre = depth.get(w / 2, h / 2);
    println!(
        "{label:<8} valid {:>5.1}%  within 1 px {:>5.1}% of valid  centre depth {centre} mm (true {})",
        100.0 * valid as f64 / total as f64,
        100.0 * close as f64 / valid.max(1) as f64,
        truth.get(w / 2, h / 2)
    );
    Ok(())
}

fn main() -> trapkit::Result<()> {
    let ranges = SceneRanges {
        image: (160, 120),
        texture_amplitude: Range::point(0.5),
        ..SceneRanges::default()
    };
    let spec = sample_scene(11, &ranges);
    let frame = render_scene(&spec)?;
    let focal = spec.camera.focal_px();
    println!("nearly textureless scene, {} animals, focal {focal:.1} px", spec.animals.len());
    report("passive", &frame.intensity, &frame.depth, focal)?;
    let lit = project_dot_pattern(&frame.intensity, 7, 0.05, 80.0);
    report("active", &lit, &frame.depth, focal)?;
    Ok(())
}
