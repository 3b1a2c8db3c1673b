//! Samples a handful of scenes, renders them and writes a small dataset.
//!
//! ```bash
//! cargo run -p trapkit --example synthetic_scenes -- /tmp/scenes
//! ```

use std::path::PathBuf;

use trapkit::synthgen::{derive_annotations, render_scene, sample_scene, write_dataset, Range, SceneRanges};

fn main() -> trapkit::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("trapkit-scenes"));
    let ranges = SceneRanges {
        image: (128, 96),
        camouflage: Range::point(0.0),
        min_gap_px: Some(2),
        ..SceneRanges::default()
    };
    let mut frames = Vec::new();
    for seed in 0..6 {
        let spec = sample_scene(seed, &ranges);
        let frame = render_scene(&spec)?;
        let instances = derive_annotations(&frame)?;
        println!(
            "scene {seed}: camera {:.1} m / {:.0} deg pitch / {:.0} deg fov, {} animals, {} visible",
            spec.camera.height,
            spec.camera.pitch,
            spec.camera.fov,
            spec.animals.len(),
            instances.len()
        );
        for inst in &instances {
            println!("  class {} bbox {:?} area {}", inst.class_id, inst.bbox, inst.mask.count());
        }
        frames.push(frame);
    }
    let manifest = write_dataset(&frames, "train", &out)?;
    println!("wrote {} frames to {}: {manifest:?}", manifest.frames, out.display());
    Ok(())
}
