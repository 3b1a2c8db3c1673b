//! Ground-truth masks from a rendered frame: connected components, tight
//! boxes, IoU between instances and the RLE/PGM encodings used on disk.
//!
//! ```bash
//! cargo run -p trapkit --example mask_tools -- /tmp/masks
//! ```

use std::path::PathBuf;

use trapkit::imaging::{
    bbox_iou, connected_components, mask_iou, read_pgm_depth, write_pgm_depth, BinaryMask, Rle,
};
use trapkit::synthgen::{derive_annotations, render_scene, sample_scene, SceneRanges};

fn main() -> trapkit::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("trapkit-masks"));
    std::fs::create_dir_all(&out).map_err(|source| trapkit::Error::Io {
        path: out.clone(),
        source,
    })?;
    let ranges = SceneRanges {
        animal_count: (3, 5),
        ..SceneRanges::default()
    };
    let frame = render_scene(&sample_scene(4, &ranges))?;
    let instances = derive_annotations(&frame)?;
    let (w, h) = frame.dims();
    println!("{w}x{h} frame with {} visible animals", instances.len());

    for (i, inst) in instances.iter().enumerate() {
        let rle = Rle::encode(&inst.mask);
        assert_eq!(rle.decode()?, inst.mask);
        // occlusion can split an animal into several blobs
        let parts = connected_components(&inst.mask);
        println!(
            "  #{} class {}  {:>4} px  box {:?}  {} component(s)  RLE {} runs",
            i + 1,
            inst.class_id,
            inst.mask.count(),
            (inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h),
            parts.len(),
            rle.counts.len()
        );
    }
    for (i, a) in instances.iter().enumerate() {
        for (j, b) in instances.iter().enumerate().skip(i + 1) {
            let boxes = bbox_iou(&a.bbox, &b.bbox);
            if boxes > 0.0 {
                println!("  #{} vs #{}: box IoU {boxes:.3}, mask IoU {:.3}", i + 1, j + 1, mask_iou(&a.mask, &b.mask)?);
            }
        }
    }

    let foreground = BinaryMask::from_fn(w, h, |x, y| frame.class_map[y * w + x] != 0);
    println!("foreground covers {:.1}% of the frame", 100.0 * foreground.count() as f64 / (w * h) as f64);
    let path = out.join("depth.pgm");
    write_pgm_depth(&path, &frame.depth)?;
    assert_eq!(read_pgm_depth(&path)?, frame.depth);
    println!("16-bit depth written to {} and read back unchanged", path.display());
    Ok(())
}
