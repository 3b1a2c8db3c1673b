//! Runs the daytime motion detectors over a rendered stream with one animal
//! crossing, first on the whole frame and then with a busy region masked out.
//! A flickering patch stands in for swaying vegetation.
//!
//! ```bash
//! cargo run --release -p trapkit --example motion_triggers
//! ```

use chrono::{TimeZone, Utc};
use trapkit::imaging::BinaryMask;
use trapkit::motion::{DiffConfig, GmmConfig, MotionDetector, RoiMask};
use trapkit::synthgen::Species;
use trapkit::trapd::{Crossing, SyntheticStream};

fn main() -> trapkit::Result<()> {
    let stream = SyntheticStream {
        start: Utc.with_ymd_and_hms(2024, 6, 21, 12, 0, 0).unwrap(),
        frames: 120,
        crossings: vec![Crossing {
            start_frame: 60,
            frames: 30,
            species: Species::Deer,
            distance: 6.0,
            left_to_right: true,
        }],
        ..SyntheticStream::default()
    };
    let (w, h) = stream.camera.image;
    let flicker = |x: usize, y: usize| x < 24 && y < 24;
    let full = RoiMask::full(w, h);
    let masked = RoiMask::new(BinaryMask::from_fn(w, h, |x, y| !flicker(x, y)));
    for (label, roi) in [("full frame", &full), ("vegetation masked", &masked)] {
        let mut detector = MotionDetector::new(w, h, DiffConfig::default(), GmmConfig::default())?;
        let mut fired = Vec::new();
        for frame in stream.iter()? {
            let mut frame = frame?;
            let level = if frame.index % 2 == 0 { 15_000 } else { 45_000 };
            for y in 0..24 {
                for x in 0..24 {
                    frame.intensity.set(x, y, level);
                }
            }
            if let Some(ev) = detector.step(&frame.intensity, frame.timestamp, roi)? {
                fired.push((ev.frame_index, ev.trigger));
            }
        }
        let first = fired.first().map(|f| f.0);
        println!("{label}: {} event frames, first at {first:?}", fired.len());
        for (i, t) in fired.iter().take(8) {
            println!("  frame {i:>3} {t:?}");
        }
    }
    Ok(())
}
