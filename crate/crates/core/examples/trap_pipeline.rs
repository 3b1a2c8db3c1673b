//! Runs the full trap over a simulated evening: animals cross before and
//! after sunset, the trap switches from image-based triggering with active
//! stereo to PIR triggering with passive stereo, and each recorded sequence
//! is written to disk.
//!
//! ```bash
//! cargo run --release -p trapkit --example trap_pipeline -- /tmp/trap
//! ```

use std::path::PathBuf;

use chrono::Duration;
use trapkit::solar::{solar_events, GeoLocation};
use trapkit::synthgen::Species;
use trapkit::trapd::{run_pipeline, Crossing, SourceSpec, SyntheticStream, TrapConfig};

fn main() -> trapkit::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("trapkit-run"));
    let location = GeoLocation::new(50.94, 6.96)?;
    let date = chrono::NaiveDate::from_ymd_opt(2024, 6, 21).unwrap();
    let sunset = solar_events(&location, date).sunset.expect("Cologne has a sunset in June");
    let crossing = |start_frame, species| Crossing {
        start_frame,
        frames: 20,
        species,
        distance: 5.0,
        left_to_right: true,
    };
    let stream = SyntheticStream {
        // two minutes either side of sunset at 2 s per frame
        start: sunset - Duration::seconds(120),
        frames: 120,
        interval_s: 2.0,
        crossings: vec![crossing(20, Species::Deer), crossing(85, Species::Boar)],
        ..SyntheticStream::default()
    };
    let cfg = TrapConfig::new(location, SourceSpec::Synthetic(stream), &out);
    let summary = run_pipeline(&cfg)?;
    println!(
        "{} frames ({} day, {} night), {} motion events",
        summary.frames, summary.daytime_frames, summary.nighttime_frames, summary.events.len()
    );
    for seq in &summary.sequences {
        println!(
            "{}  {:?}  {:?}/{:?}  {} frames  {} .. {}",
            seq.id,
            seq.mode,
            seq.pipeline.motion,
            seq.pipeline.stereo,
            seq.frame_count,
            seq.start.format("%H:%M:%S"),
            seq.end.format("%H:%M:%S")
        );
    }
    println!("sequences written to {}", out.display());
    Ok(())
}
