//! Sunrise, sunset and the resulting trap mode for a few places.
//!
//! ```bash
//! cargo run -p trapkit --example solar_schedule -- 2024-06-21
//! ```

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use trapkit::solar::{mode_at, solar_events, GeoLocation};

fn main() -> trapkit::Result<()> {
    let date = std::env::args()
        .nth(1)
        .map(|s| NaiveDate::parse_from_str(&s, "%Y-%m-%d"))
        .transpose()
        .map_err(|e| trapkit::Error::InvalidArgument(e.to_string()))?
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(2024, 6, 21).unwrap());
    let places = [
        ("Cologne", 50.94, 6.96),
        ("Quito", -0.18, -78.47),
        ("Longyearbyen", 78.22, 15.65),
        ("Honolulu", 21.31, -157.86),
    ];
    for (name, lat, lon) in places {
        let loc = GeoLocation::new(lat, lon)?;
        let ev = solar_events(&loc, date);
        let fmt = |t: Option<chrono::DateTime<Utc>>| t.map_or("--".to_owned(), |t| t.format("%H:%M:%S").to_string());
        println!(
            "{name:<13} sunrise {} UTC  sunset {} UTC  polar {:?}",
            fmt(ev.sunrise),
            fmt(ev.sunset),
            ev.polar
        );
        // hourly mode trace over the UTC day
        let midnight = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap());
        let trace: String = (0..24)
            .map(|h| match mode_at(&loc, midnight + Duration::hours(h)) {
                trapkit::solar::TrapMode::Daytime => 'D',
                trapkit::solar::TrapMode::Nighttime => 'n',
            })
            .collect();
        println!("{:<13} {trace}", "");
    }
    Ok(())
}
