//! Sunrise/sunset on the device and the day/night mode schedule.
//!
//! Event times follow the NOAA solar calculator equations (Meeus-based solar
//! coordinates, equation of time) with the standard refraction zenith of
//! 90.833°. Each event is refined by re-evaluating the solar coordinates at the
//! previous estimate, which keeps the result within a few seconds of the
//! calculator's iterated output.

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZENITH_DEG: f64 = 90.833;

/// Observer position in degrees (north and east positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoLocation {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoLocation {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::InvalidArgument(format!(
                "location out of range: lat {latitude}, lon {longitude}"
            )));
        }
        Ok(Self {
            latitude,
            longitude,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polar {
    None,
    PolarDay,
    PolarNight,
}

/// Sunrise and sunset of one UTC calendar date. Both are absent exactly when
/// the sun never crosses the horizon that day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolarEvents {
    pub sunrise: Option<DateTime<Utc>>,
    pub sunset: Option<DateTime<Utc>>,
    pub polar: Polar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrapMode {
    Daytime,
    Nighttime,
}

fn julian_day(t: DateTime<Utc>) -> f64 {
    t.timestamp() as f64 / 86_400.0 + t.timestamp_subsec_nanos() as f64 / 86.4e12 + 2_440_587.5
}

/// Declination (degrees) and equation of time (minutes) at Julian day `jd`.
fn solar_coordinates(jd: f64) -> (f64, f64) {
    let t = (jd - 2_451_545.0) / 36_525.0;
    let mean_long = (280.466_46 + t * (36_000.769_83 + t * 0.000_303_2)).rem_euclid(360.0);
    let mean_anom = 357.529_11 + t * (35_999.050_29 - 0.000_153_7 * t);
    let ecc = 0.016_708_634 - t * (0.000_042_037 + 0.000_000_126_7 * t);
    let m = mean_anom.to_radians();
    let center = m.sin() * (1.914_602 - t * (0.004_817 + 0.000_014 * t))
        + (2.0 * m).sin() * (0.019_993 - 0.000_101 * t)
        + (3.0 * m).sin() * 0.000_289;
    let true_long = mean_long + center;
    let omega = (125.04 - 1_934.136 * t).to_radians();
    let app_long = true_long - 0.005_69 - 0.004_78 * omega.sin();
    let mean_obliq = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.000_59 - t * 0.001_813))) / 60.0) / 60.0;
    let obliq = (mean_obliq + 0.002_56 * omega.cos()).to_radians();
    let declination = (obliq.sin() * app_long.to_radians().sin()).asin().to_degrees();

    let y = (obliq / 2.0).tan().powi(2);
    let l0 = mean_long.to_radians();
    let eq_time = 4.0
        * (y * (2.0 * l0).sin() - 2.0 * ecc * m.sin() + 4.0 * ecc * y * m.sin() * (2.0 * l0).cos()
            - 0.5 * y * y * (4.0 * l0).sin()
            - 1.25 * ecc * ecc * (2.0 * m).sin())
        .to_degrees();
    (declination, eq_time)
}

/// Hour angle of the sun at the refraction zenith; `Err(polar)` when the sun
/// stays above or below the horizon.
fn sunrise_hour_angle(latitude: f64, declination: f64) -> std::result::Result<f64, Polar> {
    let (lat, dec) = (latitude.to_radians(), declination.to_radians());
    let cos_ha = ZENITH_DEG.to_radians().cos() / (lat.cos() * dec.cos()) - lat.tan() * dec.tan();
    if !cos_ha.is_finite() {
        // at the poles the sign of the declination decides
        return Err(if (latitude >= 0.0) == (declination >= 0.0) {
            Polar::PolarDay
        } else {
            Polar::PolarNight
        });
    }
    if cos_ha > 1.0 {
        Err(Polar::PolarNight)
    } else if cos_ha < -1.0 {
        Err(Polar::PolarDay)
    } else {
        Ok(cos_ha.acos().to_degrees())
    }
}

fn midnight(date: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("valid midnight"))
}

/// Event time in minutes after UTC midnight; `sign` is -1 for sunrise, +1 for
/// sunset.
fn event_minutes(loc: &GeoLocation, date: NaiveDate, sign: f64) -> std::result::Result<f64, Polar> {
    let day_start = julian_day(midnight(date));
    let mut minutes = 720.0 - 4.0 * loc.longitude;
    for _ in 0..3 {
        let (dec, eqt) = solar_coordinates(day_start + minutes / 1440.0);
        let ha = sunrise_hour_angle(loc.latitude, dec)?;
        minutes = 720.0 - 4.0 * (loc.longitude - sign * ha) - eqt;
    }
    Ok(minutes)
}

/// Sunrise and sunset for the UTC calendar date `date` at `loc`.
pub fn solar_events(loc: &GeoLocation, date: NaiveDate) -> SolarEvents {
    // polar status is decided at local solar noon
    let noon = julian_day(midnight(date)) + (720.0 - 4.0 * loc.longitude) / 1440.0;
    let (dec, _) = solar_coordinates(noon);
    if let Err(polar) = sunrise_hour_angle(loc.latitude, dec) {
        return SolarEvents {
            sunrise: None,
            sunset: None,
            polar,
        };
    }
    let at = |m: f64| midnight(date) + Duration::milliseconds((m * 60_000.0).round() as i64);
    match (event_minutes(loc, date, -1.0), event_minutes(loc, date, 1.0)) {
        (Ok(rise), Ok(set)) => SolarEvents {
            sunrise: Some(at(rise)),
            sunset: Some(at(set)),
            polar: Polar::None,
        },
        // the horizon crossing vanishes between noon and the event itself
        (Err(polar), _) | (_, Err(polar)) => SolarEvents {
            sunrise: None,
            sunset: None,
            polar,
        },
    }
}

/// Trap mode at instant `t`: daytime from sunrise (inclusive) to sunset
/// (exclusive). Windows of the neighbouring UTC dates are consulted too, so
/// longitudes far from Greenwich whose daylight straddles UTC midnight are
/// handled.
pub fn mode_at(loc: &GeoLocation, t: DateTime<Utc>) -> TrapMode {
    let date = t.date_naive();
    let today = solar_events(loc, date);
    match today.polar {
        Polar::PolarDay => return TrapMode::Daytime,
        Polar::PolarNight => return TrapMode::Nighttime,
        Polar::None => {}
    }
    let neighbours = [date.pred_opt(), Some(date), date.succ_opt()];
    let daytime = neighbours.into_iter().flatten().any(|d| {
        let ev = if d == date { today } else { solar_events(loc, d) };
        matches!((ev.sunrise, ev.sunset), (Some(r), Some(s)) if r <= t && t < s)
    });
    if daytime {
        TrapMode::Daytime
    } else {
        TrapMode::Nighttime
    }
}
