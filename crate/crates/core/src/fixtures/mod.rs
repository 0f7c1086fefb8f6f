//! Bundled calendar definitions and seeded synthetic datasets.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, Timelike};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::calendar::gregorian::midnight;
use crate::table::{IndexSpec, IngestionSchema};

pub const DEFAULT_SEED: u64 = 2019;

pub const GREGORIAN_CAL: &str = include_str!("../../fixtures/gregorian.cal");
pub const SMART_METER_CAL: &str = include_str!("../../fixtures/smart_meter.cal");
pub const MAYAN_CAL: &str = include_str!("../../fixtures/mayan.cal");
pub const CRICKET_CAL: &str = include_str!("../../fixtures/cricket.cal");
pub const SEMESTER_CAL: &str = include_str!("../../fixtures/semester.cal");

/// `(file name, contents)` of every bundled calendar.
pub const CALENDARS: [(&str, &str); 5] = [
    ("gregorian.cal", GREGORIAN_CAL),
    ("smart_meter.cal", SMART_METER_CAL),
    ("mayan.cal", MAYAN_CAL),
    ("cricket.cal", CRICKET_CAL),
    ("semester.cal", SEMESTER_CAL),
];

/// Matches per season in `cricket.cal`.
pub const CRICKET_MATCHES: [u32; 9] = [24, 23, 24, 24, 24, 24, 24, 24, 23];

pub const SMART_METER_CUSTOMERS: [&str; 2] = ["10006414", "10017936"];

/// Half-hourly readings for two customers over 2012 and 2013.
///
/// Consumption has a morning and an evening peak, a flatter weekend profile,
/// a seasonal swing and multiplicative log-normal noise; roughly one reading
/// in a thousand is missing.
pub fn synthetic_smart_meter(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = LogNormal::new(0.0, 0.35).expect("valid log-normal");
    let start = midnight(2012, 1, 1);
    let steps = (midnight(2014, 1, 1) - start).num_minutes() / 30;
    let mut out = String::from("reading_datetime,customer_id,general_supply_kwh\n");
    for (c, id) in SMART_METER_CUSTOMERS.iter().enumerate() {
        let base = 0.12 + 0.08 * c as f64;
        let evening = if c == 0 { 0.9 } else { 0.55 };
        for i in 0..steps {
            let ts = start + Duration::minutes(30 * i);
            let hour = ts.hour() as f64 + ts.minute() as f64 / 60.0;
            let weekend = matches!(ts.weekday().num_days_from_sunday(), 0 | 6);
            let bump = |centre: f64, width: f64| (-((hour - centre) / width).powi(2)).exp();
            let (morning, late) = if weekend { (0.25 * bump(10.0, 2.5), 0.7) } else { (0.35 * bump(7.5, 1.2), 1.0) };
            let season = 1.0 + 0.3 * (2.0 * PI * (ts.ordinal0() as f64 / 365.25 - 0.55)).cos();
            let mean = (base + morning + late * evening * bump(19.0, 2.0)) * season;
            let missing = rng.random::<f64>() < 0.001;
            let value = mean * noise.sample(&mut rng);
            let _ = write!(out, "{},{id},", ts.format("%Y-%m-%d %H:%M:%S"));
            if !missing {
                let _ = write!(out, "{value:.3}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn smart_meter_schema() -> IngestionSchema {
    IngestionSchema {
        index: IndexSpec::Timestamp {
            column: "reading_datetime".into(),
            format: "%Y-%m-%d %H:%M:%S".into(),
            bottom: Some("hhour".into()),
            origin: None,
        },
        keys: vec!["customer_id".into()],
        measurements: vec!["general_supply_kwh".into()],
        delimiter: ',',
    }
}

/// Ball-by-ball runs for the first `seasons` seasons of `cricket.cal`, with
/// 0-based season, match, inning and over counters and 1-based balls.
pub fn cricket_sample(seed: u64, seasons: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let runs = [0u32, 1, 2, 3, 4, 6];
    let weights = WeightedIndex::new([35, 36, 9, 1, 12, 7]).expect("positive weights");
    let mut out = String::from("season,match,inning,over,ball,runs\n");
    for (season, &matches) in CRICKET_MATCHES.iter().enumerate().take(seasons) {
        for m in 0..matches {
            for inning in 0..2 {
                for over in 0..20 {
                    // death overs score a little faster
                    let boost = if over >= 16 { 1 } else { 0 };
                    for ball in 1..=6 {
                        let mut r = runs[weights.sample(&mut rng)];
                        if boost == 1 && r < 4 && rng.random_bool(0.1) {
                            r = 4;
                        }
                        let _ = writeln!(out, "{season},{m},{inning},{over},{ball},{r}");
                    }
                }
            }
        }
    }
    out
}

pub fn cricket_schema() -> IngestionSchema {
    IngestionSchema {
        index: IndexSpec::Counters {
            columns: vec!["over".into(), "inning".into(), "match".into(), "season".into()],
        },
        keys: vec!["ball".into()],
        measurements: vec!["runs".into()],
        delimiter: ',',
    }
}

/// Write every bundled calendar plus both datasets into `dir`.
pub fn write_all(dir: &Path, seed: u64) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: &str| -> io::Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    for (name, text) in CALENDARS {
        put(name, text)?;
    }
    put("synthetic_smart_meter.csv", &synthetic_smart_meter(seed))?;
    put("cricket_sample.csv", &cricket_sample(seed, 2))?;
    Ok(written)
}
