//! Gregorian ladders built from an origin instant with the standard leap rule.

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};

use super::{CalendarError, HierarchyTable, Origin, RungDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GregorianUnit {
    Minute,
    HalfHour,
    Hour,
    Day,
}

impl GregorianUnit {
    pub fn seconds(self) -> u64 {
        match self {
            GregorianUnit::Minute => 60,
            GregorianUnit::HalfHour => 1800,
            GregorianUnit::Hour => 3600,
            GregorianUnit::Day => 86_400,
        }
    }
}

pub const WEEKDAYS: [&str; 7] = ["Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"];

pub const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i32, month0: u32) -> u64 {
    match month0 {
        1 if is_leap_year(year) => 29,
        1 => 28,
        3 | 5 | 8 | 10 => 30,
        _ => 31,
    }
}

/// Month lengths for `years * 12` consecutive months starting at `(year, month0)`.
pub fn month_cardinalities(year: i32, month0: u32, years: u32) -> Vec<u64> {
    let mut out = Vec::with_capacity(years as usize * 12);
    let (mut y, mut m) = (year, month0);
    for _ in 0..years * 12 {
        out.push(days_in_month(y, m));
        m += 1;
        if m == 12 {
            m = 0;
            y += 1;
        }
    }
    out
}

/// Build `bottom -> ... -> day [-> week] -> month -> year` anchored at `origin`.
///
/// Month lengths repeat every `cycle_years` years starting from the origin's
/// month (4 covers any span that avoids a skipped century leap day; 400 is exact).
/// With `with_week`, weeks start on Sunday and months are counted in days.
pub fn hierarchy(
    origin: NaiveDateTime,
    bottom: GregorianUnit,
    with_week: bool,
    cycle_years: u32,
) -> Result<HierarchyTable, CalendarError> {
    if cycle_years == 0 {
        return Err(CalendarError::Definition("cycle_years must be positive".into()));
    }
    let t = origin.time();
    let aligned = match bottom {
        GregorianUnit::Minute => t.second() == 0,
        GregorianUnit::HalfHour => t.second() == 0 && t.minute().is_multiple_of(30),
        GregorianUnit::Hour => t.second() == 0 && t.minute() == 0,
        GregorianUnit::Day => t.num_seconds_from_midnight() == 0,
    };
    if !aligned || t.nanosecond() != 0 {
        return Err(CalendarError::Definition(format!("origin {origin} is not aligned to the bottom unit")));
    }
    let date = origin.date();
    let mut rungs = Vec::new();
    match bottom {
        GregorianUnit::Minute => rungs.push(RungDef::constant("minute", 60).with_phase(t.minute() as u64)),
        GregorianUnit::HalfHour => rungs.push(RungDef::constant("hhour", 2).with_phase(t.minute() as u64 / 30)),
        _ => {}
    }
    if bottom != GregorianUnit::Day {
        rungs.push(RungDef::constant("hour", 24).with_phase(t.hour() as u64));
    }
    let cards = month_cardinalities(date.year(), date.month0(), cycle_years);
    let month_phase = date.day0() as u64;
    if with_week {
        rungs.push(RungDef::constant("day", 7).with_phase(date.weekday().num_days_from_sunday() as u64));
        rungs.push(RungDef::irregular("week", cards).with_unit("day").with_phase(month_phase));
    } else {
        rungs.push(RungDef::irregular("day", cards).with_phase(month_phase));
    }
    rungs.push(RungDef::constant("month", 12).with_phase(date.month0() as u64));
    rungs.push(RungDef::top("year"));
    let origin_meta = Origin {
        description: format!("{} ({})", origin.format("%Y-%m-%d %H:%M"), WEEKDAYS[date.weekday().num_days_from_sunday() as usize]),
        instant: Some(origin.format("%Y-%m-%dT%H:%M:%S").to_string()),
        unit_seconds: Some(bottom.seconds()),
    };
    HierarchyTable::new(origin_meta, rungs)
}

/// Midnight of a calendar date.
pub fn midnight(year: i32, month: u32, day: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid calendar date")
}
