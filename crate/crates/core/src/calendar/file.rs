//! Calendar-definition files (TOML).
//!
//! ```toml
//! name = "mayan"
//!
//! [origin]
//! description = "0.0.0.0.0"
//!
//! [[rungs]]
//! name = "kin"
//! period = 20
//!
//! [[rungs]]
//! name = "uinal"
//! period = 18
//!
//! # ...
//!
//! [[rungs]]
//! name = "baktun"
//! ```
//!
//! A non-top rung declares exactly one of `period`, `cardinalities` or
//! `gregorian_months = { start = "YYYY-MM", years = N }`. Irregular rungs may
//! name a lower `unit` rung in which their cardinalities are counted. `phase`
//! (default 0) places the origin inside the parent granule. The top rung
//! declares nothing or `period = 1`.
//!
//! Optional sections: `[labels]` (granularity name to label list),
//! `[[derived]]` (level remaps of another granularity) and `[[events]]`
//! (aperiodic event calendars with half-open `intervals = [[start, end], ...]`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gregorian::month_cardinalities;
use super::{AperiodicEventCalendar, CalendarError, EventCategory, HierarchyDef, HierarchyTable, Origin, RuleDef, RungDef};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalendarFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    origin: Origin,
    rungs: Vec<RungFile>,
    #[serde(default)]
    labels: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    derived: Vec<DerivedDef>,
    #[serde(default)]
    events: Vec<EventFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RungFile {
    name: String,
    period: Option<u64>,
    cardinalities: Option<Vec<u64>>,
    gregorian_months: Option<GregorianMonths>,
    unit: Option<String>,
    #[serde(default)]
    phase: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GregorianMonths {
    /// `YYYY-MM` of the first month in the table.
    start: String,
    years: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    name: String,
    unit: Option<String>,
    categories: Vec<CategoryFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryFile {
    index: u32,
    label: String,
    intervals: Vec<[u64; 2]>,
}

/// A user-defined remap of another granularity's levels, such as weekday/weekend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedDef {
    pub name: String,
    pub base: String,
    /// `map[level]` is the derived level of base level `level`.
    pub map: Vec<u32>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

/// A hierarchy table together with labels, derived granularities and event calendars.
#[derive(Debug, Clone, PartialEq)]
pub struct Calendar {
    pub name: String,
    pub hierarchy: HierarchyTable,
    pub events: Vec<AperiodicEventCalendar>,
    pub labels: BTreeMap<String, Vec<String>>,
    pub derived: Vec<DerivedDef>,
}

impl Calendar {
    pub fn new(name: impl Into<String>, hierarchy: HierarchyTable) -> Self {
        Calendar {
            name: name.into(),
            hierarchy,
            events: Vec::new(),
            labels: BTreeMap::new(),
            derived: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CalendarError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CalendarError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CalendarError> {
        let file: CalendarFile = toml::from_str(text).map_err(|e| CalendarError::Parse(e.to_string()))?;
        let mut rungs = Vec::with_capacity(file.rungs.len());
        for r in file.rungs {
            let given = r.period.is_some() as u8 + r.cardinalities.is_some() as u8 + r.gregorian_months.is_some() as u8;
            if given > 1 {
                return Err(CalendarError::Definition(format!("rung `{}` declares more than one rule", r.name)));
            }
            let rule = if let Some(p) = r.period {
                RuleDef::Constant(p)
            } else if let Some(c) = r.cardinalities {
                RuleDef::Irregular { cardinalities: c, unit: r.unit.clone() }
            } else if let Some(g) = r.gregorian_months {
                let (year, month) = parse_year_month(&g.start)?;
                RuleDef::Irregular { cardinalities: month_cardinalities(year, month, g.years), unit: r.unit.clone() }
            } else {
                RuleDef::Sentinel
            };
            if r.unit.is_some() && !matches!(rule, RuleDef::Irregular { .. }) {
                return Err(CalendarError::Definition(format!("rung `{}`: `unit` applies to irregular rules only", r.name)));
            }
            rungs.push(RungDef { name: r.name, rule, phase: r.phase });
        }
        let hierarchy = super::validate_hierarchy(HierarchyDef { origin: file.origin, rungs })?;
        let mut events = Vec::with_capacity(file.events.len());
        for e in file.events {
            let unit = e.unit.unwrap_or_else(|| hierarchy.name(0).to_string());
            hierarchy.rung_index(&unit)?;
            let categories = e
                .categories
                .into_iter()
                .map(|c| EventCategory {
                    index: c.index,
                    label: c.label,
                    intervals: c.intervals.into_iter().map(|[s, e]| s..e).collect(),
                })
                .collect();
            events.push(AperiodicEventCalendar::new(e.name, unit, categories)?);
        }
        Ok(Calendar {
            name: file.name.unwrap_or_else(|| "calendar".to_string()),
            hierarchy,
            events,
            labels: file.labels,
            derived: file.derived,
        })
    }

    pub fn event_calendar(&self, name: &str) -> Option<&AperiodicEventCalendar> {
        self.events.iter().find(|e| e.name() == name)
    }
}

fn parse_year_month(s: &str) -> Result<(i32, u32), CalendarError> {
    let bad = || CalendarError::Definition(format!("expected YYYY-MM, got {s:?}"));
    let (y, m) = s.split_once('-').ok_or_else(bad)?;
    let year: i32 = y.parse().map_err(|_| bad())?;
    let month: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) {
        return Err(bad());
    }
    Ok((year, month - 1))
}
