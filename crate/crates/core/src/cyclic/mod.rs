//! Cyclic granularities: circular, quasi-circular and aperiodic level values
//! computed from index values, plus single/multiple order-up algebra.
//!
//! Levels are 0-based. A span descriptor `(lower, upper)` maps an index to the
//! position of its `lower` granule inside its `upper` granule. When the span
//! crosses an irregular rung whose cardinalities are counted in a lower unit
//! rung (weeks between days and months), the position is first taken in unit
//! granules and then divided by the unit-to-lower period, so `week_month` is
//! `floor(day_month / 7)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{lcm, AperiodicEventCalendar, CalendarError, ConversionRule, HierarchyTable, IndexValue};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CyclicError {
    #[error("`{name}` is {actual}, expected {expected}")]
    KindMismatch { name: String, expected: GranularityKind, actual: GranularityKind },
    #[error("span {lower}..{upper} crosses {count} irregular rungs; at most one is supported")]
    UnsupportedSpan { lower: String, upper: String, count: usize },
    #[error("level {level} is outside the {levels} levels of `{name}`")]
    OutOfDomain { name: String, level: u64, levels: u64 },
    #[error("invalid descriptor span {lower}..{upper}")]
    InvalidSpan { lower: usize, upper: usize },
    #[error("remap of `{base}` covers {got} of its {levels} levels")]
    PartialRemap { base: String, levels: u64, got: usize },
    #[error("remap of `{base}` skips target level {missing}")]
    NotSurjective { base: String, missing: u64 },
    #[error("`{name}` has {levels} levels but {labels} labels")]
    LabelCount { name: String, levels: u64, labels: usize },
    #[error("`{name}` repeats label {label:?}")]
    DuplicateLabel { name: String, label: String },
    #[error("`{0}` has no finite repetition")]
    NotPeriodic(String),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
}

impl CyclicError {
    pub fn code(&self) -> &'static str {
        match self {
            CyclicError::KindMismatch { .. } => "kind-mismatch",
            CyclicError::UnsupportedSpan { .. } => "unsupported-span",
            CyclicError::OutOfDomain { .. } => "out-of-domain",
            CyclicError::InvalidSpan { .. } => "invalid-span",
            CyclicError::PartialRemap { .. } => "partial",
            CyclicError::NotSurjective { .. } => "not-surjective",
            CyclicError::LabelCount { .. } => "label-count",
            CyclicError::DuplicateLabel { .. } => "duplicate-label",
            CyclicError::NotPeriodic(_) => "not-periodic",
            CyclicError::Calendar(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GranularityKind {
    Circular,
    QuasiCircular,
    Aperiodic,
}

impl fmt::Display for GranularityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GranularityKind::Circular => "circular",
            GranularityKind::QuasiCircular => "quasi-circular",
            GranularityKind::Aperiodic => "aperiodic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LevelValue(pub u64);

impl fmt::Display for LevelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DescriptorSource {
    /// Position of the `lower` granule inside the `upper` granule.
    Span { lower: usize, upper: usize },
    /// Category of the event calendar at the index's `unit` granule.
    Event { calendar: Arc<AperiodicEventCalendar>, unit: usize },
    /// `remap[base level]`.
    Derived { base: Box<CyclicDescriptor>, remap: Vec<u64> },
}

/// A named cyclic granularity bound to the rungs of one hierarchy table.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicDescriptor {
    name: String,
    source: DescriptorSource,
    kind: GranularityKind,
    levels: u64,
    labels: Option<Vec<String>>,
}

impl CyclicDescriptor {
    /// `C_{lower, upper}` named `<lower>_<upper>`.
    pub fn span(h: &HierarchyTable, lower: usize, upper: usize) -> Result<Self, CyclicError> {
        if lower >= upper || upper >= h.len() {
            return Err(CyclicError::InvalidSpan { lower, upper });
        }
        let irregular = h.irregular_in(lower, upper);
        let kind = match irregular.len() {
            0 => GranularityKind::Circular,
            1 => GranularityKind::QuasiCircular,
            n => {
                return Err(CyclicError::UnsupportedSpan {
                    lower: h.name(lower).to_string(),
                    upper: h.name(upper).to_string(),
                    count: n,
                })
            }
        };
        let levels = span_levels(h, lower, upper)?;
        Ok(CyclicDescriptor {
            name: format!("{}_{}", h.name(lower), h.name(upper)),
            source: DescriptorSource::Span { lower, upper },
            kind,
            levels,
            labels: None,
        })
    }

    /// Span descriptor by rung names.
    pub fn between(h: &HierarchyTable, lower: &str, upper: &str) -> Result<Self, CyclicError> {
        Self::span(h, h.rung_index(lower)?, h.rung_index(upper)?)
    }

    pub fn event(h: &HierarchyTable, calendar: Arc<AperiodicEventCalendar>) -> Result<Self, CyclicError> {
        let unit = h.rung_index(calendar.unit())?;
        let mut labels = calendar.labels();
        // gaps in the category numbering all read "none"; keep labels unique
        for (i, l) in labels.iter_mut().enumerate().skip(1) {
            if l == "none" {
                *l = format!("none-{i}");
            }
        }
        Ok(CyclicDescriptor {
            name: calendar.name().to_string(),
            levels: calendar.level_count() as u64,
            kind: GranularityKind::Aperiodic,
            source: DescriptorSource::Event { calendar, unit },
            labels: Some(labels),
        })
    }

    /// A descriptor whose level is `remap[base level]`. The remap must be total on
    /// the base levels and onto `0..=max(remap)`.
    pub fn derived(name: impl Into<String>, base: CyclicDescriptor, remap: Vec<u64>) -> Result<Self, CyclicError> {
        if remap.len() as u64 != base.levels {
            return Err(CyclicError::PartialRemap { base: base.name.clone(), levels: base.levels, got: remap.len() });
        }
        let levels = remap.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; levels as usize];
        for &r in &remap {
            seen[r as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(CyclicError::NotSurjective { base: base.name.clone(), missing: missing as u64 });
        }
        Ok(CyclicDescriptor {
            name: name.into(),
            kind: base.kind,
            levels,
            source: DescriptorSource::Derived { base: Box::new(base), remap },
            labels: None,
        })
    }

    /// Attach a label map; it must name every level exactly once.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, CyclicError> {
        if labels.len() as u64 != self.levels {
            return Err(CyclicError::LabelCount { name: self.name, levels: self.levels, labels: labels.len() });
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(CyclicError::DuplicateLabel { name: self.name.clone(), label: w[0].clone() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> GranularityKind {
        self.kind
    }

    pub fn source(&self) -> &DescriptorSource {
        &self.source
    }

    /// Number of distinct levels (maximum over the repetition for quasi-circular spans).
    pub fn level_count(&self) -> u64 {
        self.levels
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Labels for every level, defaulting to the decimal level index.
    pub fn level_labels(&self) -> Vec<String> {
        match &self.labels {
            Some(l) => l.clone(),
            None => (0..self.levels).map(|v| v.to_string()).collect(),
        }
    }

    /// `(lower, upper)` rungs of a span descriptor, looking through derivations.
    pub fn span_rungs(&self) -> Option<(usize, usize)> {
        match &self.source {
            DescriptorSource::Span { lower, upper } => Some((*lower, *upper)),
            DescriptorSource::Event { .. } => None,
            DescriptorSource::Derived { base, .. } => base.span_rungs(),
        }
    }

    /// Finest rung whose granule determines the level: values are constant
    /// within each granule of this rung.
    pub fn scan_rung(&self) -> usize {
        match &self.source {
            DescriptorSource::Span { lower, .. } => *lower,
            DescriptorSource::Event { unit, .. } => *unit,
            DescriptorSource::Derived { base, .. } => base.scan_rung(),
        }
    }

    /// Length in bottom granules after which the level sequence repeats, or
    /// `None` for aperiodic descriptors.
    pub fn cycle(&self, h: &HierarchyTable) -> Result<Option<u64>, CyclicError> {
        match &self.source {
            DescriptorSource::Span { lower, upper } => {
                let a = h.structure_cycle(*lower)?.0;
                let b = h.structure_cycle(*upper)?.0;
                Ok(Some(lcm(a, b).ok_or(CalendarError::Overflow)?))
            }
            DescriptorSource::Event { .. } => Ok(None),
            DescriptorSource::Derived { base, .. } => base.cycle(h),
        }
    }

    /// True when the level is a function of `z mod P(bottom, upper)`: a
    /// circular span over an all-constant ladder from the bottom.
    pub fn strictly_periodic(&self, h: &HierarchyTable) -> bool {
        match &self.source {
            DescriptorSource::Span { upper, .. } => h.irregular_in(0, *upper).is_empty(),
            DescriptorSource::Event { .. } => false,
            DescriptorSource::Derived { base, .. } => base.strictly_periodic(h),
        }
    }

    fn check_rungs(&self, h: &HierarchyTable) -> Result<(), CyclicError> {
        match &self.source {
            DescriptorSource::Span { lower, upper } if *upper >= h.len() => {
                Err(CyclicError::InvalidSpan { lower: *lower, upper: *upper })
            }
            DescriptorSource::Event { unit, .. } if *unit >= h.len() => {
                Err(CyclicError::InvalidSpan { lower: *unit, upper: *unit })
            }
            _ => Ok(()),
        }
    }
}

fn kind_mismatch(d: &CyclicDescriptor, expected: GranularityKind) -> CyclicError {
    CyclicError::KindMismatch { name: d.name.clone(), expected, actual: d.kind }
}

/// `Σ_{l≤i<m} phase_i · P(l, i)`: offset of the origin's rung-`l` granule inside
/// its rung-`m` granule, for a constant span.
fn phase_offset(h: &HierarchyTable, l: usize, m: usize) -> Result<u64, CyclicError> {
    let mut off: u64 = 0;
    let mut p: u64 = 1;
    for i in l..m {
        let r = h.rung(i);
        off = r.phase.checked_mul(p).and_then(|x| x.checked_add(off)).ok_or(CalendarError::Overflow)?;
        p = p.checked_mul(r.rule.period().unwrap_or(1)).ok_or(CalendarError::Overflow)?;
    }
    Ok(off)
}

/// Circular value over a constant span: `(g_l + offset) mod P(l, m)`.
fn circular_span(h: &HierarchyTable, l: usize, m: usize, z: IndexValue) -> Result<u64, CyclicError> {
    let p = h.period_length(l, m)?;
    let g = h.linear_granule(z, l) as u128;
    Ok(((g + phase_offset(h, l, m)? as u128) % p as u128) as u64)
}

/// Single-order-up value of constant rung `i`: position of its granule in the next rung.
fn single_order_up(h: &HierarchyTable, i: usize, z: IndexValue) -> Result<u64, CyclicError> {
    let r = h.rung(i);
    let p = r.rule.period().ok_or_else(|| CalendarError::IrregularSpan {
        lower: h.name(i).to_string(),
        upper: h.name(i + 1).to_string(),
    })?;
    Ok((h.linear_granule(z, i) + r.phase) % p)
}

/// `C_{B,G}(z)` for a circular descriptor.
pub fn circular_value(h: &HierarchyTable, d: &CyclicDescriptor, z: IndexValue) -> Result<LevelValue, CyclicError> {
    match (&d.source, d.kind) {
        (DescriptorSource::Span { lower, upper }, GranularityKind::Circular) => {
            d.check_rungs(h)?;
            Ok(LevelValue(circular_span(h, *lower, *upper, z)?))
        }
        _ => Err(kind_mismatch(d, GranularityKind::Circular)),
    }
}

/// `Q_{B,G'}(z)` for a quasi-circular descriptor.
pub fn quasi_circular_value(
    h: &HierarchyTable,
    d: &CyclicDescriptor,
    z: IndexValue,
) -> Result<LevelValue, CyclicError> {
    match (&d.source, d.kind) {
        (DescriptorSource::Span { lower, upper }, GranularityKind::QuasiCircular) => {
            d.check_rungs(h)?;
            compose_up(h, *lower, *upper, z)
        }
        _ => Err(kind_mismatch(d, GranularityKind::QuasiCircular)),
    }
}

/// `A_{B,M}(z)`: category of the event calendar at unit granule `z`, or 0.
pub fn aperiodic_value(cal: &AperiodicEventCalendar, z: IndexValue) -> LevelValue {
    LevelValue(cal.category_at(z.0) as u64)
}

/// Multiple-order-up value `C_{l,m}(z)` composed from single-order-up values.
///
/// Constant spans sum `P(l, i) · C_{i,i+1}(z)`. A span crossing one irregular
/// rung `j` (cardinalities in unit rung `u`) takes the offset inside the
/// rung-`j+1` granule in unit granules, extends it to rung `m` by adding the
/// cardinalities of the preceding rung-`j+1` granules, then converts to rung
/// `l`. Two or more irregular rungs are rejected.
pub fn compose_up(h: &HierarchyTable, l: usize, m: usize, z: IndexValue) -> Result<LevelValue, CyclicError> {
    if l >= m || m >= h.len() {
        return Err(CyclicError::InvalidSpan { lower: l, upper: m });
    }
    let irregular = h.irregular_in(l, m);
    match irregular.as_slice() {
        [] => {
            let mut v: u64 = 0;
            let mut p: u64 = 1;
            for i in l..m {
                v += p * single_order_up(h, i, z)?;
                p *= h.rung(i).rule.period().unwrap_or(1);
            }
            Ok(LevelValue(v))
        }
        &[j] => {
            let ConversionRule::Irregular(map) = &h.rung(j).rule else { unreachable!() };
            let u = map.unit();
            let upper = j + 1;
            let (k, offset) = map.locate(h.linear_granule(z, u) + h.rung(j).phase);
            let mut c_um = offset;
            if upper < m {
                let c = circular_span(h, upper, m, z)? as i64;
                let k = k as i64;
                c_um += (map.cumulative(k) - map.cumulative(k - c)) as u64;
            }
            let v = if l < u {
                compose_up(h, l, u, z)?.0 + h.period_length(l, u)? * c_um
            } else if l == u {
                c_um
            } else {
                c_um / h.period_length(u, l)?
            };
            Ok(LevelValue(v))
        }
        many => Err(CyclicError::UnsupportedSpan {
            lower: h.name(l).to_string(),
            upper: h.name(m).to_string(),
            count: many.len(),
        }),
    }
}

/// `C_{l1,m1}(z) = ⌊C_{l2,m2}(z) / P(l2, l1)⌋ mod P(l1, m1)` for
/// `l2 ≤ l1 < m1 ≤ m2` over a constant span.
pub fn reduce_to_single(
    h: &HierarchyTable,
    known: (usize, usize, LevelValue),
    target: (usize, usize),
) -> Result<LevelValue, CyclicError> {
    let (l2, m2, v) = known;
    let (l1, m1) = target;
    if !(l2 <= l1 && l1 < m1 && m1 <= m2 && m2 < h.len()) {
        return Err(CyclicError::InvalidSpan { lower: l1, upper: m1 });
    }
    let full = h.period_length(l2, m2)?;
    if v.0 >= full {
        return Err(CyclicError::OutOfDomain {
            name: format!("{}_{}", h.name(l2), h.name(m2)),
            level: v.0,
            levels: full,
        });
    }
    Ok(LevelValue(v.0 / h.period_length(l2, l1)? % h.period_length(l1, m1)?))
}

/// Level of any descriptor at bottom index `z`.
pub fn evaluate(h: &HierarchyTable, d: &CyclicDescriptor, z: IndexValue) -> Result<LevelValue, CyclicError> {
    match &d.source {
        DescriptorSource::Span { lower, upper } => {
            d.check_rungs(h)?;
            match d.kind {
                GranularityKind::Circular => Ok(LevelValue(circular_span(h, *lower, *upper, z)?)),
                _ => compose_up(h, *lower, *upper, z),
            }
        }
        DescriptorSource::Event { calendar, unit } => {
            d.check_rungs(h)?;
            Ok(aperiodic_value(calendar, IndexValue(h.linear_granule(z, *unit))))
        }
        DescriptorSource::Derived { base, remap } => Ok(LevelValue(remap[evaluate(h, base, z)?.0 as usize])),
    }
}

/// Display label of level `v`; the decimal level index when no map is attached.
pub fn apply_labels(d: &CyclicDescriptor, v: LevelValue) -> Result<String, CyclicError> {
    if v.0 >= d.levels {
        return Err(CyclicError::OutOfDomain { name: d.name.clone(), level: v.0, levels: d.levels });
    }
    Ok(match &d.labels {
        Some(l) => l[v.0 as usize].clone(),
        None => v.0.to_string(),
    })
}

/// Level count of a span: `P(l, m)` when circular, else the largest value
/// reachable over one repetition of the irregular rung, plus one.
fn span_levels(h: &HierarchyTable, l: usize, m: usize) -> Result<u64, CyclicError> {
    let irregular = h.irregular_in(l, m);
    let Some(&j) = irregular.first() else {
        return Ok(h.period_length(l, m)?);
    };
    let ConversionRule::Irregular(map) = &h.rung(j).rule else { unreachable!() };
    let u = map.unit();
    let upper = j + 1;
    // longest rung-m granule, in unit granules
    let max_units = if upper == m {
        map.max_cardinality()
    } else {
        let p = h.period_length(upper, m)? as i64;
        let off = phase_offset(h, upper, m)? as i64;
        (0..map.repetition() as i64)
            .map(|jj| {
                let s = jj * p - off;
                (map.cumulative(s + p) - map.cumulative(s)) as u64
            })
            .max()
            .unwrap_or(0)
    };
    Ok(if l < u {
        h.period_length(l, u)?.checked_mul(max_units).ok_or(CalendarError::Overflow)?
    } else if l == u {
        max_units
    } else {
        max_units.div_ceil(h.period_length(u, l)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::gregorian::{self, midnight, GregorianUnit};
    use crate::calendar::{EventCategory, Origin, RungDef};

    fn mayan() -> HierarchyTable {
        HierarchyTable::new(
            Origin::default(),
            vec![
                RungDef::constant("kin", 20),
                RungDef::constant("uinal", 18),
                RungDef::constant("tun", 20),
                RungDef::constant("katun", 20),
                RungDef::top("baktun"),
            ],
        )
        .unwrap()
    }

    fn minutes() -> HierarchyTable {
        HierarchyTable::new(
            Origin::default(),
            vec![RungDef::constant("minute", 60), RungDef::constant("hour", 24), RungDef::constant("day", 7), RungDef::top("week")],
        )
        .unwrap()
    }

    #[test]
    fn circular_examples() {
        let h = minutes();
        let hour_day = CyclicDescriptor::between(&h, "hour", "day").unwrap();
        let day_week = CyclicDescriptor::between(&h, "day", "week").unwrap();
        assert_eq!(circular_value(&h, &hour_day, IndexValue(1500)).unwrap(), LevelValue(1));
        assert_eq!(circular_value(&h, &day_week, IndexValue(1440)).unwrap(), LevelValue(1));
        assert_eq!(circular_value(&h, &day_week, IndexValue(0)).unwrap(), LevelValue(0));
        assert_eq!(CyclicDescriptor::between(&h, "hour", "week").unwrap().level_count(), 168);
        assert!(matches!(
            quasi_circular_value(&h, &hour_day, IndexValue(0)),
            Err(CyclicError::KindMismatch { .. })
        ));
    }

    #[test]
    fn quasi_examples() {
        let h13 = gregorian::hierarchy(midnight(2013, 1, 1), GregorianUnit::Day, false, 4).unwrap();
        let dm = CyclicDescriptor::between(&h13, "day", "month").unwrap();
        assert_eq!(dm.kind(), GranularityKind::QuasiCircular);
        assert_eq!(quasi_circular_value(&h13, &dm, IndexValue(31)).unwrap(), LevelValue(0));
        let dy = CyclicDescriptor::between(&h13, "day", "year").unwrap();
        assert_eq!(compose_up(&h13, 0, 2, IndexValue(59)).unwrap(), LevelValue(59));
        assert_eq!(dy.level_count(), 366);

        let h12 = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Day, false, 4).unwrap();
        let dm = CyclicDescriptor::between(&h12, "day", "month").unwrap();
        assert_eq!(quasi_circular_value(&h12, &dm, IndexValue(59)).unwrap(), LevelValue(28));
        assert_eq!(dm.level_count(), 31);
        assert!(matches!(circular_value(&h12, &dm, IndexValue(0)), Err(CyclicError::KindMismatch { .. })));
    }

    #[test]
    fn hour_of_month_worked_example() {
        let h = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Hour, true, 4).unwrap();
        // second day of the month, 05:00
        let z = IndexValue(24 + 5);
        let hd = compose_up(&h, 0, 1, z).unwrap().0;
        let dm = compose_up(&h, 1, 3, z).unwrap().0;
        assert_eq!((hd, dm), (5, 1));
        assert_eq!(compose_up(&h, 0, 3, z).unwrap(), LevelValue(29));
        assert_eq!(CyclicDescriptor::span(&h, 0, 3).unwrap().level_count(), 744);
        assert_eq!(CyclicDescriptor::span(&h, 2, 3).unwrap().level_count(), 5);
        assert_eq!(CyclicDescriptor::span(&h, 1, 2).unwrap().kind(), GranularityKind::Circular);
    }

    #[test]
    fn week_of_month_is_day_of_month_in_sevens() {
        let h = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Day, true, 4).unwrap();
        for z in 0..1461u64 {
            let dm = compose_up(&h, 0, 2, IndexValue(z)).unwrap().0;
            assert_eq!(compose_up(&h, 1, 2, IndexValue(z)).unwrap().0, dm / 7);
        }
    }

    #[test]
    fn mayan_uinal_of_baktun_matches_odometer() {
        let h = mayan();
        let (mut kin, mut uinal, mut tun, mut katun) = (0u64, 0u64, 0u64, 0u64);
        for z in 0..21_600u64 {
            let expected = uinal + 18 * (tun + 20 * katun);
            assert_eq!(compose_up(&h, 1, 4, IndexValue(z)).unwrap().0, expected, "z={z}");
            kin += 1;
            if kin == 20 {
                kin = 0;
                uinal += 1;
                if uinal == 18 {
                    uinal = 0;
                    tun += 1;
                    if tun == 20 {
                        tun = 0;
                        katun += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn reductions() {
        let h = mayan();
        assert_eq!(reduce_to_single(&h, (1, 4, LevelValue(37)), (2, 3)).unwrap(), LevelValue(2));
        assert_eq!(reduce_to_single(&h, (1, 4, LevelValue(37)), (1, 4)).unwrap(), LevelValue(37));
        let m = minutes();
        assert_eq!(reduce_to_single(&m, (1, 3, LevelValue(73)), (2, 3)).unwrap(), LevelValue(3));
        assert!(matches!(
            reduce_to_single(&m, (1, 3, LevelValue(168)), (2, 3)),
            Err(CyclicError::OutOfDomain { .. })
        ));
        let g = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Day, false, 4).unwrap();
        assert!(reduce_to_single(&g, (0, 2, LevelValue(3)), (1, 2)).is_err());
    }

    #[test]
    fn labels() {
        let h = minutes();
        let dw = CyclicDescriptor::between(&h, "day", "week")
            .unwrap()
            .with_labels(gregorian::WEEKDAYS.iter().map(|s| s.to_string()).collect())
            .unwrap();
        assert_eq!(apply_labels(&dw, LevelValue(0)).unwrap(), "Sunday");
        assert!(matches!(apply_labels(&dw, LevelValue(7)), Err(CyclicError::OutOfDomain { .. })));
        let hd = CyclicDescriptor::between(&h, "hour", "day").unwrap();
        assert_eq!(apply_labels(&hd, LevelValue(13)).unwrap(), "13");
        assert!(hd.clone().with_labels(vec!["a".into(); 24]).is_err());
        assert!(hd.with_labels(vec!["a".into()]).is_err());
    }

    #[test]
    fn derived_and_events() {
        let h = minutes();
        let dw = CyclicDescriptor::between(&h, "day", "week").unwrap();
        let wk = CyclicDescriptor::derived("wknd_wday", dw.clone(), vec![1, 0, 0, 0, 0, 0, 1]).unwrap();
        assert_eq!(wk.level_count(), 2);
        assert_eq!(evaluate(&h, &wk, IndexValue(0)).unwrap(), LevelValue(1));
        assert_eq!(evaluate(&h, &wk, IndexValue(1440)).unwrap(), LevelValue(0));
        assert!(matches!(
            CyclicDescriptor::derived("x", dw.clone(), vec![0; 6]),
            Err(CyclicError::PartialRemap { .. })
        ));
        assert!(matches!(
            CyclicDescriptor::derived("x", dw, vec![0, 2, 0, 0, 0, 0, 0]),
            Err(CyclicError::NotSurjective { missing: 1, .. })
        ));

        let cal = AperiodicEventCalendar::new(
            "term",
            "day",
            vec![EventCategory { index: 1, label: "in-session".into(), intervals: vec![1..3] }],
        )
        .unwrap();
        let ev = CyclicDescriptor::event(&h, Arc::new(cal)).unwrap();
        assert_eq!(evaluate(&h, &ev, IndexValue(1440)).unwrap(), LevelValue(1));
        assert_eq!(evaluate(&h, &ev, IndexValue(3 * 1440)).unwrap(), LevelValue(0));
        assert_eq!(ev.cycle(&h).unwrap(), None);
    }

    #[test]
    fn two_irregular_rungs_rejected() {
        let h = HierarchyTable::new(
            Origin::default(),
            vec![RungDef::irregular("a", vec![2, 3]), RungDef::irregular("b", vec![4]), RungDef::top("c")],
        )
        .unwrap();
        assert!(matches!(CyclicDescriptor::span(&h, 0, 2), Err(CyclicError::UnsupportedSpan { count: 2, .. })));
        assert!(matches!(compose_up(&h, 0, 2, IndexValue(0)), Err(CyclicError::UnsupportedSpan { .. })));
    }

    #[test]
    fn cycles() {
        let h = gregorian::hierarchy(midnight(2012, 1, 1), GregorianUnit::Day, true, 4).unwrap();
        let dy = CyclicDescriptor::span(&h, 0, 3).unwrap();
        let dw = CyclicDescriptor::span(&h, 0, 1).unwrap();
        assert_eq!(dy.cycle(&h).unwrap(), Some(1461));
        assert_eq!(dw.cycle(&h).unwrap(), Some(7));
        assert!(dw.strictly_periodic(&h));
        assert!(!dy.strictly_periodic(&h));
    }
}
