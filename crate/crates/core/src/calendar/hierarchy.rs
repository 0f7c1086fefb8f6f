//! Hierarchy tables: ordered ladders of linear granularities.
//!
//! Each rung carries the rule converting it into the next coarser rung. The
//! top rung carries the sentinel `Constant { period: 1 }`.
//!
//! Granule indices are 0-based and granule 0 of every rung is the granule
//! containing the origin. A rung's `phase` is the position of the origin's
//! granule inside its parent granule (e.g. an origin falling on a Tuesday gives
//! the `day -> week` rung a phase of 2 when weeks start on Sunday).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::CalendarError;

/// A position on the integer index set, counting bottom granules from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexValue(pub u64);

impl IndexValue {
    pub fn get(self) -> u64 {
        self.0
    }
}

impl From<u64> for IndexValue {
    fn from(z: u64) -> Self {
        IndexValue(z)
    }
}

impl fmt::Display for IndexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearGranularityDef {
    pub name: String,
    pub order: usize,
}

/// Cardinality table `|T_w|` of an irregular grouping, repeated with period
/// `R' = cardinalities.len()`.
///
/// Cardinalities are counted in granules of the `unit` rung, which is the rung
/// carrying the rule unless declared lower (months over a day/week/month ladder
/// are counted in days).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrregularMapping {
    cardinalities: Vec<u64>,
    prefix: Vec<u64>,
    unit: usize,
}

impl IrregularMapping {
    pub fn cardinalities(&self) -> &[u64] {
        &self.cardinalities
    }

    /// Number of granules in one repetition of the grouping (`R'`).
    pub fn repetition(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    /// Unit granules in one full repetition.
    pub fn total(&self) -> u64 {
        self.prefix[self.cardinalities.len()]
    }

    /// Smallest `r` dividing `R'` with `|T_w| = |T_{w mod r}|` throughout.
    pub fn minimal_repetition(&self) -> usize {
        let n = self.cardinalities.len();
        (1..=n)
            .find(|&r| n % r == 0 && (r..n).all(|i| self.cardinalities[i] == self.cardinalities[i % r]))
            .unwrap_or(n)
    }

    pub fn max_cardinality(&self) -> u64 {
        self.cardinalities.iter().copied().max().unwrap_or(0)
    }

    /// `Σ_{w<k} |T_{w mod R'}|` for any integer `k`, extending the table
    /// periodically in both directions.
    pub fn cumulative(&self, k: i64) -> i64 {
        let r = self.repetition() as i64;
        k.div_euclid(r) * self.total() as i64 + self.prefix[k.rem_euclid(r) as usize] as i64
    }

    /// Locate the granule containing unit-offset `x`: returns `(k, x - cumulative(k))`.
    pub fn locate(&self, x: u64) -> (u64, u64) {
        let total = self.total();
        let cycles = x / total;
        let rem = x % total;
        // number of granule ends <= rem
        let k = self.prefix[1..].partition_point(|&end| end <= rem);
        (
            cycles * self.repetition() as u64 + k as u64,
            rem - self.prefix[k],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConversionRule {
    Constant { period: u64 },
    Irregular(IrregularMapping),
}

impl ConversionRule {
    pub fn is_constant(&self) -> bool {
        matches!(self, ConversionRule::Constant { .. })
    }

    pub fn period(&self) -> Option<u64> {
        match self {
            ConversionRule::Constant { period } => Some(*period),
            ConversionRule::Irregular(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rung {
    pub def: LinearGranularityDef,
    pub rule: ConversionRule,
    pub phase: u64,
}

impl Rung {
    pub fn name(&self) -> &str {
        &self.def.name
    }
}

/// Free-form origin description plus the optional instant it denotes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    #[serde(default)]
    pub description: String,
    /// ISO-8601 civil date-time of index 0, when the index is temporal.
    #[serde(default)]
    pub instant: Option<String>,
    /// Length of one bottom granule in seconds, when the index is temporal.
    #[serde(default)]
    pub unit_seconds: Option<u64>,
}

/// Unvalidated rule as written by a user or a fixture builder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleDef {
    Constant(u64),
    Irregular {
        cardinalities: Vec<u64>,
        unit: Option<String>,
    },
    /// Top-of-ladder marker.
    Sentinel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RungDef {
    pub name: String,
    pub rule: RuleDef,
    pub phase: u64,
}

impl RungDef {
    pub fn constant(name: impl Into<String>, period: u64) -> Self {
        RungDef { name: name.into(), rule: RuleDef::Constant(period), phase: 0 }
    }

    pub fn irregular(name: impl Into<String>, cardinalities: Vec<u64>) -> Self {
        RungDef {
            name: name.into(),
            rule: RuleDef::Irregular { cardinalities, unit: None },
            phase: 0,
        }
    }

    pub fn top(name: impl Into<String>) -> Self {
        RungDef { name: name.into(), rule: RuleDef::Sentinel, phase: 0 }
    }

    pub fn with_phase(mut self, phase: u64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        if let RuleDef::Irregular { unit: u, .. } = &mut self.rule {
            *u = Some(unit.into());
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyDef {
    pub origin: Origin,
    pub rungs: Vec<RungDef>,
}

/// A validated hierarchy table `H_n: (G, C, K)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyTable {
    origin: Origin,
    rungs: Vec<Rung>,
}

/// Check every hierarchy invariant and build the table.
pub fn validate_hierarchy(def: HierarchyDef) -> Result<HierarchyTable, CalendarError> {
    let HierarchyDef { origin, rungs: defs } = def;
    if defs.is_empty() {
        return Err(CalendarError::EmptyHierarchy);
    }
    if defs.len() < 2 {
        return Err(CalendarError::TooFewRungs(defs.len()));
    }
    for (i, d) in defs.iter().enumerate() {
        if d.name.trim().is_empty() {
            return Err(CalendarError::InvalidName(d.name.clone()));
        }
        if defs[..i].iter().any(|other| other.name == d.name) {
            return Err(CalendarError::DuplicateRung(d.name.clone()));
        }
    }

    let last = defs.len() - 1;
    let mut rungs = Vec::with_capacity(defs.len());
    for (i, d) in defs.iter().enumerate() {
        let rule = match &d.rule {
            RuleDef::Sentinel | RuleDef::Constant(1) if i == last => ConversionRule::Constant { period: 1 },
            _ if i == last => return Err(CalendarError::NonSentinelTop(d.name.clone())),
            RuleDef::Sentinel => return Err(CalendarError::MissingRule(d.name.clone())),
            RuleDef::Constant(p) if *p < 2 => {
                return Err(CalendarError::InvalidPeriod { rung: d.name.clone(), period: *p })
            }
            RuleDef::Constant(p) => {
                if d.phase >= *p {
                    return Err(CalendarError::PhaseOutOfRange { rung: d.name.clone(), phase: d.phase });
                }
                ConversionRule::Constant { period: *p }
            }
            RuleDef::Irregular { cardinalities, unit } => {
                if cardinalities.is_empty() {
                    return Err(CalendarError::EmptyCardinalities(d.name.clone()));
                }
                if cardinalities.contains(&0) {
                    return Err(CalendarError::ZeroCardinality(d.name.clone()));
                }
                let unit = match unit {
                    None => i,
                    Some(u) => {
                        let pos = defs
                            .iter()
                            .position(|r| &r.name == u)
                            .ok_or_else(|| CalendarError::UnknownRung(u.clone()))?;
                        if pos > i {
                            return Err(CalendarError::UnitAboveRung { rung: d.name.clone(), unit: u.clone() });
                        }
                        pos
                    }
                };
                if d.phase >= cardinalities[0] {
                    return Err(CalendarError::PhaseOutOfRange { rung: d.name.clone(), phase: d.phase });
                }
                let mut prefix = Vec::with_capacity(cardinalities.len() + 1);
                prefix.push(0u64);
                for c in cardinalities {
                    let next = prefix.last().unwrap().checked_add(*c).ok_or(CalendarError::Overflow)?;
                    prefix.push(next);
                }
                ConversionRule::Irregular(IrregularMapping { cardinalities: cardinalities.clone(), prefix, unit })
            }
        };
        rungs.push(Rung {
            def: LinearGranularityDef { name: d.name.clone(), order: i },
            rule,
            phase: if i == last { 0 } else { d.phase },
        });
    }
    Ok(HierarchyTable { origin, rungs })
}

impl HierarchyTable {
    pub fn new(origin: Origin, rungs: Vec<RungDef>) -> Result<Self, CalendarError> {
        validate_hierarchy(HierarchyDef { origin, rungs })
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn rungs(&self) -> &[Rung] {
        &self.rungs
    }

    pub fn len(&self) -> usize {
        self.rungs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rungs.is_empty()
    }

    pub fn rung(&self, i: usize) -> &Rung {
        &self.rungs[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.rungs[i].def.name
    }

    pub fn bottom(&self) -> &Rung {
        &self.rungs[0]
    }

    pub fn rung_index(&self, name: &str) -> Result<usize, CalendarError> {
        self.rungs
            .iter()
            .position(|r| r.def.name == name)
            .ok_or_else(|| CalendarError::UnknownRung(name.to_string()))
    }

    fn check_span(&self, l: usize, m: usize) -> Result<(), CalendarError> {
        if m >= self.rungs.len() || l > m {
            return Err(CalendarError::InvalidSpan { lower: l, upper: m });
        }
        Ok(())
    }

    /// Rung positions in `[l, m)` whose rule is irregular.
    pub fn irregular_in(&self, l: usize, m: usize) -> Vec<usize> {
        (l..m.min(self.rungs.len())).filter(|&i| !self.rungs[i].rule.is_constant()).collect()
    }

    /// `P(l, m)`: product of the constant periods of rungs `l..m`.
    pub fn period_length(&self, l: usize, m: usize) -> Result<u64, CalendarError> {
        self.check_span(l, m)?;
        let mut p: u64 = 1;
        for i in l..m {
            match &self.rungs[i].rule {
                ConversionRule::Constant { period } => {
                    p = p.checked_mul(*period).ok_or(CalendarError::Overflow)?;
                }
                ConversionRule::Irregular(_) => {
                    return Err(CalendarError::IrregularSpan {
                        lower: self.name(l).to_string(),
                        upper: self.name(m).to_string(),
                    })
                }
            }
        }
        Ok(p)
    }

    /// `period_length` by rung name.
    pub fn period_between(&self, lower: &str, upper: &str) -> Result<u64, CalendarError> {
        self.period_length(self.rung_index(lower)?, self.rung_index(upper)?)
    }

    /// Index of the granule of rung `m` containing bottom granule `z`.
    ///
    /// Panics if `m` is not a rung of the table.
    pub fn linear_granule(&self, z: IndexValue, m: usize) -> u64 {
        if m == 0 {
            return z.0;
        }
        let below = &self.rungs[m - 1];
        match &below.rule {
            ConversionRule::Constant { period } => (self.linear_granule(z, m - 1) + below.phase) / period,
            ConversionRule::Irregular(map) => {
                let x = self.linear_granule(z, map.unit) + below.phase;
                map.locate(x).0
            }
        }
    }

    /// First bottom granule of granule `j` of rung `m`. Negative when the
    /// granule begins before the origin.
    pub fn granule_start(&self, m: usize, j: i64) -> i64 {
        if m == 0 {
            return j;
        }
        let below = &self.rungs[m - 1];
        match &below.rule {
            ConversionRule::Constant { period } => {
                self.granule_start(m - 1, j * *period as i64 - below.phase as i64)
            }
            ConversionRule::Irregular(map) => {
                self.granule_start(map.unit, map.cumulative(j) - below.phase as i64)
            }
        }
    }

    /// Bottom-granule half-open interval covered by granule `j` of rung `m`.
    pub fn granule_interval(&self, m: usize, j: i64) -> (i64, i64) {
        (self.granule_start(m, j), self.granule_start(m, j + 1))
    }

    /// Length in bottom granules after which the granule structure of rung `m`
    /// repeats, with the number of rung-`m` granules in one repetition.
    pub fn structure_cycle(&self, m: usize) -> Result<(u64, u64), CalendarError> {
        self.check_span(0, m)?;
        // (bottom length, granule count) per rung
        let mut cycles: Vec<(u64, u64)> = vec![(1, 1)];
        for i in 1..=m {
            let below = &self.rungs[i - 1];
            let (from, size) = match &below.rule {
                ConversionRule::Constant { period } => (i - 1, *period),
                ConversionRule::Irregular(map) => (map.unit, map.prefix[map.minimal_repetition()]),
            };
            let (len, count) = cycles[from];
            let t = size / gcd(count, size);
            let len = len.checked_mul(t).ok_or(CalendarError::Overflow)?;
            let advanced = count.checked_mul(t).ok_or(CalendarError::Overflow)?;
            let granules = match &below.rule {
                ConversionRule::Constant { .. } => advanced / size,
                ConversionRule::Irregular(map) => advanced / size * map.minimal_repetition() as u64,
            };
            cycles.push((len, granules));
        }
        Ok(cycles[m])
    }

    /// Rebuild the table with rung `bottom` as the new bottom granularity.
    ///
    /// Irregular rungs whose unit lies below the new bottom cannot be kept.
    pub fn rebase(&self, bottom: usize) -> Result<HierarchyTable, CalendarError> {
        self.check_span(bottom, self.rungs.len() - 1)?;
        let mut defs = Vec::new();
        let last = self.rungs.len() - 1;
        for (i, r) in self.rungs.iter().enumerate().skip(bottom) {
            let rule = if i == last {
                RuleDef::Sentinel
            } else {
                match &r.rule {
                    ConversionRule::Constant { period } => RuleDef::Constant(*period),
                    ConversionRule::Irregular(map) => {
                        if map.unit < bottom {
                            return Err(CalendarError::UnitAboveRung {
                                rung: r.def.name.clone(),
                                unit: self.name(map.unit).to_string(),
                            });
                        }
                        RuleDef::Irregular {
                            cardinalities: map.cardinalities.clone(),
                            unit: Some(self.name(map.unit).to_string()),
                        }
                    }
                }
            };
            defs.push(RungDef { name: r.def.name.clone(), rule, phase: r.phase });
        }
        let mut origin = self.origin.clone();
        if bottom > 0 {
            origin.unit_seconds = match (origin.unit_seconds, self.period_length(0, bottom)) {
                (Some(s), Ok(p)) => Some(s * p),
                _ => None,
            };
        }
        HierarchyTable::new(origin, defs)
    }

    /// Bottom index of the granule addressed by per-rung positions.
    ///
    /// `positions[i]` is the position of the rung-`i` granule inside its parent
    /// granule, counted from 0; the top entry is an absolute granule index of the
    /// top rung. A position inside a granule that begins before the origin is
    /// rejected.
    pub fn index_from_positions(&self, positions: &[u64]) -> Result<IndexValue, CalendarError> {
        if positions.len() != self.rungs.len() {
            return Err(CalendarError::PositionArity { expected: self.rungs.len(), got: positions.len() });
        }
        let top = self.rungs.len() - 1;
        // start of the current granule, expressed in units of the rung being descended into
        let mut g: i64 = positions[top] as i64;
        for i in (0..top).rev() {
            let rung = &self.rungs[i];
            let pos = positions[i] as i64;
            g = match &rung.rule {
                ConversionRule::Constant { period } => {
                    if pos >= *period as i64 {
                        return Err(CalendarError::PositionOutOfRange { rung: rung.def.name.clone(), position: positions[i] });
                    }
                    g * *period as i64 - rung.phase as i64 + pos
                }
                ConversionRule::Irregular(map) => {
                    if map.unit != i {
                        return Err(CalendarError::UnsupportedPositions(rung.def.name.clone()));
                    }
                    let size = map.cardinalities[g.rem_euclid(map.repetition() as i64) as usize] as i64;
                    if pos >= size {
                        return Err(CalendarError::PositionOutOfRange { rung: rung.def.name.clone(), position: positions[i] });
                    }
                    map.cumulative(g) - rung.phase as i64 + pos
                }
            };
        }
        if g < 0 {
            return Err(CalendarError::BeforeOrigin(g));
        }
        Ok(IndexValue(g as u64))
    }

    /// Human-readable conversion operator for rung `i` (`60`, `k(day, month)`, `1`).
    pub fn operator_label(&self, i: usize) -> String {
        match &self.rungs[i].rule {
            ConversionRule::Constant { period } => period.to_string(),
            ConversionRule::Irregular(map) => {
                let next = self.rungs.get(i + 1).map(|r| r.def.name.as_str()).unwrap_or("?");
                format!("k({}, {})", self.name(map.unit), next)
            }
        }
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub(crate) fn lcm(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}
