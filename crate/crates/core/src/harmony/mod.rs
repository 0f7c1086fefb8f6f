//! Occupancy cross-tabulation of cyclic-granularity pairs and
//! harmony/clash/near-clash screening.
//!
//! A cell is *empty* when no index (or row) carries its level combination and
//! *rare* when its count falls below `threshold` times the larger of two
//! references: the mean non-zero count of its row and the mean non-zero count
//! of its column. The rule is symmetric under transposition.

use std::fmt;
use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{lcm, CalendarError, HierarchyTable, IndexValue};
use crate::cyclic::{evaluate, CyclicDescriptor, CyclicError};
use crate::table::{GranularTable, TableError};

pub const DEFAULT_NEAR_THRESHOLD: f64 = 0.27;
pub const DEFAULT_MAX_LEVELS: u64 = 31;

/// Upper bound on scanned granules in a structural cross-tabulation.
const MAX_SCAN: u64 = 1_000_000_000;
const MAX_CELLS: u64 = 50_000_000;

#[derive(Debug, Error)]
pub enum HarmonyError {
    #[error("`{0}` is aperiodic; structural scans need a declared span")]
    NeedsSpan(String),
    #[error("span of {got} bottom granules is shorter than the common period {needed}")]
    InsufficientSpan { needed: u64, got: u64 },
    #[error("structural scan of {0} granules exceeds the supported size")]
    SpanTooLarge(u64),
    #[error("occupancy table of {0} cells exceeds the supported size")]
    TooManyCells(u64),
    #[error("table has no cyclic column `{0}`; augment it first")]
    MissingColumn(String),
    #[error("near-clash threshold {0} must be a finite non-negative number")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Cyclic(#[from] CyclicError),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
}

impl HarmonyError {
    pub fn code(&self) -> &'static str {
        match self {
            HarmonyError::NeedsSpan(_) => "needs-span",
            HarmonyError::InsufficientSpan { .. } => "insufficient-span",
            HarmonyError::SpanTooLarge(_) => "span-too-large",
            HarmonyError::TooManyCells(_) => "too-many-cells",
            HarmonyError::MissingColumn(_) => "missing-column",
            HarmonyError::InvalidThreshold(_) => "invalid-threshold",
            HarmonyError::Table(e) => e.code(),
            HarmonyError::Cyclic(e) => e.code(),
            HarmonyError::Calendar(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// Synthetic scan of one granule per step of the finest involved rung.
    Structural,
    /// Actual table rows.
    Observed,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Structural => "structural",
            CountMode::Observed => "observed",
        })
    }
}

/// `K × L` counts of level combinations, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccupancyTable {
    pub row: String,
    pub column: String,
    pub mode: CountMode,
    pub k: usize,
    pub l: usize,
    pub counts: Vec<u64>,
}

impl OccupancyTable {
    fn empty(ci: &CyclicDescriptor, cj: &CyclicDescriptor, mode: CountMode) -> Result<Self, HarmonyError> {
        let cells = ci.level_count().saturating_mul(cj.level_count());
        if cells > MAX_CELLS {
            return Err(HarmonyError::TooManyCells(cells));
        }
        Ok(OccupancyTable {
            row: ci.name().to_string(),
            column: cj.name().to_string(),
            mode,
            k: ci.level_count() as usize,
            l: cj.level_count() as usize,
            counts: vec![0; cells as usize],
        })
    }

    pub fn get(&self, k: usize, l: usize) -> u64 {
        self.counts[k * self.l + l]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.l.max(1)).map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut out = vec![0; self.l];
        for (i, c) in self.counts.iter().enumerate() {
            out[i % self.l] += c;
        }
        out
    }

    pub fn transpose(&self) -> OccupancyTable {
        let mut counts = vec![0; self.counts.len()];
        for k in 0..self.k {
            for l in 0..self.l {
                counts[l * self.k + k] = self.get(k, l);
            }
        }
        OccupancyTable {
            row: self.column.clone(),
            column: self.row.clone(),
            mode: self.mode,
            k: self.l,
            l: self.k,
            counts,
        }
    }
}

fn scan_granules(h: &HierarchyTable, s: usize, span: &Range<u64>) -> u64 {
    h.linear_granule(IndexValue(span.end - 1), s) - h.linear_granule(IndexValue(span.start), s) + 1
}

/// Count level combinations over `span` (bottom granules), one step per granule
/// of the finest rung either descriptor depends on. Without a span, one full
/// common repetition from the origin is scanned.
///
/// A declared span shorter than the common period is rejected when both
/// descriptors repeat with a constant period from the bottom rung.
pub fn cross_tab_structural(
    h: &HierarchyTable,
    ci: &CyclicDescriptor,
    cj: &CyclicDescriptor,
    span: Option<Range<u64>>,
) -> Result<OccupancyTable, HarmonyError> {
    let common = match (ci.cycle(h)?, cj.cycle(h)?) {
        (Some(a), Some(b)) => Some(lcm(a, b).ok_or(CalendarError::Overflow)?),
        _ => None,
    };
    let span = match (span, common) {
        (Some(s), Some(c)) if ci.strictly_periodic(h) && cj.strictly_periodic(h) && s.end.saturating_sub(s.start) < c => {
            return Err(HarmonyError::InsufficientSpan { needed: c, got: s.end.saturating_sub(s.start) })
        }
        (Some(s), _) => s,
        (None, Some(c)) => 0..c,
        (None, None) => {
            let aperiodic = if ci.cycle(h)?.is_none() { ci } else { cj };
            return Err(HarmonyError::NeedsSpan(aperiodic.name().to_string()));
        }
    };
    if span.is_empty() {
        return Err(CalendarError::EmptySpan.into());
    }
    let s = ci.scan_rung().min(cj.scan_rung());
    let steps = scan_granules(h, s, &span);
    if steps > MAX_SCAN {
        return Err(HarmonyError::SpanTooLarge(steps));
    }
    let mut table = OccupancyTable::empty(ci, cj, CountMode::Structural)?;
    let first = h.linear_granule(IndexValue(span.start), s) as i64;
    let l = table.l;
    let chunk = 1 << 14;
    let n_chunks = steps.div_ceil(chunk);
    let partials = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = std::collections::HashMap::<usize, u64>::new();
            for step in c * chunk..((c + 1) * chunk).min(steps) {
                let start = h.granule_start(s, first + step as i64).max(span.start as i64) as u64;
                let a = evaluate(h, ci, IndexValue(start))?.0 as usize;
                let b = evaluate(h, cj, IndexValue(start))?.0 as usize;
                *counts.entry(a * l + b).or_default() += 1;
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>, CyclicError>>()?;
    for part in partials {
        for (cell, n) in part {
            table.counts[cell] += n;
        }
    }
    Ok(table)
}

/// Count level combinations over the rows of an augmented table.
pub fn cross_tab_observed(t: &GranularTable, ci: &str, cj: &str) -> Result<OccupancyTable, HarmonyError> {
    let a = t.cyclic_column(ci).ok_or_else(|| HarmonyError::MissingColumn(ci.to_string()))?;
    let b = t.cyclic_column(cj).ok_or_else(|| HarmonyError::MissingColumn(cj.to_string()))?;
    let mut table = OccupancyTable::empty(&a.descriptor, &b.descriptor, CountMode::Observed)?;
    for (x, y) in a.values.iter().zip(&b.values) {
        table.counts[x.0 as usize * table.l + y.0 as usize] += 1;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Harmony,
    Clash,
    NearClash,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Harmony => "harmony",
            Verdict::Clash => "clash",
            Verdict::NearClash => "near-clash",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellEvidence {
    pub k: usize,
    pub l: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairClassification {
    pub verdict: Verdict,
    /// Empty cells for a clash, rare cells for a near-clash, nothing for a harmony.
    pub evidence: Vec<CellEvidence>,
    pub mode: CountMode,
    pub threshold: f64,
    pub occupancy: OccupancyTable,
}

impl PairClassification {
    /// The same verdict with the roles of the two granularities exchanged.
    pub fn transpose(&self) -> PairClassification {
        let mut evidence: Vec<CellEvidence> =
            self.evidence.iter().map(|e| CellEvidence { k: e.l, l: e.k, count: e.count }).collect();
        evidence.sort_by_key(|e| (e.k, e.l));
        PairClassification {
            verdict: self.verdict,
            evidence,
            mode: self.mode,
            threshold: self.threshold,
            occupancy: self.occupancy.transpose(),
        }
    }
}

fn nonzero_mean(values: impl Iterator<Item = u64>) -> f64 {
    let (sum, n) = values.filter(|&c| c > 0).fold((0u64, 0u64), |(s, n), c| (s + c, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

/// Clash when any cell is empty; near-clash when none is empty but some cell is
/// rare under `threshold`; harmony otherwise.
pub fn classify_pair(o: &OccupancyTable, threshold: f64) -> PairClassification {
    let empty: Vec<CellEvidence> = (0..o.k)
        .flat_map(|k| (0..o.l).map(move |l| (k, l)))
        .filter(|&(k, l)| o.get(k, l) == 0)
        .map(|(k, l)| CellEvidence { k, l, count: 0 })
        .collect();
    let (verdict, evidence) = if !empty.is_empty() {
        (Verdict::Clash, empty)
    } else {
        let row_ref: Vec<f64> = (0..o.k).map(|k| nonzero_mean((0..o.l).map(|l| o.get(k, l)))).collect();
        let col_ref: Vec<f64> = (0..o.l).map(|l| nonzero_mean((0..o.k).map(|k| o.get(k, l)))).collect();
        let mut rare = Vec::new();
        for (k, rk) in row_ref.iter().enumerate() {
            for (l, cl) in col_ref.iter().enumerate() {
                let c = o.get(k, l);
                if (c as f64) < threshold * rk.max(*cl) {
                    rare.push(CellEvidence { k, l, count: c });
                }
            }
        }
        if rare.is_empty() {
            (Verdict::Harmony, rare)
        } else {
            (Verdict::NearClash, rare)
        }
    };
    PairClassification { verdict, evidence, mode: o.mode, threshold, occupancy: o.clone() }
}

/// Where harmony screening counts level combinations.
#[derive(Debug, Clone, Copy)]
pub enum HarmonySource<'a> {
    Structural { hierarchy: &'a HierarchyTable, span: Option<&'a Range<u64>> },
    Observed { hierarchy: &'a HierarchyTable, table: &'a GranularTable },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonyOptions {
    pub max_levels: u64,
    pub threshold: f64,
    /// Keep near-clash pairs in the table instead of dropping them.
    pub keep_near: bool,
}

impl Default for HarmonyOptions {
    fn default() -> Self {
        HarmonyOptions { max_levels: DEFAULT_MAX_LEVELS, threshold: DEFAULT_NEAR_THRESHOLD, keep_near: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarmonyRow {
    pub facet: String,
    pub x: String,
    pub facet_levels: u64,
    pub x_levels: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonyTable {
    pub rows: Vec<HarmonyRow>,
    /// Descriptors removed by the level filter.
    pub excluded: Vec<String>,
    /// One classification per unordered pair of retained descriptors, with the
    /// earlier descriptor as the occupancy row.
    pub pairs: Vec<PairClassification>,
}

impl HarmonyTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarmonyError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["facet_variable", "x_variable", "facet_levels", "x_levels"])
            .map_err(TableError::from)?;
        for r in &self.rows {
            wr.write_record([r.facet.as_str(), r.x.as_str(), &r.facet_levels.to_string(), &r.x_levels.to_string()])
                .map_err(TableError::from)?;
        }
        wr.flush().map_err(TableError::from)?;
        Ok(())
    }
}

/// Screen every ordered pair of descriptors with at most `max_levels` levels.
///
/// Rows are ordered by x-axis descriptor, then facet descriptor, both in input
/// order. Clashes are always dropped; near-clashes unless `keep_near` is set.
pub fn harmony_table(
    ds: &[CyclicDescriptor],
    source: HarmonySource<'_>,
    opts: HarmonyOptions,
) -> Result<HarmonyTable, HarmonyError> {
    if !opts.threshold.is_finite() || opts.threshold < 0.0 {
        return Err(HarmonyError::InvalidThreshold(opts.threshold));
    }
    let (kept, excluded): (Vec<&CyclicDescriptor>, Vec<&CyclicDescriptor>) =
        ds.iter().partition(|d| d.level_count() <= opts.max_levels);
    let augmented;
    let table = match source {
        HarmonySource::Observed { hierarchy, table } => {
            let owned: Vec<CyclicDescriptor> = kept.iter().map(|d| (*d).clone()).collect();
            augmented = table.augment(hierarchy, &owned)?;
            Some(&augmented)
        }
        HarmonySource::Structural { .. } => None,
    };
    let pairs: Vec<(usize, usize)> =
        (0..kept.len()).flat_map(|i| (i + 1..kept.len()).map(move |j| (i, j))).collect();
    let classified = pairs
        .par_iter()
        .map(|&(i, j)| {
            let o = match (source, table) {
                (HarmonySource::Structural { hierarchy, span }, _) => {
                    cross_tab_structural(hierarchy, kept[i], kept[j], span.cloned())?
                }
                (_, Some(t)) => cross_tab_observed(t, kept[i].name(), kept[j].name())?,
                _ => unreachable!(),
            };
            Ok(classify_pair(&o, opts.threshold))
        })
        .collect::<Result<Vec<_>, HarmonyError>>()?;

    let verdict = |a: usize, b: usize| {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        classified[pairs.iter().position(|&p| p == (i, j)).expect("pair evaluated")].verdict
    };
    let mut rows = Vec::new();
    for x in 0..kept.len() {
        for facet in 0..kept.len() {
            if x == facet {
                continue;
            }
            let v = verdict(x, facet);
            if v == Verdict::Harmony || (v == Verdict::NearClash && opts.keep_near) {
                rows.push(HarmonyRow {
                    facet: kept[facet].name().to_string(),
                    x: kept[x].name().to_string(),
                    facet_levels: kept[facet].level_count(),
                    x_levels: kept[x].level_count(),
                    verdict: v,
                });
            }
        }
    }
    Ok(HarmonyTable {
        rows,
        excluded: excluded.iter().map(|d| d.name().to_string()).collect(),
        pairs: classified,
    })
}
