//! Distribution summaries over (facet level, x level) cells, display
//! recommendations and declarative plot specifications.

mod spec;

pub use spec::{
    emit_plot_spec, CellSeries, DataReference, Geometry, Layer, LayerKind, Mapping, PlotOptions, PlotSpec, PLOT_SPEC_FORMAT,
};

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cyclic::CyclicDescriptor;
use crate::harmony::{CountMode, PairClassification, Verdict};
use crate::table::GranularTable;

pub const DEFAULT_PROBS: [f64; 7] = [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99];

/// Cells with fewer observations are flagged in plot specifications.
pub const SMALL_CELL: u64 = 30;

/// Smallest cell size at which letter-value displays are suggested.
pub const LARGE_CELL: u64 = 1000;

#[derive(Debug, Error)]
pub enum DistillError {
    #[error("unknown measurement `{0}`")]
    UnknownMeasurement(String),
    #[error("table has no cyclic column `{0}`; augment it first")]
    MissingColumn(String),
    #[error("probability list is empty")]
    EmptyProbabilities,
    #[error("probabilities must be strictly increasing inside (0, 1): {0}")]
    InvalidProbabilities(String),
    #[error("no cell summaries to draw")]
    EmptySummaries,
    #[error("geometry {geometry} is unsupported: {reason}")]
    UnsupportedGeometry { geometry: Geometry, reason: String },
    #[error("summaries describe `{found}` but `{expected}` was requested")]
    DescriptorMismatch { expected: String, found: String },
    #[error("`{facet}` and `{x}` clash ({empty} empty cells); pass force to emit anyway")]
    ClashRefused { facet: String, x: String, empty: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl DistillError {
    pub fn code(&self) -> &'static str {
        match self {
            DistillError::UnknownMeasurement(_) => "unknown-measurement",
            DistillError::MissingColumn(_) => "missing-column",
            DistillError::EmptyProbabilities => "empty-probabilities",
            DistillError::InvalidProbabilities(_) => "invalid-probabilities",
            DistillError::EmptySummaries => "empty-summaries",
            DistillError::UnsupportedGeometry { .. } => "unsupported-geometry",
            DistillError::DescriptorMismatch { .. } => "descriptor-mismatch",
            DistillError::ClashRefused { .. } => "clash-refused",
            DistillError::Io(_) => "io",
            DistillError::Csv(_) => "csv",
            DistillError::Json(_) => "json",
        }
    }
}

/// Linear interpolation between order statistics (sample quantile type 7):
/// `h = (n - 1) p`, `Q(p) = x[⌊h⌋] + (h - ⌊h⌋)(x[⌊h⌋ + 1] - x[⌊h⌋])`.
///
/// `sorted` must be non-empty and ascending.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let mut h = (n - 1) as f64 * p;
    // land exactly on an order statistic when p = k / (n - 1) up to rounding
    let r = h.round();
    if (h - r).abs() <= 4.0 * f64::EPSILON * r.max(1.0) {
        h = r;
    }
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetterValue {
    pub depth: u32,
    pub letter: String,
    pub lower: f64,
    pub upper: f64,
}

const LETTERS: &str = "MFEDCBAZYXWVUTSRQPONLKJIHG";

/// Nested quantile pairs `(Q(2^-d), Q(1 - 2^-d))` for depths `1..⌈log2 n⌉ - 1`;
/// depth 1 is the median.
pub fn letter_values(sorted: &[f64]) -> Vec<LetterValue> {
    let n = sorted.len();
    if n < 2 {
        return Vec::new();
    }
    let depths = (usize::BITS - (n - 1).leading_zeros()).saturating_sub(1);
    (1..=depths)
        .map(|d| {
            let p = 0.5f64.powi(d as i32);
            LetterValue {
                depth: d,
                letter: LETTERS.chars().nth(d as usize - 1).map_or_else(|| format!("L{d}"), |c| c.to_string()),
                lower: quantile(sorted, p),
                upper: quantile(sorted, 1.0 - p),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub facet_level: u64,
    pub facet_label: String,
    pub x_level: u64,
    pub x_label: String,
    /// Non-missing observations in the cell.
    pub n: u64,
    /// `(probability, value)`; empty when `n = 0`.
    pub quantiles: Vec<(f64, f64)>,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub letter_values: Vec<LetterValue>,
}

impl CellSummary {
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

/// Every (facet, x) cell, facet-major, including empty ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummaries {
    pub x: String,
    pub facet: String,
    pub response: String,
    pub probs: Vec<f64>,
    pub cells: Vec<CellSummary>,
}

impl CellSummaries {
    pub fn cell(&self, facet_level: u64, x_level: u64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.facet_level == facet_level && c.x_level == x_level)
    }

    /// Delimited export with columns `facet, x, prob, value, n`, one row per
    /// cell and probability; empty cells have an empty value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DistillError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["facet", "x", "prob", "value", "n"])?;
        for c in &self.cells {
            for (i, p) in self.probs.iter().enumerate() {
                let value = c.quantiles.get(i).map(|(_, v)| v.to_string()).unwrap_or_default();
                wr.write_record([&c.facet_label, &c.x_label, &p.to_string(), &value, &c.n.to_string()])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_probs(probs: &[f64]) -> Result<(), DistillError> {
    if probs.is_empty() {
        return Err(DistillError::EmptyProbabilities);
    }
    let bad = probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) || probs.windows(2).any(|w| w[0] >= w[1]);
    if bad {
        return Err(DistillError::InvalidProbabilities(format!("{probs:?}")));
    }
    Ok(())
}

fn summarize(facet_level: u64, facet_label: String, x_level: u64, x_label: String, mut v: Vec<f64>, probs: &[f64]) -> CellSummary {
    v.sort_by(f64::total_cmp);
    let n = v.len() as u64;
    if v.is_empty() {
        return CellSummary {
            facet_level,
            facet_label,
            x_level,
            x_label,
            n,
            quantiles: Vec::new(),
            mean: None,
            min: None,
            max: None,
            letter_values: Vec::new(),
        };
    }
    // summing in sorted order keeps the mean independent of row order
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    CellSummary {
        facet_level,
        facet_label,
        x_level,
        x_label,
        n,
        quantiles: probs.iter().map(|&p| (p, quantile(&v, p))).collect(),
        mean: Some(mean),
        min: v.first().copied(),
        max: v.last().copied(),
        letter_values: letter_values(&v),
    }
}

/// Summarize measurement `v` over every (facet level, x level) cell of an
/// augmented table. Missing measurements are skipped.
pub fn summarize_cells(
    t: &GranularTable,
    x: &str,
    facet: &str,
    v: &str,
    probs: &[f64],
) -> Result<CellSummaries, DistillError> {
    check_probs(probs)?;
    let xc = t.cyclic_column(x).ok_or_else(|| DistillError::MissingColumn(x.to_string()))?;
    let fc = t.cyclic_column(facet).ok_or_else(|| DistillError::MissingColumn(facet.to_string()))?;
    let values = t.measurement(v).ok_or_else(|| DistillError::UnknownMeasurement(v.to_string()))?;
    let (k, l) = (fc.descriptor.level_count() as usize, xc.descriptor.level_count() as usize);
    let mut cells: Vec<Vec<f64>> = vec![Vec::new(); k * l];
    for ((f, xv), val) in fc.values.iter().zip(&xc.values).zip(values) {
        if let Some(val) = val {
            cells[f.0 as usize * l + xv.0 as usize].push(*val);
        }
    }
    let f_labels = fc.descriptor.level_labels();
    let x_labels = xc.descriptor.level_labels();
    let cells = cells
        .into_par_iter()
        .enumerate()
        .map(|(i, vals)| {
            let (f, xl) = (i / l, i % l);
            summarize(f as u64, f_labels[f].clone(), xl as u64, x_labels[xl].clone(), vals, probs)
        })
        .collect();
    Ok(CellSummaries {
        x: x.to_string(),
        facet: facet.to_string(),
        response: v.to_string(),
        probs: probs.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelsCategory {
    Low,
    Medium,
    High,
    VeryHigh,
}

impl fmt::Display for LevelsCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LevelsCategory::Low => "low",
            LevelsCategory::Medium => "medium",
            LevelsCategory::High => "high",
            LevelsCategory::VeryHigh => "very-high",
        })
    }
}

/// Inclusive upper bounds of the low, medium and high categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelBounds {
    pub low: u64,
    pub medium: u64,
    pub high: u64,
}

impl Default for LevelBounds {
    fn default() -> Self {
        LevelBounds { low: 7, medium: 14, high: 31 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelsCategorization {
    pub levels: u64,
    pub category: LevelsCategory,
    pub bounds: LevelBounds,
}

pub fn categorize_levels(n_levels: u64, bounds: LevelBounds) -> LevelsCategorization {
    let category = if n_levels <= bounds.low {
        LevelsCategory::Low
    } else if n_levels <= bounds.medium {
        LevelsCategory::Medium
    } else if n_levels <= bounds.high {
        LevelsCategory::High
    } else {
        LevelsCategory::VeryHigh
    };
    LevelsCategorization { levels: n_levels, category, bounds }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub x: String,
    pub facet: String,
    pub verdict: Verdict,
    pub x_levels: LevelsCategorization,
    pub facet_levels: LevelsCategorization,
    /// Suggested geometry, absent when the pair is refused.
    pub geometry: Option<Geometry>,
    pub alternatives: Vec<Geometry>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub refusal: Option<String>,
}

fn cite(evidence: &[crate::harmony::CellEvidence], x: &CyclicDescriptor, facet: &CyclicDescriptor, limit: usize) -> String {
    let fl = facet.level_labels();
    let xl = x.level_labels();
    let mut parts: Vec<String> = evidence
        .iter()
        .take(limit)
        .map(|e| format!("({}={}, {}={}: {})", facet.name(), fl[e.k], x.name(), xl[e.l], e.count))
        .collect();
    if evidence.len() > limit {
        parts.push(format!("and {} more", evidence.len() - limit));
    }
    parts.join(", ")
}

/// Suggest a display for `x` against `facet` given their classification. The
/// classification's occupancy must have `facet` as rows and `x` as columns.
pub fn recommend(
    x: &CyclicDescriptor,
    facet: &CyclicDescriptor,
    classification: &PairClassification,
    bounds: LevelBounds,
) -> Recommendation {
    let x_levels = categorize_levels(x.level_count(), bounds);
    let facet_levels = categorize_levels(facet.level_count(), bounds);
    let mut warnings = Vec::new();
    let notes = vec![format!(
        "mapping `{}` to x compares its levels within each `{}` facet; swapping the roles compares `{}` levels within each `{}` level instead",
        x.name(),
        facet.name(),
        facet.name(),
        x.name()
    )];
    if classification.verdict == Verdict::Clash {
        return Recommendation {
            x: x.name().to_string(),
            facet: facet.name().to_string(),
            verdict: Verdict::Clash,
            x_levels,
            facet_levels,
            geometry: None,
            alternatives: Vec::new(),
            warnings,
            notes,
            refusal: Some(format!(
                "clash: {} empty level combinations, e.g. {}",
                classification.evidence.len(),
                cite(&classification.evidence, x, facet, 5)
            )),
        };
    }
    if classification.verdict == Verdict::NearClash {
        warnings.push(format!(
            "near-clash: {} rare level combinations, e.g. {}",
            classification.evidence.len(),
            cite(&classification.evidence, x, facet, 5)
        ));
    }
    if facet_levels.category == LevelsCategory::VeryHigh {
        warnings.push(format!("`{}` has {} levels; too many facets to compare", facet.name(), facet.level_count()));
    }
    let smallest = classification.occupancy.counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    let large = classification.mode == CountMode::Observed && smallest >= LARGE_CELL;
    let (geometry, alternatives) = match x_levels.category {
        LevelsCategory::High | LevelsCategory::VeryHigh => (Geometry::QuantileArea, vec![Geometry::ViolinLikeDensity]),
        _ if large => (Geometry::LetterValueCounts, vec![Geometry::Box, Geometry::ViolinLikeDensity]),
        _ => (Geometry::Box, vec![Geometry::ViolinLikeDensity]),
    };
    Recommendation {
        x: x.name().to_string(),
        facet: facet.name().to_string(),
        verdict: classification.verdict,
        x_levels,
        facet_levels,
        geometry: Some(geometry),
        alternatives,
        warnings,
        notes,
        refusal: None,
    }
}
