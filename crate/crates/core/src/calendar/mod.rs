//! Linear granularities, hierarchy tables and calendar definitions.

mod events;
mod file;
pub mod gregorian;
mod hierarchy;
mod relativity;

pub use events::{AperiodicEventCalendar, EventCategory};
pub use file::{Calendar, DerivedDef};
pub use hierarchy::{
    validate_hierarchy, ConversionRule, HierarchyDef, HierarchyTable, IndexValue, IrregularMapping,
    LinearGranularityDef, Origin, Rung, RuleDef, RungDef,
};
pub(crate) use hierarchy::lcm;
pub use relativity::{finer_than, groups_into, is_periodical, Granule, MaterializedGranularity, Periodicity};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CalendarError {
    #[error("hierarchy has no rungs")]
    EmptyHierarchy,
    #[error("hierarchy needs at least 2 rungs, found {0}")]
    TooFewRungs(usize),
    #[error("invalid rung name {0:?}")]
    InvalidName(String),
    #[error("duplicate rung name `{0}`")]
    DuplicateRung(String),
    #[error("top rung `{0}` must carry the sentinel period 1")]
    NonSentinelTop(String),
    #[error("rung `{0}` has no conversion rule")]
    MissingRule(String),
    #[error("rung `{rung}` has invalid period {period} (non-top periods must be >= 2)")]
    InvalidPeriod { rung: String, period: u64 },
    #[error("rung `{0}` has an empty cardinality list")]
    EmptyCardinalities(String),
    #[error("rung `{0}` has a zero cardinality")]
    ZeroCardinality(String),
    #[error("rung `{rung}` declares unit `{unit}` which is not at or below it")]
    UnitAboveRung { rung: String, unit: String },
    #[error("rung `{rung}` has phase {phase} outside its first parent granule")]
    PhaseOutOfRange { rung: String, phase: u64 },
    #[error("unknown rung `{0}`")]
    UnknownRung(String),
    #[error("invalid rung span [{lower}, {upper}]")]
    InvalidSpan { lower: usize, upper: usize },
    #[error("span {lower}..{upper} crosses an irregular rung")]
    IrregularSpan { lower: String, upper: String },
    #[error("arithmetic overflow")]
    Overflow,
    #[error("expected {expected} positions, got {got}")]
    PositionArity { expected: usize, got: usize },
    #[error("position {position} out of range for rung `{rung}`")]
    PositionOutOfRange { rung: String, position: u64 },
    #[error("positions cannot address rung `{0}` whose cardinalities use a lower unit")]
    UnsupportedPositions(String),
    #[error("addressed granule starts {0} granules before the origin")]
    BeforeOrigin(i64),
    #[error("empty span")]
    EmptySpan,
    #[error("granularities are materialized over different spans")]
    SpanMismatch,
    #[error("`{fine}` does not group into `{coarse}` over the span")]
    NotGrouping { fine: String, coarse: String },
    #[error("span holds {0} complete coarse granules; at least 2 are needed")]
    InsufficientSpan(usize),
    #[error("event calendar `{calendar}`: {reason}")]
    InvalidEvents { calendar: String, reason: String },
    #[error("calendar file: {0}")]
    Parse(String),
    #[error("calendar file: {0}")]
    Definition(String),
}

impl CalendarError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CalendarError::EmptyHierarchy => "empty-hierarchy",
            CalendarError::TooFewRungs(_) => "too-few-rungs",
            CalendarError::InvalidName(_) => "invalid-name",
            CalendarError::DuplicateRung(_) => "duplicate-name",
            CalendarError::NonSentinelTop(_) => "non-sentinel-top",
            CalendarError::MissingRule(_) => "missing-rule",
            CalendarError::InvalidPeriod { .. } => "invalid-period",
            CalendarError::EmptyCardinalities(_) => "empty-cardinalities",
            CalendarError::ZeroCardinality(_) => "zero-cardinality",
            CalendarError::UnitAboveRung { .. } => "unit-above-rung",
            CalendarError::PhaseOutOfRange { .. } => "phase-out-of-range",
            CalendarError::UnknownRung(_) => "unknown-rung",
            CalendarError::InvalidSpan { .. } => "invalid-span",
            CalendarError::IrregularSpan { .. } => "irregular-span",
            CalendarError::Overflow => "overflow",
            CalendarError::PositionArity { .. } => "position-arity",
            CalendarError::PositionOutOfRange { .. } => "position-out-of-range",
            CalendarError::UnsupportedPositions(_) => "unsupported-positions",
            CalendarError::BeforeOrigin(_) => "pre-origin",
            CalendarError::EmptySpan => "empty-span",
            CalendarError::SpanMismatch => "span-mismatch",
            CalendarError::NotGrouping { .. } => "not-grouping",
            CalendarError::InsufficientSpan(_) => "insufficient-span",
            CalendarError::InvalidEvents { .. } => "invalid-events",
            CalendarError::Parse(_) => "calendar-parse",
            CalendarError::Definition(_) => "calendar-definition",
        }
    }
}
