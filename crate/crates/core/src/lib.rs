//! Linear and cyclic time granularities over an integer index.
//!
//! - [`calendar`]: hierarchy tables, calendar files, relativity predicates
//! - [`cyclic`]: circular, quasi-circular and aperiodic granularity values
//! - [`table`]: ingestion and tables augmented with granularity columns
//! - [`harmony`]: occupancy tables and harmony/clash screening
//! - [`distill`]: per-cell quantile summaries, recommendations, plot specs
//! - [`fixtures`]: bundled calendars and seeded synthetic datasets

pub mod calendar;
pub mod cyclic;
pub mod distill;
pub mod fixtures;
pub mod harmony;
pub mod table;
