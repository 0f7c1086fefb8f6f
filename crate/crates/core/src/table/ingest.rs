use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::calendar::{CalendarError, HierarchyTable, IndexValue};

use super::{GranularTable, TableError};

/// How rows map to bottom-granule index values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IndexSpec {
    /// A civil timestamp column parsed with a chrono format string, counted in
    /// bottom granules from the hierarchy's origin instant.
    Timestamp {
        column: String,
        format: String,
        /// Expected bottom rung name; checked against the hierarchy.
        #[serde(default)]
        bottom: Option<String>,
        /// Expected origin (`%Y-%m-%dT%H:%M:%S`); checked against the hierarchy.
        #[serde(default)]
        origin: Option<String>,
    },
    /// One 0-based position column per rung, bottom first; the top column is an
    /// absolute granule index.
    Counters { columns: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestionSchema {
    pub index: IndexSpec,
    #[serde(default)]
    pub keys: Vec<String>,
    pub measurements: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

const ORIGIN_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn parse_timestamp(value: &str, format: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(value, format)
        .ok()
        .or_else(|| NaiveDate::parse_from_str(value, format).ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
}

fn parse_measurement(row: usize, column: &str, value: &str) -> Result<Option<f64>, TableError> {
    let v = value.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("na") || v.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    v.parse::<f64>()
        .map(Some)
        .map_err(|_| TableError::UnparseableValue { row, column: column.to_string(), value: value.to_string() })
}

/// Read a delimited file with a header row into a table indexed against `h`.
pub fn ingest<R: Read>(source: R, schema: &IngestionSchema, h: &HierarchyTable) -> Result<GranularTable, TableError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| TableError::MissingColumn(name.to_string()))
    };

    enum Indexer {
        Timestamp { col: usize, format: String, origin: NaiveDateTime, unit: i64 },
        Counters(Vec<usize>),
    }
    let (indexer, presentation) = match &schema.index {
        IndexSpec::Timestamp { column, format, bottom, origin } => {
            if let Some(b) = bottom {
                if b != h.name(0) {
                    return Err(TableError::BottomMismatch { expected: b.clone(), found: h.name(0).to_string() });
                }
            }
            let declared = h.origin().instant.as_deref().ok_or(TableError::MissingOrigin("an instant"))?;
            let unit = h.origin().unit_seconds.ok_or(TableError::MissingOrigin("unit_seconds"))?;
            let parse_origin = |s: &str| {
                NaiveDateTime::parse_from_str(s, ORIGIN_FORMAT)
                    .map_err(|e| CalendarError::Definition(format!("origin instant {s:?}: {e}")))
            };
            let origin_dt = parse_origin(declared)?;
            if let Some(o) = origin {
                if parse_origin(o)? != origin_dt {
                    return Err(CalendarError::Definition(format!(
                        "schema origin {o} differs from the calendar origin {declared}"
                    ))
                    .into());
                }
            }
            let c = col(column)?;
            (
                Indexer::Timestamp { col: c, format: format.clone(), origin: origin_dt, unit: unit as i64 },
                Some(column.clone()),
            )
        }
        IndexSpec::Counters { columns } => {
            if columns.len() != h.len() {
                return Err(CalendarError::PositionArity { expected: h.len(), got: columns.len() }.into());
            }
            (Indexer::Counters(columns.iter().map(|c| col(c)).collect::<Result<_, _>>()?), None)
        }
    };
    let key_cols: Vec<usize> = schema.keys.iter().map(|k| col(k)).collect::<Result<_, _>>()?;
    let meas_cols: Vec<usize> = schema.measurements.iter().map(|m| col(m)).collect::<Result<_, _>>()?;

    let mut index = Vec::new();
    let mut stamps = Vec::new();
    let mut keys: Vec<Vec<String>> = vec![Vec::new(); key_cols.len()];
    let mut meas: Vec<Vec<Option<f64>>> = vec![Vec::new(); meas_cols.len()];
    let mut positions = vec![0u64; h.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let z = match &indexer {
            Indexer::Timestamp { col, format, origin, unit } => {
                let raw = field(*col);
                let ts = parse_timestamp(raw.trim(), format).ok_or_else(|| TableError::UnparseableTimestamp {
                    row,
                    value: raw.to_string(),
                    format: format.clone(),
                })?;
                let secs = (ts - *origin).num_seconds();
                if secs < 0 {
                    return Err(TableError::PreOrigin { row });
                }
                if secs % unit != 0 {
                    return Err(TableError::Misaligned { row });
                }
                stamps.push(raw.to_string());
                IndexValue((secs / unit) as u64)
            }
            Indexer::Counters(cols) => {
                for (p, &c) in positions.iter_mut().zip(cols) {
                    let raw = field(c);
                    *p = raw.trim().parse().map_err(|_| TableError::UnparseableValue {
                        row,
                        column: headers[c].to_string(),
                        value: raw.to_string(),
                    })?;
                }
                match h.index_from_positions(&positions) {
                    Ok(z) => z,
                    Err(CalendarError::BeforeOrigin(_)) => return Err(TableError::PreOrigin { row }),
                    Err(e) => {
                        return Err(TableError::UnparseableValue {
                            row,
                            column: "positions".into(),
                            value: e.to_string(),
                        })
                    }
                }
            }
        };
        index.push(z);
        for (k, &c) in keys.iter_mut().zip(&key_cols) {
            k.push(field(c).to_string());
        }
        for ((m, &c), name) in meas.iter_mut().zip(&meas_cols).zip(&schema.measurements) {
            m.push(parse_measurement(row, name, field(c))?);
        }
    }
    let table = GranularTable::new(
        index,
        schema.keys.iter().cloned().zip(keys).collect(),
        schema.measurements.iter().cloned().zip(meas).collect(),
    )?;
    Ok(match presentation {
        Some(name) => table.with_presentation(name, stamps),
        None => table,
    })
}
