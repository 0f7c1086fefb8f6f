//! Indexed observational data augmented with cyclic-granularity columns.

mod ingest;
mod registry;

pub use ingest::{ingest, IndexSpec, IngestionSchema};
pub use registry::{cyclic_count, derive_custom, enumerate_between, enumerate_cyclic};

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::calendar::{CalendarError, HierarchyTable, IndexValue};
use crate::cyclic::{evaluate, CyclicDescriptor, CyclicError, LevelValue};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp {value:?} with format {format:?}")]
    UnparseableTimestamp { row: usize, value: String, format: String },
    #[error("row {row}: cannot parse {column} value {value:?}")]
    UnparseableValue { row: usize, column: String, value: String },
    #[error("row {row}: duplicate key/index pair")]
    Duplicate { row: usize },
    #[error("row {row}: timestamp precedes the origin")]
    PreOrigin { row: usize },
    #[error("row {row}: timestamp is not aligned to the bottom granularity")]
    Misaligned { row: usize },
    #[error("hierarchy origin lacks {0}; timestamps cannot be converted")]
    MissingOrigin(&'static str),
    #[error("schema expects bottom granularity `{expected}`, hierarchy bottom is `{found}`")]
    BottomMismatch { expected: String, found: String },
    #[error("column `{0}` already exists with different contents")]
    ColumnConflict(String),
    #[error("unknown granularity `{0}`")]
    UnknownGranularity(String),
    #[error("unknown measurement `{0}`")]
    UnknownMeasurement(String),
    #[error(transparent)]
    Cyclic(#[from] CyclicError),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
}

impl TableError {
    pub fn code(&self) -> &'static str {
        match self {
            TableError::Io(_) => "io",
            TableError::Csv(_) => "csv",
            TableError::MissingColumn(_) => "missing-column",
            TableError::UnparseableTimestamp { .. } => "unparseable-timestamp",
            TableError::UnparseableValue { .. } => "unparseable-value",
            TableError::Duplicate { .. } => "duplicate",
            TableError::PreOrigin { .. } => "pre-origin",
            TableError::Misaligned { .. } => "misaligned-timestamp",
            TableError::MissingOrigin(_) => "missing-origin",
            TableError::BottomMismatch { .. } => "bottom-mismatch",
            TableError::ColumnConflict(_) => "column-conflict",
            TableError::UnknownGranularity(_) => "unknown-granularity",
            TableError::UnknownMeasurement(_) => "unknown-measurement",
            TableError::Cyclic(e) => e.code(),
            TableError::Calendar(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicColumn {
    pub descriptor: CyclicDescriptor,
    pub values: Vec<LevelValue>,
}

/// Index, keys and measurements, plus cached cyclic columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GranularTable {
    index: Vec<IndexValue>,
    /// Original timestamp text, kept for presentation only.
    presentation: Option<(String, Vec<String>)>,
    keys: Vec<(String, Vec<String>)>,
    measurements: Vec<(String, Vec<Option<f64>>)>,
    cyclic: Vec<CyclicColumn>,
}

impl GranularTable {
    /// Build a table from columns of equal length; `(keys, index)` pairs must be unique.
    pub fn new(
        index: Vec<IndexValue>,
        keys: Vec<(String, Vec<String>)>,
        measurements: Vec<(String, Vec<Option<f64>>)>,
    ) -> Result<Self, TableError> {
        let n = index.len();
        for (name, col) in &keys {
            if col.len() != n {
                return Err(TableError::ColumnConflict(name.clone()));
            }
        }
        for (name, col) in &measurements {
            if col.len() != n {
                return Err(TableError::ColumnConflict(name.clone()));
            }
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for (row, z) in index.iter().enumerate() {
            let key: Vec<&str> = keys.iter().map(|(_, c)| c[row].as_str()).collect();
            if !seen.insert((key, *z)) {
                return Err(TableError::Duplicate { row: row + 1 });
            }
        }
        Ok(GranularTable { index, presentation: None, keys, measurements, cyclic: Vec::new() })
    }

    pub(crate) fn with_presentation(mut self, column: String, values: Vec<String>) -> Self {
        self.presentation = Some((column, values));
        self
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index(&self) -> &[IndexValue] {
        &self.index
    }

    pub fn presentation(&self) -> Option<(&str, &[String])> {
        self.presentation.as_ref().map(|(n, v)| (n.as_str(), v.as_slice()))
    }

    pub fn keys(&self) -> &[(String, Vec<String>)] {
        &self.keys
    }

    pub fn measurements(&self) -> &[(String, Vec<Option<f64>>)] {
        &self.measurements
    }

    pub fn measurement(&self, name: &str) -> Option<&[Option<f64>]> {
        self.measurements.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn cyclic_columns(&self) -> &[CyclicColumn] {
        &self.cyclic
    }

    pub fn cyclic_column(&self, name: &str) -> Option<&CyclicColumn> {
        self.cyclic.iter().find(|c| c.descriptor.name() == name)
    }

    fn has_plain_column(&self, name: &str) -> bool {
        self.keys.iter().any(|(n, _)| n == name)
            || self.measurements.iter().any(|(n, _)| n == name)
            || self.presentation.as_ref().is_some_and(|(n, _)| n == name)
            || name == "index"
    }

    /// A new table with one level column per descriptor, computed row-wise.
    ///
    /// Re-adding an existing descriptor is a no-op; a different descriptor under
    /// an existing column name is a conflict.
    pub fn augment(&self, h: &HierarchyTable, ds: &[CyclicDescriptor]) -> Result<GranularTable, TableError> {
        let mut out = self.clone();
        for d in ds {
            if let Some(existing) = out.cyclic_column(d.name()) {
                if existing.descriptor == *d {
                    continue;
                }
                return Err(TableError::ColumnConflict(d.name().to_string()));
            }
            if out.has_plain_column(d.name()) {
                return Err(TableError::ColumnConflict(d.name().to_string()));
            }
            let values = out
                .index
                .par_iter()
                .map(|&z| evaluate(h, d, z))
                .collect::<Result<Vec<_>, _>>()?;
            out.cyclic.push(CyclicColumn { descriptor: d.clone(), values });
        }
        Ok(out)
    }

    /// True when every cached level equals a fresh evaluation at its row's index.
    pub fn verify(&self, h: &HierarchyTable) -> bool {
        self.cyclic.iter().all(|c| {
            c.values
                .par_iter()
                .zip(self.index.par_iter())
                .all(|(v, &z)| evaluate(h, &c.descriptor, z).ok() == Some(*v))
        })
    }

    /// Delimited export: index, presentation timestamp, keys, measurements, then
    /// cyclic columns (levels, or labels when `labels` is set). Missing values are empty.
    pub fn write_csv<W: Write>(&self, w: W, delimiter: u8, labels: bool) -> Result<(), TableError> {
        let mut wr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(w);
        let mut header = vec!["index".to_string()];
        if let Some((name, _)) = &self.presentation {
            header.push(name.clone());
        }
        header.extend(self.keys.iter().map(|(n, _)| n.clone()));
        header.extend(self.measurements.iter().map(|(n, _)| n.clone()));
        header.extend(self.cyclic.iter().map(|c| c.descriptor.name().to_string()));
        wr.write_record(&header)?;
        let label_maps: Vec<Vec<String>> = self.cyclic.iter().map(|c| c.descriptor.level_labels()).collect();
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.len() {
            record.clear();
            record.push(self.index[row].to_string());
            if let Some((_, v)) = &self.presentation {
                record.push(v[row].clone());
            }
            record.extend(self.keys.iter().map(|(_, c)| c[row].clone()));
            record.extend(self.measurements.iter().map(|(_, c)| c[row].map(|x| x.to_string()).unwrap_or_default()));
            for (c, map) in self.cyclic.iter().zip(&label_maps) {
                let v = c.values[row].0;
                record.push(if labels { map[v as usize].clone() } else { v.to_string() });
            }
            wr.write_record(&record)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{Origin, RungDef};

    fn ladder() -> HierarchyTable {
        HierarchyTable::new(
            Origin::default(),
            vec![RungDef::constant("hhour", 2), RungDef::constant("hour", 24), RungDef::constant("day", 7), RungDef::top("week")],
        )
        .unwrap()
    }

    fn table(n: u64) -> GranularTable {
        GranularTable::new(
            (0..n).map(IndexValue).collect(),
            vec![("id".into(), vec!["a".into(); n as usize])],
            vec![("kwh".into(), (0..n).map(|i| if i == 3 { None } else { Some(i as f64) }).collect())],
        )
        .unwrap()
    }

    #[test]
    fn augment_is_idempotent_and_verified() {
        let h = ladder();
        let t = table(500);
        let hh = CyclicDescriptor::span(&h, 0, 2).unwrap();
        let dw = CyclicDescriptor::span(&h, 2, 3).unwrap();
        let wk = derive_custom(&dw, vec![1, 0, 0, 0, 0, 0, 1], "wknd_wday", None).unwrap();
        let a = t.augment(&h, &[hh.clone(), dw.clone(), wk]).unwrap();
        let b = a.augment(&h, &[hh.clone()]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cyclic_columns().len(), 3);
        assert!(a.cyclic_column("hhour_day").unwrap().values.iter().all(|v| v.0 < 48));
        let dwv = &a.cyclic_column("day_week").unwrap().values;
        let wkv = &a.cyclic_column("wknd_wday").unwrap().values;
        assert!(dwv.iter().zip(wkv).all(|(d, w)| w.0 == [1, 0, 0, 0, 0, 0, 1][d.0 as usize]));
        assert!(a.verify(&h));
        assert_eq!(a.index(), t.index());
        assert_eq!(a.measurements(), t.measurements());

        let clash = hh.renamed("day_week");
        assert!(matches!(a.augment(&h, &[clash]), Err(TableError::ColumnConflict(_))));
        assert!(matches!(a.augment(&h, &[dw.renamed("kwh")]), Err(TableError::ColumnConflict(_))));
    }

    #[test]
    fn duplicates_rejected() {
        let r = GranularTable::new(
            vec![IndexValue(1), IndexValue(1)],
            vec![("id".into(), vec!["a".into(), "a".into()])],
            vec![],
        );
        assert!(matches!(r, Err(TableError::Duplicate { row: 2 })));
        assert!(GranularTable::new(
            vec![IndexValue(1), IndexValue(1)],
            vec![("id".into(), vec!["a".into(), "b".into()])],
            vec![],
        )
        .is_ok());
    }

    #[test]
    fn csv_export_marks_missing_values() {
        let h = ladder();
        let t = table(5).augment(&h, &[CyclicDescriptor::span(&h, 1, 2).unwrap()]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, b',', false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,id,kwh,hour_day");
        assert_eq!(lines[4], "3,a,,1");
    }
}
