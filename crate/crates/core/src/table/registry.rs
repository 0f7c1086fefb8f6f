use std::sync::Arc;

use crate::calendar::{Calendar, HierarchyTable};
use crate::cyclic::{CyclicDescriptor, CyclicError};

use super::TableError;

/// All span descriptors `(lower, upper)` with `lower < upper ≤ max_upper`,
/// ordered by upper rung, then lower rung.
pub fn enumerate_cyclic(h: &HierarchyTable, max_upper: usize) -> Result<Vec<CyclicDescriptor>, CyclicError> {
    enumerate_between(h, 0, max_upper)
}

/// Span descriptors over the rungs `from..=to`: `n(n-1)/2` of them for `n` rungs.
pub fn enumerate_between(h: &HierarchyTable, from: usize, to: usize) -> Result<Vec<CyclicDescriptor>, CyclicError> {
    if from > to || to >= h.len() {
        return Err(CyclicError::InvalidSpan { lower: from, upper: to });
    }
    let mut out = Vec::new();
    for upper in from + 1..=to {
        for lower in from..upper {
            out.push(CyclicDescriptor::span(h, lower, upper)?);
        }
    }
    Ok(out)
}

/// Number of cyclic granularities available: `n(n-1)/2` span descriptors plus
/// every derived and aperiodic one, counted additively.
pub fn cyclic_count(n_rungs: usize, derived: usize, aperiodic: usize) -> usize {
    n_rungs * n_rungs.saturating_sub(1) / 2 + derived + aperiodic
}

/// Remap the levels of `base` into a new descriptor (e.g. weekday/weekend).
pub fn derive_custom(
    base: &CyclicDescriptor,
    remap: Vec<u64>,
    name: &str,
    labels: Option<Vec<String>>,
) -> Result<CyclicDescriptor, CyclicError> {
    let d = CyclicDescriptor::derived(name, base.clone(), remap)?;
    match labels {
        Some(l) => d.with_labels(l),
        None => Ok(d),
    }
}

impl Calendar {
    /// Resolve a granularity name: a derived granularity, an event calendar, or
    /// a span `<lower>_<upper>` of rung names. Labels from `[labels]` are attached.
    pub fn descriptor(&self, name: &str) -> Result<CyclicDescriptor, TableError> {
        self.resolve(name, 0)
    }

    fn resolve(&self, name: &str, depth: usize) -> Result<CyclicDescriptor, TableError> {
        if depth > self.derived.len() {
            return Err(TableError::UnknownGranularity(format!("{name} (cyclic derivation)")));
        }
        let h = &self.hierarchy;
        let d = if let Some(def) = self.derived.iter().find(|d| d.name == name) {
            let base = self.resolve(&def.base, depth + 1)?;
            let remap = def.map.iter().map(|&v| v as u64).collect();
            let labels = def.labels.clone().or_else(|| self.labels.get(name).cloned());
            return Ok(derive_custom(&base, remap, name, labels)?);
        } else if let Some(cal) = self.event_calendar(name) {
            CyclicDescriptor::event(h, Arc::new(cal.clone()))?
        } else {
            let split = name.match_indices('_').find_map(|(i, _)| {
                let lower = h.rung_index(&name[..i]).ok()?;
                let upper = h.rung_index(&name[i + 1..]).ok()?;
                Some((lower, upper))
            });
            let Some((lower, upper)) = split else {
                return Err(TableError::UnknownGranularity(name.to_string()));
            };
            CyclicDescriptor::span(h, lower, upper)?
        };
        Ok(match self.labels.get(name) {
            Some(l) => d.with_labels(l.clone())?,
            None => d,
        })
    }

    /// Every span descriptor over rungs `from..=to`, then derived granularities
    /// and event calendars in file order.
    pub fn granularities(&self, from: Option<&str>, to: Option<&str>) -> Result<Vec<CyclicDescriptor>, TableError> {
        let h = &self.hierarchy;
        let from = from.map(|f| h.rung_index(f)).transpose()?.unwrap_or(0);
        let to = to.map(|t| h.rung_index(t)).transpose()?.unwrap_or(h.len() - 1);
        let mut out = Vec::new();
        for d in enumerate_between(h, from, to)? {
            out.push(self.descriptor(d.name())?);
        }
        for d in &self.derived {
            out.push(self.descriptor(&d.name)?);
        }
        for e in &self.events {
            out.push(self.descriptor(e.name())?);
        }
        Ok(out)
    }
}
