//! Relativity predicates between linear granularities, evaluated over a finite
//! materialized span of the index set. Verdicts are relative to that span.

use std::ops::Range;

use super::{CalendarError, HierarchyTable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Granule {
    pub index: i64,
    pub interval: Range<u64>,
    /// The granule extends past the span on at least one side.
    pub clipped: bool,
}

/// Non-empty granules of one linear granularity, clipped to a span and
/// ordered by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaterializedGranularity {
    pub name: String,
    span: Range<u64>,
    granules: Vec<Granule>,
}

impl MaterializedGranularity {
    /// Granules are clipped to `span`; empty ones are dropped. Intervals must be
    /// ordered and non-overlapping.
    pub fn from_granules(
        name: impl Into<String>,
        span: Range<u64>,
        granules: impl IntoIterator<Item = (i64, Range<u64>)>,
    ) -> Result<Self, CalendarError> {
        let name = name.into();
        let mut out: Vec<Granule> = Vec::new();
        for (index, iv) in granules {
            let s = iv.start.max(span.start);
            let e = iv.end.min(span.end);
            if s >= e {
                continue;
            }
            if let Some(prev) = out.last() {
                if prev.interval.end > s || prev.index >= index {
                    return Err(CalendarError::Definition(format!(
                        "granules of `{name}` overlap or are out of order at index {index}"
                    )));
                }
            }
            out.push(Granule { index, interval: s..e, clipped: s != iv.start || e != iv.end });
        }
        Ok(MaterializedGranularity { name, span, granules: out })
    }

    /// Materialize rung `m` of `h` over `span`.
    pub fn from_hierarchy(h: &HierarchyTable, m: usize, span: Range<u64>) -> Result<Self, CalendarError> {
        if span.is_empty() {
            return Err(CalendarError::EmptySpan);
        }
        if m >= h.len() {
            return Err(CalendarError::InvalidSpan { lower: m, upper: m });
        }
        let first = h.linear_granule(span.start.into(), m) as i64;
        let last = h.linear_granule((span.end - 1).into(), m) as i64;
        let granules = (first..=last).map(|j| {
            let (s, e) = h.granule_interval(m, j);
            (j, s.max(0) as u64..e.max(0) as u64)
        });
        let mut g = Self::from_granules(h.name(m), span, granules)?;
        // a granule beginning before the origin is incomplete even when the span starts at 0
        if let Some(first) = g.granules.first_mut() {
            if h.granule_start(m, first.index) < 0 {
                first.clipped = true;
            }
        }
        Ok(g)
    }

    pub fn span(&self) -> Range<u64> {
        self.span.clone()
    }

    pub fn granules(&self) -> &[Granule] {
        &self.granules
    }
}

fn common_span(g: &MaterializedGranularity, h: &MaterializedGranularity) -> Result<(), CalendarError> {
    if g.span.is_empty() || h.span.is_empty() {
        return Err(CalendarError::EmptySpan);
    }
    if g.span != h.span {
        return Err(CalendarError::SpanMismatch);
    }
    Ok(())
}

/// `G ⪯ H`: every granule of `G` lies inside some granule of `H`.
pub fn finer_than(g: &MaterializedGranularity, h: &MaterializedGranularity) -> Result<bool, CalendarError> {
    common_span(g, h)?;
    let mut j = 0;
    for gi in &g.granules {
        while j < h.granules.len() && h.granules[j].interval.end <= gi.interval.start {
            j += 1;
        }
        match h.granules.get(j) {
            Some(hj) if hj.interval.start <= gi.interval.start && gi.interval.end <= hj.interval.end => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// `G ⊴ H`: every granule of `H` is exactly a union of granules of `G`.
pub fn groups_into(g: &MaterializedGranularity, h: &MaterializedGranularity) -> Result<bool, CalendarError> {
    Ok(composition(g, h)?.is_some())
}

/// For each granule of `h`, the half-open range of positions in `g.granules`
/// composing it; `None` when some granule of `h` is not such a union.
fn composition(
    g: &MaterializedGranularity,
    h: &MaterializedGranularity,
) -> Result<Option<Vec<Range<usize>>>, CalendarError> {
    common_span(g, h)?;
    let mut out = Vec::with_capacity(h.granules.len());
    let mut i = 0;
    for hj in &h.granules {
        while i < g.granules.len() && g.granules[i].interval.end <= hj.interval.start {
            i += 1;
        }
        let first = i;
        let mut covered = 0u64;
        while i < g.granules.len() && g.granules[i].interval.start < hj.interval.end {
            let gi = &g.granules[i].interval;
            if gi.start < hj.interval.start || gi.end > hj.interval.end {
                return Ok(None);
            }
            covered += gi.end - gi.start;
            i += 1;
        }
        if covered != hj.interval.end - hj.interval.start {
            return Ok(None);
        }
        out.push(first..i);
    }
    Ok(Some(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Periodicity {
    /// Number of coarse granules per repetition.
    pub r: u64,
    /// Number of fine granules per repetition.
    pub p: u64,
}

/// Smallest `(R, P)` for which `G` is periodical with respect to `H` over the span.
///
/// Only complete (unclipped) granules of `H` take part. A candidate `R` is
/// accepted only when the span holds at least two repetitions of it, so every
/// granule offset within the repetition is checked at least once.
pub fn is_periodical(
    g: &MaterializedGranularity,
    h: &MaterializedGranularity,
) -> Result<Option<Periodicity>, CalendarError> {
    let comp = composition(g, h)?.ok_or_else(|| CalendarError::NotGrouping {
        fine: g.name.clone(),
        coarse: h.name.clone(),
    })?;
    // (coarse index, first fine index, one-past-last fine index) of complete granules
    let complete: Vec<(i64, i64, i64)> = h
        .granules
        .iter()
        .zip(&comp)
        .filter(|(hj, r)| !hj.clipped && !r.is_empty() && (*r).clone().all(|k| !g.granules[k].clipped))
        .map(|(hj, r)| (hj.index, g.granules[r.start].index, g.granules[r.end - 1].index + 1))
        .collect();
    if complete.len() < 2 {
        return Err(CalendarError::InsufficientSpan(complete.len()));
    }
    let n = complete.len() as i64;
    let find = |idx: i64| complete.binary_search_by_key(&idx, |c| c.0).ok().map(|p| complete[p]);
    for r in 1..=n / 2 {
        let mut shift: Option<i64> = None;
        let mut ok = true;
        let mut checked = 0;
        for &(i, a, b) in &complete {
            let Some((_, a2, b2)) = find(i + r) else { continue };
            let p = a2 - a;
            if b2 - b != p || shift.is_some_and(|s| s != p) {
                ok = false;
                break;
            }
            shift = Some(p);
            checked += 1;
        }
        if ok && checked as i64 >= r {
            if let Some(p) = shift {
                return Ok(Some(Periodicity { r: r as u64, p: p as u64 }));
            }
        }
    }
    Ok(None)
}
