use std::ops::Range;

use super::CalendarError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventCategory {
    /// Category index, starting at 1. Index 0 means "none of the events".
    pub index: u32,
    pub label: String,
    /// Half-open intervals over the calendar's unit granularity.
    pub intervals: Vec<Range<u64>>,
}

/// Aperiodic linear granularities `M_i` given extensionally as index intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AperiodicEventCalendar {
    name: String,
    unit: String,
    categories: Vec<EventCategory>,
    // sorted by start, pairwise disjoint
    lookup: Vec<(Range<u64>, u32)>,
}

impl AperiodicEventCalendar {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        mut categories: Vec<EventCategory>,
    ) -> Result<Self, CalendarError> {
        let name = name.into();
        let invalid = |reason: String| CalendarError::InvalidEvents { calendar: name.clone(), reason };
        categories.sort_by_key(|c| c.index);
        for (i, c) in categories.iter().enumerate() {
            if c.index == 0 {
                return Err(invalid("category index 0 is reserved".into()));
            }
            if i > 0 && categories[i - 1].index == c.index {
                return Err(invalid(format!("duplicate category index {}", c.index)));
            }
        }
        let mut lookup: Vec<(Range<u64>, u32)> = Vec::new();
        for c in &categories {
            for iv in &c.intervals {
                if iv.start >= iv.end {
                    return Err(invalid(format!("empty interval {}..{} in `{}`", iv.start, iv.end, c.label)));
                }
                lookup.push((iv.clone(), c.index));
            }
        }
        lookup.sort_by_key(|(iv, _)| iv.start);
        for w in lookup.windows(2) {
            if w[0].0.end > w[1].0.start {
                return Err(invalid(format!(
                    "intervals {}..{} and {}..{} overlap",
                    w[0].0.start, w[0].0.end, w[1].0.start, w[1].0.end
                )));
            }
        }
        Ok(AperiodicEventCalendar { name, unit: unit.into(), categories, lookup })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Name of the rung whose granules the intervals count.
    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn categories(&self) -> &[EventCategory] {
        &self.categories
    }

    /// Number of levels including the reserved 0 category.
    pub fn level_count(&self) -> u32 {
        self.categories.last().map(|c| c.index).unwrap_or(0) + 1
    }

    /// One past the last covered unit granule.
    pub fn extent(&self) -> u64 {
        self.lookup.iter().map(|(iv, _)| iv.end).max().unwrap_or(0)
    }

    /// `A_{B,M}(z)`: the category whose interval contains `z`, else 0.
    pub fn category_at(&self, z: u64) -> u32 {
        let p = self.lookup.partition_point(|(iv, _)| iv.start <= z);
        match p.checked_sub(1).map(|i| &self.lookup[i]) {
            Some((iv, cat)) if z < iv.end => *cat,
            _ => 0,
        }
    }

    /// Labels for levels `0..level_count`, with `none` for level 0 and gaps.
    pub fn labels(&self) -> Vec<String> {
        let mut out = vec!["none".to_string(); self.level_count() as usize];
        for c in &self.categories {
            out[c.index as usize] = c.label.clone();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(index: u32, intervals: Vec<Range<u64>>) -> EventCategory {
        EventCategory { index, label: format!("c{index}"), intervals }
    }

    #[test]
    fn lookup_respects_half_open_bounds() {
        let cal = AperiodicEventCalendar::new("sem", "day", vec![cat(1, vec![7..49, 56..105]), cat(2, vec![49..56])])
            .unwrap();
        assert_eq!(cal.category_at(6), 0);
        assert_eq!(cal.category_at(7), 1);
        assert_eq!(cal.category_at(48), 1);
        assert_eq!(cal.category_at(49), 2);
        assert_eq!(cal.category_at(105), 0);
        assert_eq!(cal.level_count(), 3);
        assert_eq!(cal.extent(), 105);
    }

    #[test]
    fn overlapping_or_reserved_rejected() {
        assert!(AperiodicEventCalendar::new("x", "day", vec![cat(1, vec![0..5]), cat(2, vec![4..6])]).is_err());
        assert!(AperiodicEventCalendar::new("x", "day", vec![cat(0, vec![0..5])]).is_err());
        assert!(AperiodicEventCalendar::new("x", "day", vec![cat(1, vec![3..3])]).is_err());
    }
}
