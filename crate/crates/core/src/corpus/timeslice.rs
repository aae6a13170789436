use chrono::{DateTime, Datelike, Months, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, DocumentStore, Result};

/// A half-open calendar window `[start, end)` and the documents inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub index: usize,
    #[serde(with = "crate::timefmt")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::timefmt")]
    pub end: DateTime<Utc>,
    pub members: Vec<String>,
}

fn month_number(t: &DateTime<Utc>) -> i64 {
    i64::from(t.year()) * 12 + i64::from(t.month0())
}

/// Cuts the store into consecutive windows of `step_months` calendar months,
/// anchored at the first day of the earliest document's month. Windows that
/// happen to contain no document are kept so the slices stay contiguous.
pub fn partition_by_time(store: &DocumentStore, step_months: u32) -> Result<Vec<TimeSlice>> {
    if step_months == 0 {
        return Err(CorpusError::InvalidParameter("step_months must be >= 1".into()));
    }
    let earliest = store
        .iter()
        .map(|d| d.timestamp)
        .min()
        .ok_or(CorpusError::EmptyCorpus)?;
    let anchor = Utc
        .with_ymd_and_hms(earliest.year(), earliest.month(), 1, 0, 0, 0)
        .single()
        .expect("first of month is unambiguous in UTC");
    let anchor_month = month_number(&anchor);
    let step = i64::from(step_months);

    let slot = |t: &DateTime<Utc>| ((month_number(t) - anchor_month) / step) as usize;
    let count = store.iter().map(|d| slot(&d.timestamp)).max().unwrap_or(0) + 1;

    let boundary = |i: usize| {
        anchor
            .checked_add_months(Months::new(step_months * i as u32))
            .expect("slice boundary within chrono range")
    };
    let mut slices: Vec<TimeSlice> = (0..count)
        .map(|i| TimeSlice {
            index: i,
            start: boundary(i),
            end: boundary(i + 1),
            members: Vec::new(),
        })
        .collect();
    for doc in store.iter() {
        slices[slot(&doc.timestamp)].members.push(doc.id.clone());
    }
    Ok(slices)
}
