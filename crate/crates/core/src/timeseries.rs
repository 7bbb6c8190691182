//! Cumulative event-count curves per attack type over a date window, with
//! over/under-prediction summaries comparing a backend's series to gold.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::corpus::Document;
use crate::taxonomy::{AttackSet, AttackType};

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("empty window: {0}")]
    EmptyWindow(String),
    #[error("mismatched buckets: {0}")]
    MismatchedBuckets(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucketing {
    Day,
    Month,
}

/// Inclusive date window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<DateWindow, TimeseriesError> {
        if start > end {
            return Err(TimeseriesError::EmptyWindow(format!("{start} > {end}")));
        }
        Ok(DateWindow { start, end })
    }

    /// Window spanning the years of a test split.
    pub fn from_years(first: i32, last: i32) -> Result<DateWindow, TimeseriesError> {
        let start = NaiveDate::from_ymd_opt(first, 1, 1)
            .ok_or_else(|| TimeseriesError::EmptyWindow(format!("bad year {first}")))?;
        let end = NaiveDate::from_ymd_opt(last, 12, 31)
            .ok_or_else(|| TimeseriesError::EmptyWindow(format!("bad year {last}")))?;
        DateWindow::new(start, end)
    }
}

/// Running count of events of one type, bucketed by day or month.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CumulativeSeries {
    pub attack_type: AttackType,
    /// `"gold"` or the backend name.
    pub source: String,
    pub points: Vec<(NaiveDate, u64)>,
}

impl CumulativeSeries {
    pub fn final_count(&self) -> u64 {
        self.points.last().map(|(_, c)| *c).unwrap_or(0)
    }
}

fn bucket_of(date: NaiveDate, bucketing: Bucketing) -> NaiveDate {
    match bucketing {
        Bucketing::Day => date,
        Bucketing::Month => NaiveDate::from_ymd_opt(date.year(), date.month(), 1).unwrap(),
    }
}

fn buckets_in(window: &DateWindow, bucketing: Bucketing) -> Vec<NaiveDate> {
    let mut buckets = Vec::new();
    let mut current = bucket_of(window.start, bucketing);
    let last = bucket_of(window.end, bucketing);
    while current <= last {
        buckets.push(current);
        current = match bucketing {
            Bucketing::Day => current.succ_opt().unwrap(),
            Bucketing::Month => {
                let (y, m) = (current.year(), current.month());
                if m == 12 {
                    NaiveDate::from_ymd_opt(y + 1, 1, 1).unwrap()
                } else {
                    NaiveDate::from_ymd_opt(y, m + 1, 1).unwrap()
                }
            }
        };
    }
    buckets
}

/// Cumulative count of documents whose label set (gold or thresholded
/// prediction, per `membership`) contains `attack_type`, bucketed over
/// the window. Dateless documents and documents outside the window are
/// skipped with a warning.
pub fn cumulative_series(
    docs: &[Document],
    membership: &BTreeMap<String, AttackSet>,
    attack_type: AttackType,
    bucketing: Bucketing,
    window: &DateWindow,
    source: &str,
) -> Result<CumulativeSeries, TimeseriesError> {
    let buckets = buckets_in(window, bucketing);
    if buckets.is_empty() {
        return Err(TimeseriesError::EmptyWindow(format!(
            "{} to {}",
            window.start, window.end
        )));
    }
    let mut counts: BTreeMap<NaiveDate, u64> = buckets.iter().map(|b| (*b, 0)).collect();
    let mut skipped = 0usize;
    for doc in docs {
        let date = match doc.date {
            Some(d) if d >= window.start && d <= window.end => d,
            _ => {
                skipped += 1;
                continue;
            }
        };
        let in_set = membership
            .get(&doc.id)
            .map(|set| set.contains(attack_type))
            .unwrap_or(false);
        if in_set {
            *counts.get_mut(&bucket_of(date, bucketing)).unwrap() += 1;
        }
    }
    if skipped > 0 {
        log::warn!(
            "cumulative series ({source}): skipped {skipped} doc(s) outside window or dateless"
        );
    }
    let mut running = 0u64;
    let points = buckets
        .into_iter()
        .map(|b| {
            running += counts[&b];
            (b, running)
        })
        .collect();
    Ok(CumulativeSeries {
        attack_type,
        source: source.to_string(),
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasDirection {
    /// Series identical at every bucket.
    Exact,
    Over,
    Under,
    Mixed,
}

/// How a backend's cumulative series compares to gold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasSummary {
    pub attack_type: AttackType,
    pub backend: String,
    /// Predicted final count / gold final count; `None` when gold is zero.
    pub final_ratio: Option<f64>,
    pub max_abs_gap: u64,
    pub direction: BiasDirection,
}

/// Compare two series over identical buckets.
pub fn bias_summary(
    gold: &CumulativeSeries,
    pred: &CumulativeSeries,
) -> Result<BiasSummary, TimeseriesError> {
    if gold.attack_type != pred.attack_type {
        return Err(TimeseriesError::MismatchedBuckets(format!(
            "types differ: {} vs {}",
            gold.attack_type, pred.attack_type
        )));
    }
    if gold.points.len() != pred.points.len()
        || gold
            .points
            .iter()
            .zip(&pred.points)
            .any(|((a, _), (b, _))| a != b)
    {
        return Err(TimeseriesError::MismatchedBuckets(
            "bucket dates differ".into(),
        ));
    }
    let mut over_somewhere = false;
    let mut under_somewhere = false;
    let mut max_abs_gap = 0u64;
    for ((_, g), (_, p)) in gold.points.iter().zip(&pred.points) {
        max_abs_gap = max_abs_gap.max(g.abs_diff(*p));
        if p > g {
            over_somewhere = true;
        }
        if p < g {
            under_somewhere = true;
        }
    }
    let direction = match (over_somewhere, under_somewhere) {
        (false, false) => BiasDirection::Exact,
        (true, false) => BiasDirection::Over,
        (false, true) => BiasDirection::Under,
        (true, true) => BiasDirection::Mixed,
    };
    let gold_final = gold.final_count();
    let final_ratio = if gold_final == 0 {
        None
    } else {
        Some(pred.final_count() as f64 / gold_final as f64)
    };
    Ok(BiasSummary {
        attack_type: gold.attack_type,
        backend: pred.source.clone(),
        final_ratio,
        max_abs_gap,
        direction,
    })
}
