//! Labelled time intervals and annotation tiers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub label: String,
}

impl Interval {
    pub fn new(start: f64, end: f64, label: impl Into<String>) -> Interval {
        Interval {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Length of the overlap with `[start, end]`.
    pub fn overlap(&self, start: f64, end: f64) -> f64 {
        (self.end.min(end) - self.start.max(start)).max(0.0)
    }
}

/// A named tier of sorted, non-overlapping intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTier {
    name: String,
    intervals: Vec<Interval>,
}

impl SegmentTier {
    /// Validates that intervals are finite, have `start < end`, are sorted
    /// and do not overlap. Errors name the offending interval (0-based).
    pub fn new(name: impl Into<String>, intervals: Vec<Interval>) -> Result<SegmentTier> {
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.start.is_finite() && iv.end.is_finite() && iv.start < iv.end) {
                return Err(Error::Data(format!(
                    "interval {i}: need finite start < end, got [{}, {}]",
                    iv.start, iv.end
                )));
            }
            if i > 0 && iv.start < intervals[i - 1].end {
                return Err(Error::Data(format!(
                    "interval {i} starting at {} overlaps or precedes the previous one ending at {}",
                    iv.start,
                    intervals[i - 1].end
                )));
            }
        }
        Ok(SegmentTier {
            name: name.into(),
            intervals,
        })
    }

    /// Sorts by start time, then validates.
    pub fn from_unsorted(name: impl Into<String>, mut intervals: Vec<Interval>) -> Result<SegmentTier> {
        intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
        SegmentTier::new(name, intervals)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn into_intervals(self) -> Vec<Interval> {
        self.intervals
    }

    /// Intervals whose label is not blank.
    pub fn labelled(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(|iv| !iv.label.trim().is_empty())
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}
