//! Partitioning the time axis into steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::types::EventLog;

/// Step counts for the background / training / validation / test windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub background: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for Split {
    fn default() -> Self {
        Split {
            background: 10,
            train: 10,
            val: 2,
            test: 6,
        }
    }
}

impl Split {
    pub fn total(&self) -> usize {
        self.background + self.train + self.val + self.test
    }

    pub fn train_range(&self) -> std::ops::Range<usize> {
        self.background..self.background + self.train
    }

    pub fn val_range(&self) -> std::ops::Range<usize> {
        let s = self.background + self.train;
        s..s + self.val
    }

    pub fn test_range(&self) -> std::ops::Range<usize> {
        let s = self.background + self.train + self.val;
        s..s + self.test
    }

    pub fn background_range(&self) -> std::ops::Range<usize> {
        0..self.background
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SegmentationMode {
    /// Each step holds ⌊N/T⌋ or ⌈N/T⌉ events (up to timestamp ties).
    #[default]
    EqualCount,
    /// Steps cover equal spans of time; may be empty on bursty logs.
    EqualDuration,
}

/// Step `t` covers timestamps in `[boundaries[t], boundaries[t + 1])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSegmentation {
    pub boundaries: Vec<i64>,
    pub counts: Vec<usize>,
    pub split: Split,
}

impl TimeSegmentation {
    pub fn num_steps(&self) -> usize {
        self.counts.len()
    }

    pub fn step_of(&self, timestamp: i64) -> Option<usize> {
        if timestamp < self.boundaries[0] || timestamp >= *self.boundaries.last()? {
            return None;
        }
        Some(self.boundaries[1..].partition_point(|&b| b <= timestamp))
    }
}

pub fn segment_time(log: &EventLog, num_steps: usize, split: Split) -> Result<TimeSegmentation> {
    segment_time_with(log, num_steps, split, SegmentationMode::EqualCount)
}

pub fn segment_time_with(
    log: &EventLog,
    num_steps: usize,
    split: Split,
    mode: SegmentationMode,
) -> Result<TimeSegmentation> {
    if log.is_empty() {
        return Err(Error::Empty("event log"));
    }
    if num_steps == 0 {
        return Err(Error::Config("number of time steps must be positive".into()));
    }
    if split.total() != num_steps {
        return Err(Error::Config(format!(
            "split {}/{}/{}/{} does not sum to {num_steps} steps",
            split.background, split.train, split.val, split.test
        )));
    }
    debug_assert!(log.is_sorted());

    // distinct timestamps with their multiplicities
    let mut groups: Vec<(i64, usize)> = Vec::new();
    for e in &log.events {
        match groups.last_mut() {
            Some((ts, c)) if *ts == e.timestamp => *c += 1,
            _ => groups.push((e.timestamp, 1)),
        }
    }
    if num_steps > groups.len() {
        return Err(Error::Config(format!(
            "{num_steps} steps requested but the log has only {} distinct timestamps",
            groups.len()
        )));
    }
    let first = groups[0].0;
    let last = groups[groups.len() - 1].0;

    let mut boundaries = Vec::with_capacity(num_steps + 1);
    boundaries.push(first);
    match mode {
        SegmentationMode::EqualCount => {
            let n = log.len();
            let (q, rem) = (n / num_steps, n % num_steps);
            let mut cum = Vec::with_capacity(groups.len() + 1);
            cum.push(0usize);
            for (_, c) in &groups {
                cum.push(cum.last().unwrap() + c);
            }
            let mut prev = 0usize;
            for k in 1..num_steps {
                let ideal = k * q + k.min(rem);
                let lo = prev + 1;
                let hi = groups.len() - (num_steps - k);
                let cut = (lo..=hi)
                    .min_by_key(|&g| (cum[g].abs_diff(ideal), g))
                    .expect("non-empty cut range");
                boundaries.push(groups[cut].0);
                prev = cut;
            }
        }
        SegmentationMode::EqualDuration => {
            let span = (last - first) as i128;
            let t = num_steps as i128;
            for k in 1..num_steps as i128 {
                // timestamps at or below the raw cut stay in the earlier step
                let cut = first as i128 + (k * span) / t;
                boundaries.push(cut as i64 + 1);
            }
        }
    }
    boundaries.push(last + 1);

    let mut seg = TimeSegmentation {
        boundaries,
        counts: vec![0; num_steps],
        split,
    };
    for e in &log.events {
        let s = seg.step_of(e.timestamp).expect("every event falls inside the span");
        seg.counts[s] += 1;
    }
    Ok(seg)
}
