// SPDX-License-Identifier: Apache-2.0

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Probabilities must sum to one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TimelineRow {
    pub time_s: f64,
    pub probs: Vec<f64>,
}

/// Per-window category probabilities, indexed by window-end time.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTimeline {
    categories: Vec<String>,
    rows: Vec<TimelineRow>,
}

impl ProbabilityTimeline {
    pub fn new(categories: Vec<String>, rows: Vec<TimelineRow>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::InvalidArgument("timeline needs at least one category".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.probs.len() != categories.len() {
                return Err(Error::InvalidArgument(format!(
                    "timeline row {i} has {} probabilities for {} categories",
                    r.probs.len(),
                    categories.len()
                )));
            }
            if !r.time_s.is_finite() || r.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidArgument(format!("timeline row {i} has invalid values")));
            }
            let sum: f64 = r.probs.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidArgument(format!("timeline row {i} sums to {sum}")));
            }
            if i > 0 && r.time_s <= rows[i - 1].time_s {
                return Err(Error::InvalidArgument(format!("timeline times not increasing at row {i}")));
            }
        }
        Ok(ProbabilityTimeline { categories, rows })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn rows(&self) -> &[TimelineRow] {
        &self.rows
    }

    pub fn category_index(&self, category: &str) -> Result<usize> {
        self.categories
            .iter()
            .position(|c| c == category)
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))
    }

    /// `(time, probability)` series of one category.
    pub fn series(&self, category: &str) -> Result<Vec<(f64, f64)>> {
        let k = self.category_index(category)?;
        Ok(self.rows.iter().map(|r| (r.time_s, r.probs[k])).collect())
    }

    /// CSV `time_s,<category>...`; numbers in shortest round-trip form.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time_s".to_string()];
        header.extend(self.categories.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.time_s.to_string()];
            rec.extend(r.probs.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<timeline>", e))
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("time_s") || header.len() < 2 {
            return Err(Error::format("<timeline>", 1, "header must be `time_s,<category>...`"));
        }
        let categories: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            let nums: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.trim().parse::<f64>()).collect();
            let nums = nums.map_err(|e| Error::format("<timeline>", n + 2, e.to_string()))?;
            if nums.len() != categories.len() + 1 {
                return Err(Error::format("<timeline>", n + 2, "wrong column count"));
            }
            rows.push(TimelineRow { time_s: nums[0], probs: nums[1..].to_vec() });
        }
        ProbabilityTimeline::new(categories, rows)
    }
}
