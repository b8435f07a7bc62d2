// SPDX-License-Identifier: Apache-2.0

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// A labelled behaviour bout, `[start_s, end_s)` in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct EthogramInterval {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl EthogramInterval {
    pub fn new(label: impl Into<String>, start_s: f64, end_s: f64) -> Result<Self> {
        if !(start_s >= 0.0) || !(end_s > start_s) || !end_s.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid interval [{start_s}, {end_s})")));
        }
        Ok(EthogramInterval { label: label.into(), start_s, end_s })
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn overlap(&self, other: &EthogramInterval) -> f64 {
        (self.end_s.min(other.end_s) - self.start_s.max(other.start_s)).max(0.0)
    }
}

/// Overlap over union; symmetric, in [0, 1].
pub fn temporal_iou(a: &EthogramInterval, b: &EthogramInterval) -> f64 {
    let inter = a.overlap(b);
    if inter <= 0.0 {
        return 0.0;
    }
    if a.start_s == b.start_s && a.end_s == b.end_s {
        return 1.0;
    }
    // distinct intervals never score a full 1.0, even after rounding
    (inter / (a.duration() + b.duration() - inter)).min(1.0 - f64::EPSILON / 2.0)
}

/// Seconds with at least two decimals, otherwise shortest round-trip form.
fn seconds(x: f64) -> String {
    let s = if x == 0.0 { "0".to_string() } else { x.to_string() };
    match s.find('.') {
        Some(dot) if s.len() - dot - 1 >= 2 => s,
        Some(dot) => format!("{s}{}", "0".repeat(2 - (s.len() - dot - 1))),
        None => format!("{s}.00"),
    }
}

/// CSV with header `start_s,end_s,label`.
pub fn write_ethogram_csv(out: impl Write, intervals: &[EthogramInterval]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["start_s", "end_s", "label"])?;
    for iv in intervals {
        w.write_record([seconds(iv.start_s), seconds(iv.end_s), iv.label.clone()])?;
    }
    w.flush().map_err(|e| Error::io("<ethogram>", e))
}

pub fn read_ethogram_csv(input: impl Read) -> Result<Vec<EthogramInterval>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["start_s", "end_s", "label"] {
        return Err(Error::format("<ethogram>", 1, "header must be `start_s,end_s,label`"));
    }
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| Error::format("<ethogram>", line, format!("invalid number in column {}", i + 1)))
        };
        let label = rec.get(2).unwrap_or("").trim();
        if label.is_empty() {
            return Err(Error::format("<ethogram>", line, "empty label"));
        }
        let iv = EthogramInterval::new(label, num(0)?, num(1)?)
            .map_err(|e| Error::format("<ethogram>", line, e.to_string()))?;
        out.push(iv);
    }
    Ok(out)
}
