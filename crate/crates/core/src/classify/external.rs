// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};

pub const EXTERNAL_SUM_TOLERANCE: f64 = 1e-6;

/// Reads a `probs.csv` written by an external categoriser: header
/// `id,<category>...`, one row per example id. Returns one row per id of
/// `ids`, with columns in `categories` order.
pub fn read_external_probabilities(input: impl Read, ids: &[usize], categories: &[String]) -> Result<Vec<Vec<f64>>> {
    let src = "probs.csv";
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("id") {
        return Err(Error::format(src, 1, "first column must be `id`"));
    }
    let mut column_of = Vec::new();
    for name in headers.iter().skip(1) {
        let k = categories.iter().position(|c| c == name).ok_or_else(|| Error::UnknownCategory(name.to_string()))?;
        if column_of.contains(&k) {
            return Err(Error::format(src, 1, format!("duplicate column `{name}`")));
        }
        column_of.push(k);
    }
    if column_of.len() != categories.len() {
        return Err(Error::format(src, 1, "every category needs a column"));
    }
    let mut rows = BTreeMap::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let id: usize = rec[0].trim().parse().map_err(|_| Error::format(src, line, "invalid id"))?;
        let mut probs = vec![0.0; categories.len()];
        for (field, &k) in rec.iter().skip(1).zip(&column_of) {
            let v: f64 = field.trim().parse().map_err(|_| Error::format(src, line, format!("invalid value `{field}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::format(src, line, format!("probability {v} outside [0, 1]")));
            }
            probs[k] = v;
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > EXTERNAL_SUM_TOLERANCE {
            return Err(Error::format(src, line, format!("probabilities sum to {sum}")));
        }
        if rows.insert(id, probs).is_some() {
            return Err(Error::format(src, line, format!("duplicate id {id}")));
        }
    }
    ids.iter()
        .map(|id| rows.remove(id).ok_or_else(|| Error::InvalidArgument(format!("probs.csv has no row for id {id}"))))
        .collect()
}
