// SPDX-License-Identifier: Apache-2.0

//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ethopipe_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Path,
    Text,
    Int,
    Real,
    Bool,
    IntList,
    TextList,
}

/// Every key a configuration file may set, with its value type.
const SCHEMA: &[(&str, Kind)] = &[
    ("annotations", Kind::Path),
    ("background", Kind::Bool),
    ("categories", Kind::TextList),
    ("dataset", Kind::Path),
    ("disable", Kind::TextList),
    ("ethogram", Kind::Path),
    ("examples", Kind::Path),
    ("frames", Kind::Path),
    ("gt", Kind::Path),
    ("iou_min", Kind::Real),
    ("iterations", Kind::Int),
    ("l2", Kind::Real),
    ("learning_rate", Kind::Real),
    ("masks", Kind::Path),
    ("min_area_retained", Kind::Real),
    ("min_duration", Kind::Real),
    ("model", Kind::Path),
    ("multiplier", Kind::Int),
    ("out", Kind::Path),
    ("plot", Kind::Path),
    ("plot_category", Kind::Text),
    ("pred", Kind::Path),
    ("repetitions", Kind::Int),
    ("report", Kind::Path),
    ("review_frames", Kind::Int),
    ("review_out", Kind::Path),
    ("seed", Kind::Int),
    ("serial_fraction", Kind::Real),
    ("stride", Kind::Int),
    ("theta_off", Kind::Real),
    ("theta_on", Kind::Real),
    ("timeline", Kind::Path),
    ("window", Kind::Int),
    ("windows", Kind::Int),
    ("workers", Kind::IntList),
    ("workload", Kind::Text),
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, (String, usize)>,
    source: String,
}

fn valid(kind: Kind, value: &str) -> bool {
    let list = |v: &str| v.split(',').map(str::trim).all(|x| !x.is_empty());
    match kind {
        Kind::Path | Kind::Text => !value.is_empty(),
        Kind::Int => value.parse::<u64>().is_ok(),
        Kind::Real => value.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::Bool => value.parse::<bool>().is_ok(),
        Kind::IntList => list(value) && value.split(',').all(|x| x.trim().parse::<u64>().is_ok()),
        Kind::TextList => list(value),
    }
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::format(source, line_no, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(&(_, kind)) = SCHEMA.iter().find(|(k, _)| *k == key) else {
                return Err(Error::format(source, line_no, format!("unknown key `{key}`")));
            };
            if !valid(kind, value) {
                return Err(Error::format(source, line_no, format!("invalid value `{value}` for `{key}`")));
            }
            if values.insert(key.to_string(), (value.to_string(), line_no)).is_some() {
                return Err(Error::format(source, line_no, format!("duplicate key `{key}`")));
            }
        }
        Ok(RunConfig { values, source: source.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    fn raw(&self, key: &str) -> Option<&(String, usize)> {
        debug_assert!(SCHEMA.iter().any(|(k, _)| *k == key), "key `{key}` missing from schema");
        self.values.get(key)
    }

    /// Flag value if given (logging when it overrides the file), else the
    /// file value.
    pub fn pick<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        match (flag, self.raw(key)) {
            (Some(v), Some((file, _))) => {
                tracing::info!(key, config = %file, "command-line flag overrides config value");
                Ok(Some(v))
            }
            (Some(v), None) => Ok(Some(v)),
            (None, Some((file, line))) => file
                .parse()
                .map(Some)
                .map_err(|_| Error::format(self.source.as_str(), *line, format!("invalid value for `{key}`"))),
            (None, None) => Ok(None),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        Ok(self.pick(key, flag)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T> {
        self.pick(key, flag)?
            .ok_or_else(|| Error::InvalidArgument(format!("missing --{}", key.replace('_', "-"))))
    }

    /// Comma-separated list; a non-empty flag list wins over the file.
    pub fn list<T: FromStr>(&self, key: &str, flag: Vec<T>) -> Result<Option<Vec<T>>> {
        if !flag.is_empty() {
            if let Some((file, _)) = self.raw(key) {
                tracing::info!(key, config = %file, "command-line flag overrides config value");
            }
            return Ok(Some(flag));
        }
        match self.raw(key) {
            None => Ok(None),
            Some((file, line)) => file
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::format(self.source.as_str(), *line, format!("invalid value for `{key}`")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = RunConfig::parse("# run\nwindow = 45\nstride=5 # inference\ncategories = RG, RH\n\n", "run.cfg").unwrap();
        assert_eq!(c.get::<usize>("window", None, 1).unwrap(), 45);
        assert_eq!(c.get::<usize>("window", Some(30), 1).unwrap(), 30);
        assert_eq!(c.get::<usize>("iterations", None, 2000).unwrap(), 2000);
        assert_eq!(c.list::<String>("categories", vec![]).unwrap().unwrap(), vec!["RG", "RH"]);

        let err = RunConfig::parse("window = 45\nwindoww = 3\n", "run.cfg").unwrap_err();
        assert!(err.to_string().starts_with("run.cfg:2:"), "{err}");
        assert!(RunConfig::parse("window = many\n", "c").is_err());
        assert!(RunConfig::parse("window\n", "c").is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2\n", "c").is_err());
    }

    #[test]
    fn require_names_flag() {
        let c = RunConfig::default();
        let err = c.require::<String>("learning_rate", None).unwrap_err();
        assert!(err.to_string().contains("--learning-rate"));
    }
}
