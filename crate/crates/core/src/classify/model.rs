// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use super::features::{FeatureVector, N_FEATURES};
use crate::error::{Error, Result};

/// Features plus bias.
pub const N_PARAMS: usize = N_FEATURES + 1;

const MODEL_HEADER: &str = "ethopipe-categoriser 1";
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    /// Recorded with the model. Training itself has no stochastic step.
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams { learning_rate: 0.1, iterations: 2000, l2: 1e-3, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub features: FeatureVector,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoriserModel {
    pub categories: Vec<String>,
    pub mean: [f64; N_FEATURES],
    /// Training SD per feature; 1 where the feature had no variance.
    pub sd: [f64; N_FEATURES],
    pub zero_variance: [bool; N_FEATURES],
    /// One row per category; the last column is the bias.
    pub weights: Vec<[f64; N_PARAMS]>,
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub final_loss: f64,
    pub seed: u64,
}

/// Regularized multinomial cross-entropy over normalized inputs.
///
/// Identical examples are merged into one row with a multiplicity and rows
/// are kept in a canonical order, so every sum is evaluated in the same
/// order regardless of how the examples were supplied.
#[derive(Clone, Debug)]
pub struct Objective {
    rows: Vec<([f64; N_PARAMS], usize, f64)>,
    total: f64,
    k: usize,
    l2: f64,
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn dot(w: &[f64; N_PARAMS], x: &[f64; N_PARAMS]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl Objective {
    /// `rows` holds `(normalized features with trailing 1, label index, multiplicity)`.
    pub fn new(rows: Vec<([f64; N_PARAMS], usize, f64)>, k: usize, l2: f64) -> Self {
        let total = rows.iter().map(|r| r.2).sum();
        Objective { rows, total, k, l2 }
    }

    pub fn loss(&self, w: &[[f64; N_PARAMS]]) -> f64 {
        let mut data = 0.0;
        for (x, y, c) in &self.rows {
            let s: Vec<f64> = w.iter().map(|wk| dot(wk, x)).collect();
            let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            data += c * (lse - s[*y]);
        }
        data / self.total + 0.5 * self.l2 * penalty(w)
    }

    pub fn gradient(&self, w: &[[f64; N_PARAMS]]) -> Vec<[f64; N_PARAMS]> {
        let mut g = vec![[0.0; N_PARAMS]; self.k];
        for (x, y, c) in &self.rows {
            let s: Vec<f64> = w.iter().map(|wk| dot(wk, x)).collect();
            let p = softmax(&s);
            for (k, gk) in g.iter_mut().enumerate() {
                let r = c * (p[k] - if k == *y { 1.0 } else { 0.0 });
                for j in 0..N_PARAMS {
                    gk[j] += r * x[j];
                }
            }
        }
        for (gk, wk) in g.iter_mut().zip(w) {
            for j in 0..N_PARAMS {
                gk[j] /= self.total;
                if j < N_FEATURES {
                    gk[j] += self.l2 * wk[j];
                }
            }
        }
        g
    }
}

fn penalty(w: &[[f64; N_PARAMS]]) -> f64 {
    w.iter().flat_map(|wk| wk[..N_FEATURES].iter()).map(|v| v * v).sum()
}

fn check_category_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',') {
        return Err(Error::InvalidArgument(format!("invalid category name `{name}`")));
    }
    Ok(())
}

/// Merges identical examples and sorts them canonically.
fn group(examples: &[TrainingExample], categories: &[String]) -> Result<Vec<([f64; N_FEATURES], usize, usize)>> {
    let mut groups: BTreeMap<(usize, [u64; N_FEATURES]), usize> = BTreeMap::new();
    for ex in examples {
        let y = categories
            .iter()
            .position(|c| *c == ex.label)
            .ok_or_else(|| Error::UnknownCategory(ex.label.clone()))?;
        if ex.features.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite feature value".into()));
        }
        *groups.entry((y, ex.features.values.map(f64::to_bits))).or_default() += 1;
    }
    Ok(groups.into_iter().map(|((y, bits), c)| (bits.map(f64::from_bits), y, c)).collect())
}

/// Full-batch gradient descent from zero weights on z-normalized features.
/// The loss must not increase between iterations; on the first increase the
/// learning rate is halved and training restarts once.
pub fn train_baseline(
    examples: &[TrainingExample],
    categories: &[String],
    params: &TrainParams,
) -> Result<CategoriserModel> {
    if categories.len() < 2 {
        return Err(Error::Training(format!("need at least 2 categories, got {}", categories.len())));
    }
    for (i, c) in categories.iter().enumerate() {
        check_category_name(c)?;
        if categories[..i].contains(c) {
            return Err(Error::Training(format!("duplicate category `{c}`")));
        }
    }
    if !(params.learning_rate > 0.0) || !(params.l2 >= 0.0) {
        return Err(Error::Training("learning rate must be positive and l2 non-negative".into()));
    }
    let groups = group(examples, categories)?;
    for (k, c) in categories.iter().enumerate() {
        if !groups.iter().any(|g| g.1 == k) {
            return Err(Error::Training(format!("category `{c}` has no examples")));
        }
    }

    let n = groups.iter().map(|g| g.2 as f64).sum::<f64>();
    let mut mean = [0.0; N_FEATURES];
    let mut sd = [0.0; N_FEATURES];
    let mut zero_variance = [false; N_FEATURES];
    for j in 0..N_FEATURES {
        mean[j] = groups.iter().map(|g| g.2 as f64 * g.0[j]).sum::<f64>() / n;
        let var = groups.iter().map(|g| g.2 as f64 * (g.0[j] - mean[j]).powi(2)).sum::<f64>() / n;
        if var > 0.0 {
            sd[j] = var.sqrt();
        } else {
            sd[j] = 1.0;
            zero_variance[j] = true;
        }
    }
    let rows = groups
        .iter()
        .map(|(f, y, c)| (augment(f, &mean, &sd), *y, *c as f64))
        .collect();
    let objective = Objective::new(rows, categories.len(), params.l2);

    let mut eta = params.learning_rate;
    let mut outcome = descend(&objective, eta, params.iterations);
    if outcome.is_err() {
        eta /= 2.0;
        outcome = descend(&objective, eta, params.iterations);
    }
    let (weights, final_loss) = outcome.map_err(|(it, prev, next)| {
        Error::Training(format!("loss increased at iteration {it} ({prev} -> {next}) with learning rate {eta}"))
    })?;
    Ok(CategoriserModel {
        categories: categories.to_vec(),
        mean,
        sd,
        zero_variance,
        weights,
        iterations: params.iterations,
        learning_rate: eta,
        l2: params.l2,
        final_loss,
        seed: params.seed,
    })
}

type Descent = std::result::Result<(Vec<[f64; N_PARAMS]>, f64), (usize, f64, f64)>;

fn descend(obj: &Objective, eta: f64, iterations: usize) -> Descent {
    let mut w = vec![[0.0; N_PARAMS]; obj.k];
    let mut loss = obj.loss(&w);
    for it in 0..iterations {
        let g = obj.gradient(&w);
        for (wk, gk) in w.iter_mut().zip(&g) {
            for j in 0..N_PARAMS {
                wk[j] -= eta * gk[j];
            }
        }
        let next = obj.loss(&w);
        if next > loss + MONOTONE_SLACK {
            return Err((it + 1, loss, next));
        }
        loss = next;
    }
    Ok((w, loss))
}

fn augment(f: &[f64; N_FEATURES], mean: &[f64; N_FEATURES], sd: &[f64; N_FEATURES]) -> [f64; N_PARAMS] {
    let mut x = [1.0; N_PARAMS];
    for j in 0..N_FEATURES {
        x[j] = (f[j] - mean[j]) / sd[j];
    }
    x
}

impl CategoriserModel {
    /// Model with all weights zero and identity normalization.
    pub fn zero(categories: Vec<String>) -> Self {
        let k = categories.len();
        CategoriserModel {
            categories,
            mean: [0.0; N_FEATURES],
            sd: [1.0; N_FEATURES],
            zero_variance: [false; N_FEATURES],
            weights: vec![[0.0; N_PARAMS]; k],
            iterations: 0,
            learning_rate: 0.0,
            l2: 0.0,
            final_loss: 0.0,
            seed: 0,
        }
    }

    /// Normalized features with the trailing bias input.
    pub fn normalize(&self, fv: &FeatureVector) -> [f64; N_PARAMS] {
        augment(&fv.values, &self.mean, &self.sd)
    }

    /// Linear score per category.
    pub fn scores(&self, fv: &FeatureVector) -> Vec<f64> {
        let x = self.normalize(fv);
        self.weights.iter().map(|w| dot(w, &x)).collect()
    }

    pub fn objective(&self, examples: &[TrainingExample]) -> Result<Objective> {
        let rows = group(examples, &self.categories)?
            .iter()
            .map(|(f, y, c)| (self.normalize(&FeatureVector { values: *f, low_signal: false }), *y, *c as f64))
            .collect();
        Ok(Objective::new(rows, self.categories.len(), self.l2))
    }

    /// Writes the versioned text form. Reals are printed with 17
    /// significant digits so they read back exactly.
    pub fn write(&self, mut out: impl Write) -> Result<()> {
        let real = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_HEADER}");
        let _ = writeln!(s, "categories {}", self.categories.join(" "));
        let _ = writeln!(s, "mean {}", real(&self.mean));
        let _ = writeln!(s, "sd {}", real(&self.sd));
        let flags: Vec<&str> = self.zero_variance.iter().map(|z| if *z { "1" } else { "0" }).collect();
        let _ = writeln!(s, "zero_variance {}", flags.join(" "));
        for (c, w) in self.categories.iter().zip(&self.weights) {
            let _ = writeln!(s, "weights {c} {}", real(w));
        }
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "learning_rate {}", real(&[self.learning_rate]));
        let _ = writeln!(s, "l2 {}", real(&[self.l2]));
        let _ = writeln!(s, "final_loss {}", real(&[self.final_loss]));
        let _ = writeln!(s, "seed {}", self.seed);
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<model>", e))
    }

    pub fn read(mut input: impl Read) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text).map_err(|e| Error::io("<model>", e))?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, msg: String| Error::format("<model>", line, msg);
        match lines.next() {
            Some((_, MODEL_HEADER)) => {}
            Some((n, other)) => return Err(err(n, format!("unsupported model header `{other}`"))),
            None => return Err(err(0, "empty model file".into())),
        }
        let mut next = |key: &str| -> Result<(usize, Vec<String>)> {
            let (n, line) = lines.next().ok_or_else(|| err(0, format!("missing `{key}`")))?;
            let mut parts = line.split(' ');
            if parts.next() != Some(key) {
                return Err(err(n, format!("expected `{key}`")));
            }
            Ok((n, parts.map(str::to_string).collect()))
        };
        fn reals<const N: usize>(n: usize, v: &[String]) -> Result<[f64; N]> {
            if v.len() != N {
                return Err(Error::format("<model>", n, format!("expected {N} values, got {}", v.len())));
            }
            let mut out = [0.0; N];
            for (o, s) in out.iter_mut().zip(v) {
                *o = s.parse().map_err(|_| Error::format("<model>", n, format!("invalid number `{s}`")))?;
            }
            Ok(out)
        }
        let (_, categories) = next("categories")?;
        if categories.len() < 2 {
            return Err(err(2, "need at least 2 categories".into()));
        }
        let (n, v) = next("mean")?;
        let mean = reals::<N_FEATURES>(n, &v)?;
        let (n, v) = next("sd")?;
        let sd = reals::<N_FEATURES>(n, &v)?;
        if sd.iter().any(|s| !(*s > 0.0)) {
            return Err(err(n, "standard deviations must be positive".into()));
        }
        let (n, v) = next("zero_variance")?;
        let flags = reals::<N_FEATURES>(n, &v)?;
        let zero_variance = flags.map(|f| f != 0.0);
        let mut weights = Vec::new();
        for c in &categories {
            let (n, mut v) = next("weights")?;
            if v.first() != Some(c) {
                return Err(err(n, format!("expected weights for `{c}`")));
            }
            v.remove(0);
            weights.push(reals::<N_PARAMS>(n, &v)?);
        }
        let (n, v) = next("iterations")?;
        let iterations = v.first().and_then(|s| s.parse().ok()).ok_or_else(|| err(n, "invalid iterations".into()))?;
        let (n, v) = next("learning_rate")?;
        let [learning_rate] = reals::<1>(n, &v)?;
        let (n, v) = next("l2")?;
        let [l2] = reals::<1>(n, &v)?;
        let (n, v) = next("final_loss")?;
        let [final_loss] = reals::<1>(n, &v)?;
        let (n, v) = next("seed")?;
        let seed = v.first().and_then(|s| s.parse().ok()).ok_or_else(|| err(n, "invalid seed".into()))?;
        Ok(CategoriserModel {
            categories,
            mean,
            sd,
            zero_variance,
            weights,
            iterations,
            learning_rate,
            l2,
            final_loss,
            seed,
        })
    }
}

/// Softmax of the linear scores.
pub fn predict(model: &CategoriserModel, fv: &FeatureVector) -> Vec<f64> {
    softmax(&model.scores(fv))
}
