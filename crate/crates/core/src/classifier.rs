//! Linear max-margin classifier trained by per-example subgradient steps on
//! the regularized hinge loss.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMask;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-column standardization. A zero std means the column was constant and
/// is divided by 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / if *s > 0.0 { *s } else { 1.0 })
            .collect())
    }
}

fn check_rows<R: AsRef<[f64]>>(x: &[R]) -> Result<usize> {
    let dim = x.first().ok_or(Error::EmptyInput)?.as_ref().len();
    for row in x {
        if row.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// Column means and sample standard deviations.
pub fn fit_scaler<R: AsRef<[f64]>>(x: &[R]) -> Result<Scaler> {
    let dim = check_rows(x)?;
    let n = x.len() as f64;
    let mut means = vec![0.0; dim];
    for row in x {
        for (m, v) in means.iter_mut().zip(row.as_ref()) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; dim];
    if x.len() > 1 {
        for row in x {
            for ((s, v), m) in stds.iter_mut().zip(row.as_ref()).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }
    Ok(Scaler { means, stds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lambda: 1e-4,
            epochs: 100,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: bool,
    pub margin: f64,
}

impl Prediction {
    pub fn from_margin(margin: f64) -> Self {
        Prediction {
            label: margin > 0.0,
            margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format_version: u32,
    pub w: Vec<f64>,
    pub b: f64,
    pub scaler: Scaler,
    pub hyper: Hyper,
    /// Input dimensions zeroed before scaling.
    #[serde(default)]
    pub mask: FeatureMask,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `w · x̂ + b` on the masked, standardized input.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut x = x.to_vec();
        self.mask.zero(&mut x);
        let z = self.scaler.transform(&x)?;
        Ok(dot(&self.w, &z) + self.b)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.margin(x).map(Prediction::from_margin)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(body: &str) -> Result<Self> {
        let model: LinearModel = serde_json::from_str(body).map_err(|e| Error::parse(e.line(), "model", e))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::parse(
                1,
                "format_version",
                format!("unsupported model format {}", model.format_version),
            ));
        }
        if model.scaler.dim() != model.dim() || model.scaler.stds.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: model.scaler.dim(),
            });
        }
        if !model.w.iter().chain([&model.b]).all(|v| v.is_finite()) {
            return Err(Error::parse(1, "w", "non-finite weight"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&body)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

/// `λ/2 ‖w‖² + mean(max(0, 1 - y (w·x + b)))` over standardized rows.
pub fn objective(w: &[f64], b: f64, z: &[Vec<f64>], y: &[bool], lambda: f64) -> f64 {
    let hinge: f64 = z
        .iter()
        .zip(y)
        .map(|(x, &l)| (1.0 - sign(l) * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / z.len() as f64
}

/// Trained model plus the objective value after each epoch (index 0 is the
/// zero model).
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: LinearModel,
    pub objective: Vec<f64>,
}

/// Trains on rows already masked by the caller; `mask` is recorded in the
/// model so prediction applies it to raw inputs.
pub fn train_masked<R: AsRef<[f64]>>(x: &[R], y: &[bool], hyper: Hyper, mask: FeatureMask) -> Result<TrainReport> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 || y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::DegenerateLabels);
    }
    if hyper.lambda <= 0.0 || !hyper.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {}",
            hyper.lambda
        )));
    }
    let masked: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            let mut row = row.as_ref().to_vec();
            mask.zero(&mut row);
            row
        })
        .collect();
    let scaler = fit_scaler(&masked)?;
    let z: Vec<Vec<f64>> = masked.iter().map(|row| scaler.transform(row)).collect::<Result<_>>()?;
    let dim = scaler.dim();
    let lambda = hyper.lambda;

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..z.len()).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut step: u64 = 0;
    let mut best = objective(&w, b, &z, y, lambda);
    let mut history = vec![best];

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut cw = w.clone();
        let mut cb = b;
        for &i in &order {
            let eta = 1.0 / (lambda * (step as f64 + 1.0));
            let yi = sign(y[i]);
            let violated = yi * (dot(&cw, &z[i]) + cb) < 1.0;
            let shrink = 1.0 - eta * lambda;
            for wj in &mut cw {
                *wj *= shrink;
            }
            if violated {
                for (wj, xj) in cw.iter_mut().zip(&z[i]) {
                    *wj += eta * yi * xj;
                }
                cb += eta * yi;
            }
            step += 1;
        }
        // an epoch that raises the objective is discarded; the step counter
        // keeps advancing so the next pass runs with smaller steps
        let obj = objective(&cw, cb, &z, y, lambda);
        if obj.is_finite() && obj <= best {
            w = cw;
            b = cb;
            best = obj;
        }
        history.push(best);
    }

    Ok(TrainReport {
        model: LinearModel {
            format_version: MODEL_FORMAT_VERSION,
            w,
            b,
            scaler,
            hyper,
            mask,
        },
        objective: history,
    })
}

pub fn train<R: AsRef<[f64]>>(x: &[R], y: &[bool], hyper: Hyper) -> Result<LinearModel> {
    train_masked(x, y, hyper, FeatureMask::none()).map(|r| r.model)
}
