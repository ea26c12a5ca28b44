//! Symmetry-rectified reconstruction errors and test-set evaluation.

use std::fmt::Write as _;
use std::time::Instant;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{KnnModel, MlpModel, Workspace};
use crate::numerics::{CplxVec, Field, RealVec, Signal};

/// `min_{s = ±1} ||s x_hat - x||^2 / n`.
pub fn epsilon_real(x_hat: &RealVec, x: &RealVec) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(Error::contract(format!(
            "epsilon_real: lengths {} and {}",
            x_hat.len(),
            x.len()
        )));
    }
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in x_hat.as_slice().iter().zip(x.as_slice()) {
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    Ok(minus.min(plus) / x.len() as f64)
}

/// `min_θ ||e^{iθ} x_hat - x||^2 / n`, in closed form:
/// `(||x_hat||^2 + ||x||^2 - 2 |<x_hat, x>|) / n`.
pub fn epsilon_complex(x_hat: &CplxVec, x: &CplxVec) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(Error::contract(format!(
            "epsilon_complex: lengths {} and {}",
            x_hat.len(),
            x.len()
        )));
    }
    // <u, v> = Σ u_k conj(v_k)
    let (mut ip_re, mut ip_im) = (0.0, 0.0);
    for k in 0..x.len() {
        let (ur, ui) = x_hat.get(k);
        let (vr, vi) = x.get(k);
        ip_re += ur * vr + ui * vi;
        ip_im += ui * vr - ur * vi;
    }
    let value = x_hat.norm_sq() + x.norm_sq() - 2.0 * ip_re.hypot(ip_im);
    Ok(value.max(0.0) / x.len() as f64)
}

/// Field-dispatching rectified error.
pub fn rectified_error(x_hat: &Signal, x: &Signal) -> Result<f64> {
    match (x_hat, x) {
        (Signal::Real(a), Signal::Real(b)) => epsilon_real(a, b),
        (Signal::Complex(a), Signal::Complex(b)) => epsilon_complex(a, b),
        _ => Err(Error::contract("rectified_error: field mismatch")),
    }
}

/// Anything that maps measurement rows to real-encoded signal rows.
pub trait Predictor {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Predictions for `inputs.len() / input_dim()` row-major inputs.
    fn predict_rows(&self, inputs: &[f64]) -> Vec<f64>;
}

impl Predictor for MlpModel {
    fn input_dim(&self) -> usize {
        MlpModel::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        MlpModel::output_dim(self)
    }

    fn predict_rows(&self, inputs: &[f64]) -> Vec<f64> {
        const CHUNK: usize = 1024;
        let d_in = MlpModel::input_dim(self);
        let mut ws = Workspace::default();
        let mut out = Vec::with_capacity(inputs.len() / d_in * MlpModel::output_dim(self));
        for chunk in inputs.chunks(CHUNK * d_in) {
            out.extend_from_slice(self.forward_batch(chunk, chunk.len() / d_in, &mut ws));
        }
        out
    }
}

impl Predictor for KnnModel {
    fn input_dim(&self) -> usize {
        KnnModel::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        KnnModel::output_dim(self)
    }

    fn predict_rows(&self, inputs: &[f64]) -> Vec<f64> {
        let mut scratch = Vec::with_capacity(self.len());
        inputs
            .chunks_exact(KnnModel::input_dim(self))
            .flat_map(|q| self.predict_with(q, &mut scratch))
            .collect()
    }
}

/// Configuration echo carried by every report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub field: Field,
    pub n: usize,
    pub m: usize,
    pub model: String,
    pub variant: String,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub info: RunInfo,
    pub mean_error: f64,
    pub errors: Vec<f64>,
    pub wall_seconds: f64,
}

pub const REPORT_KEYS: [&str; 9] = [
    "field",
    "n",
    "m",
    "model",
    "variant",
    "samples",
    "seed",
    "mean_error",
    "wall_seconds",
];

impl EvalReport {
    pub fn csv_header() -> String {
        REPORT_KEYS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }

    fn values(&self) -> [String; 9] {
        let i = &self.info;
        [
            i.field.to_string(),
            i.n.to_string(),
            i.m.to_string(),
            i.model.clone(),
            i.variant.clone(),
            i.samples.to_string(),
            i.seed.to_string(),
            format!("{:e}", self.mean_error),
            format!("{:.3}", self.wall_seconds),
        ]
    }

    /// `key=value` block, one line per field.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in REPORT_KEYS.iter().zip(self.values()) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Parses either the `key=value` block or a two-line CSV (header + row).
    /// Per-sample errors are not serialized and come back empty.
    pub fn parse(text: &str) -> Result<EvalReport> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let pairs: Vec<(String, String)> = if lines.first().is_some_and(|l| l.starts_with("field,"))
        {
            let header: Vec<&str> = lines[0].split(',').collect();
            let row: Vec<&str> = lines
                .get(1)
                .ok_or_else(|| Error::Malformed("CSV report has no data row".into()))?
                .split(',')
                .collect();
            if header.len() != row.len() {
                return Err(Error::Malformed(
                    "CSV report header and row differ in width".into(),
                ));
            }
            header
                .iter()
                .zip(&row)
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        } else {
            lines
                .iter()
                .map(|l| {
                    l.split_once('=')
                        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                        .ok_or_else(|| Error::Malformed(format!("expected key=value, got {l:?}")))
                })
                .collect::<Result<_>>()?
        };
        let get = |key: &str| {
            pairs
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Malformed(format!("report lacks {key}")))
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Malformed(format!("bad {key} value {v:?}")))
        }
        Ok(EvalReport {
            info: RunInfo {
                field: get("field")?
                    .parse()
                    .map_err(|_| Error::Malformed("bad field".into()))?,
                n: num("n", get("n")?)?,
                m: num("m", get("m")?)?,
                model: get("model")?.to_string(),
                variant: get("variant")?.to_string(),
                samples: num("samples", get("samples")?)?,
                seed: num("seed", get("seed")?)?,
            },
            mean_error: num("mean_error", get("mean_error")?)?,
            errors: Vec::new(),
            wall_seconds: num("wall_seconds", get("wall_seconds")?)?,
        })
    }
}

/// Predicts every test sample from its raw measurement and averages the
/// field-appropriate rectified error against the stored signal.
pub fn evaluate(
    predictor: &dyn Predictor,
    dataset: &Dataset,
    test_idx: &[usize],
    info: RunInfo,
) -> Result<EvalReport> {
    let start = Instant::now();
    if test_idx.is_empty() {
        return Err(Error::contract("evaluate: empty test partition"));
    }
    let width = dataset.field().real_width(dataset.n());
    if predictor.input_dim() != dataset.m() || predictor.output_dim() != width {
        return Err(Error::contract(format!(
            "evaluate: predictor maps {} -> {} but data needs {} -> {}",
            predictor.input_dim(),
            predictor.output_dim(),
            dataset.m(),
            width
        )));
    }
    let predictions = predictor.predict_rows(&dataset.input_rows(test_idx));
    let mut errors = Vec::with_capacity(test_idx.len());
    for (row, &i) in predictions.chunks_exact(width).zip(test_idx) {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("prediction for test sample {i}")));
        }
        let x_hat = Signal::from_real_encoding(dataset.field(), row)?;
        errors.push(rectified_error(&x_hat, &dataset.xs()[i])?);
    }
    let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(EvalReport {
        info,
        mean_error,
        errors,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
