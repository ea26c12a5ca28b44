//! One-axis hyperparameter sweeps over a shared dataset seed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::{run_experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::learners::Regularization;
use crate::metrics::EvalReport;
use crate::plot::{Plot, Scale, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    BatchSize,
    LearningRate,
    Regularization,
    Dimension,
    Samples,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::BatchSize => "batch_size",
            SweepAxis::LearningRate => "learning_rate",
            SweepAxis::Regularization => "regularization",
            SweepAxis::Dimension => "dimension",
            SweepAxis::Samples => "samples",
        }
    }

    fn x_scale(self) -> Scale {
        match self {
            SweepAxis::BatchSize | SweepAxis::LearningRate | SweepAxis::Samples => Scale::Log10,
            SweepAxis::Regularization | SweepAxis::Dimension => Scale::Linear,
        }
    }

    /// Applies one value to a copy of `base`, returning the config and the
    /// numeric position used for plotting.
    fn apply(
        self,
        base: &ExperimentConfig,
        value: &str,
        index: usize,
    ) -> Result<(ExperimentConfig, f64)> {
        let bad = || Error::Usage(format!("invalid {} value {value:?}", self.as_str()));
        let mut cfg = base.clone();
        let x = match self {
            SweepAxis::BatchSize => {
                let b: usize = value.parse().map_err(|_| bad())?;
                if b == 0 {
                    return Err(bad());
                }
                cfg.train.batch_size = b;
                b as f64
            }
            SweepAxis::LearningRate => {
                let lr: f64 = value.parse().map_err(|_| bad())?;
                if !(lr > 0.0 && lr.is_finite()) {
                    return Err(bad());
                }
                cfg.train.learning_rate = lr;
                lr
            }
            SweepAxis::Regularization => {
                let reg: Regularization = value.parse().map_err(|_| bad())?;
                cfg.train.reg = reg;
                index as f64
            }
            SweepAxis::Dimension => {
                let n: usize = value.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                cfg.n = n;
                if base.m.is_none() {
                    cfg.m = None;
                }
                n as f64
            }
            SweepAxis::Samples => {
                let s: usize = value.parse().map_err(|_| bad())?;
                if s < 10 {
                    return Err(bad());
                }
                cfg.samples = s;
                s as f64
            }
        };
        cfg.out = None;
        Ok((cfg, x))
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "batch_size" | "batch" => Ok(SweepAxis::BatchSize),
            "learning_rate" | "lr" => Ok(SweepAxis::LearningRate),
            "regularization" | "reg" => Ok(SweepAxis::Regularization),
            "dimension" | "n" => Ok(SweepAxis::Dimension),
            "samples" => Ok(SweepAxis::Samples),
            other => Err(Error::Usage(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    base: ExperimentConfig,
    axis: SweepAxis,
    values: Vec<String>,
}

impl SweepSpec {
    pub fn new(base: ExperimentConfig, axis: SweepAxis, values: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Usage("a sweep needs at least one value".into()));
        }
        for (i, v) in values.iter().enumerate() {
            axis.apply(&base, v, i)?.0.validate()?;
        }
        Ok(SweepSpec { base, axis, values })
    }

    pub fn axis(&self) -> SweepAxis {
        self.axis
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn base(&self) -> &ExperimentConfig {
        &self.base
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: String,
    pub x: f64,
    pub outcome: std::result::Result<EvalReport, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub label: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn reports(&self) -> impl Iterator<Item = &EvalReport> {
        self.points.iter().filter_map(|p| p.outcome.as_ref().ok())
    }

    /// Largest over smallest mean error across successful points.
    pub fn max_min_ratio(&self) -> Option<f64> {
        let errs: Vec<f64> = self.reports().map(|r| r.mean_error).collect();
        if errs.is_empty() {
            return None;
        }
        let max = errs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = errs.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!(
            "{},{},status\n",
            self.axis.as_str(),
            EvalReport::csv_header()
        );
        for p in &self.points {
            match &p.outcome {
                Ok(r) => {
                    let _ = writeln!(out, "{},{},ok", p.value, r.csv_row());
                }
                Err(e) => {
                    let blanks = ",".repeat(EvalReport::csv_header().matches(',').count());
                    let _ = writeln!(out, "{},{blanks},failed: {}", p.value, e.replace(',', ";"));
                }
            }
        }
        out
    }

    pub fn summary_table(&self) -> String {
        let mut out = format!("| {} | mean error |\n|---|---|\n", self.axis.as_str());
        for p in &self.points {
            let cell = match &p.outcome {
                Ok(r) => format!("{:.5}", r.mean_error),
                Err(e) => format!("failed: {e}"),
            };
            let _ = writeln!(out, "| {} | {cell} |", p.value);
        }
        out
    }

    pub fn plot(&self) -> Plot {
        Plot {
            title: format!("{} test error vs {}", self.label, self.axis.as_str()),
            x_label: self.axis.as_str().to_string(),
            y_label: "mean rectified error".into(),
            x_scale: self.axis.x_scale(),
            y_scale: Scale::Linear,
            series: vec![Series {
                label: self.label.clone(),
                points: self
                    .points
                    .iter()
                    .filter_map(|p| p.outcome.as_ref().ok().map(|r| (p.x, r.mean_error)))
                    .collect(),
                color: "steelblue",
            }],
        }
    }
}

/// Runs one experiment per value. Failing points are recorded and the rest
/// still run. With `out_dir`, writes `sweep_<axis>.csv` and `.svg` there.
pub fn run_sweep(spec: &SweepSpec, out_dir: Option<&Path>) -> Result<SweepResult> {
    let mut points = Vec::with_capacity(spec.values.len());
    for (i, value) in spec.values.iter().enumerate() {
        let (cfg, x) = spec.axis.apply(&spec.base, value, i)?;
        let outcome = run_experiment(&cfg).map_err(|e| {
            warn!("sweep point {value} failed: {e}");
            e.to_string()
        });
        points.push(SweepPoint {
            value: value.clone(),
            x,
            outcome,
        });
    }
    let label = format!(
        "{}-{}",
        spec.base.model.as_str().to_uppercase(),
        spec.base.variant.as_str()
    );
    let result = SweepResult {
        axis: spec.axis,
        label,
        points,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = format!("sweep_{}", spec.axis.as_str());
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, result.summary_csv()).map_err(|e| Error::io(&csv, e))?;
        let svg = dir.join(format!("{stem}.svg"));
        fs::write(&svg, result.plot().to_line_svg()).map_err(|e| Error::io(&svg, e))?;
    }
    Ok(result)
}
