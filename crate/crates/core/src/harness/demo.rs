//! One-dimensional square-root demo: `y = x^2`, recover `x` from `y`.
//!
//! Without preprocessing the regression target is `±√y` with a random
//! sign, which is wildly oscillating in `y`; the best smooth fit is near 0.
//! With preprocessing the target is `|x| = √y`.

use super::{run_on, ExperimentConfig, ModelKind, Variant};
use crate::dataset::generate_with;
use crate::error::{Error, Result};
use crate::forward_model::SensingMatrix;
use crate::learners::TrainConfig;
use crate::metrics::{EvalReport, Predictor};
use crate::numerics::Matrix;
use crate::plot::{Plot, Scale, Series};

#[derive(Debug, Clone)]
pub struct SqrtDemo {
    pub report: EvalReport,
    /// Test measurements against predictions and the two true branches.
    pub svg: String,
    /// Training targets as seen by the learner.
    pub train_targets: Vec<f64>,
}

pub fn demo_sqrt(
    samples: usize,
    with_breaking: bool,
    seed: u64,
    train_cfg: &TrainConfig,
) -> Result<SqrtDemo> {
    if samples < 100 {
        return Err(Error::contract("demo_sqrt needs at least 100 samples"));
    }
    let sensing = SensingMatrix::from_matrix(Matrix::real(1, 1, vec![1.0])?, seed);
    let dataset = generate_with(sensing, samples, seed).map_err(|e| e.at_stage("generate"))?;
    let split = dataset.split(seed).map_err(|e| e.at_stage("split"))?;
    let cfg = ExperimentConfig {
        n: 1,
        m: Some(1),
        samples,
        model: ModelKind::Nn,
        variant: if with_breaking {
            Variant::A
        } else {
            Variant::B
        },
        train: train_cfg.clone(),
        seed,
        ..ExperimentConfig::default()
    };
    let outcome = run_on(&cfg, &dataset, &split)?;
    let model = outcome.model.expect("NN run yields a model");

    let test_y = dataset.input_rows(&split.test);
    let predicted = model.predict_rows(&test_y);
    let branch =
        |sign: f64| -> Vec<(f64, f64)> { test_y.iter().map(|&y| (y, sign * y.sqrt())).collect() };
    let plot = Plot {
        title: format!(
            "learning x from y = x^2 ({})",
            if with_breaking {
                "with symmetry breaking"
            } else {
                "raw targets"
            }
        ),
        x_label: "y".into(),
        y_label: "x".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Linear,
        series: vec![
            Series {
                label: "+sqrt(y)".into(),
                points: branch(1.0),
                color: "lightgray",
            },
            Series {
                label: "-sqrt(y)".into(),
                points: branch(-1.0),
                color: "darkgray",
            },
            Series {
                label: "prediction".into(),
                points: test_y
                    .iter()
                    .copied()
                    .zip(predicted.iter().copied())
                    .collect(),
                color: "crimson",
            },
        ],
    };
    Ok(SqrtDemo {
        report: outcome.report,
        svg: plot.to_scatter_svg(),
        train_targets: dataset.target_rows(&split.train, with_breaking),
    })
}
