//! Experiment orchestration: single runs, sweeps, the square-root demo and
//! markdown tables over saved reports.

mod config;
mod demo;
mod report;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;

pub use config::parse_key_values;
pub use demo::{demo_sqrt, SqrtDemo};
pub use report::{render_report, ReportTable};
pub use sweep::{run_sweep, SweepAxis, SweepPoint, SweepResult, SweepSpec};

use crate::dataset::{generate, Dataset, Split};
use crate::error::{Error, Result};
use crate::learners::{
    examples_from, knn_fit, train, Architecture, History, MlpModel, TrainConfig, DEFAULT_K,
};
use crate::metrics::{evaluate, EvalReport, RunInfo};
use crate::numerics::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Nn,
    Wnn,
    Dnn,
    Knn,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nn => "nn",
            ModelKind::Wnn => "wnn",
            ModelKind::Dnn => "dnn",
            ModelKind::Knn => "knn",
        }
    }

    pub fn architecture(self) -> Option<Architecture> {
        match self {
            ModelKind::Nn => Some(Architecture::Nn),
            ModelKind::Wnn => Some(Architecture::Wnn),
            ModelKind::Dnn => Some(Architecture::Dnn),
            ModelKind::Knn => None,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nn" => Ok(ModelKind::Nn),
            "wnn" => Ok(ModelKind::Wnn),
            "dnn" => Ok(ModelKind::Dnn),
            "knn" | "k-nn" => Ok(ModelKind::Knn),
            other => Err(Error::Usage(format!("unknown model {other:?}"))),
        }
    }
}

/// `A`: targets canonicalized before training. `B`: targets left as drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    A,
    B,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::A => "A",
            Variant::B => "B",
        }
    }

    pub fn breaks_symmetry(self) -> bool {
        self == Variant::A
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            other => Err(Error::Usage(format!(
                "unknown variant {other:?} (expected A or B)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub field: Field,
    pub n: usize,
    /// Number of measurements; `None` means `4n`.
    pub m: Option<usize>,
    pub samples: usize,
    pub model: ModelKind,
    pub variant: Variant,
    pub train: TrainConfig,
    pub k: usize,
    pub seed: u64,
    /// Independent runs (seeds `seed, seed + 1, ...`) averaged into one report.
    pub repeats: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            field: Field::Real,
            n: 5,
            m: None,
            samples: 20_000,
            model: ModelKind::Nn,
            variant: Variant::A,
            train: TrainConfig::default(),
            k: DEFAULT_K,
            seed: 0,
            repeats: 1,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn m(&self) -> usize {
        self.m.unwrap_or(4 * self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::contract("n must be at least 1"));
        }
        if self.m() < self.n {
            return Err(Error::contract(format!(
                "m = {} must be at least n = {}",
                self.m(),
                self.n
            )));
        }
        if self.samples < 10 {
            return Err(Error::contract(
                "at least 10 samples are needed for a split",
            ));
        }
        if self.k == 0 || self.repeats == 0 {
            return Err(Error::contract("k and repeats must be positive"));
        }
        self.train.validate()
    }

    pub fn info(&self) -> RunInfo {
        RunInfo {
            field: self.field,
            n: self.n,
            m: self.m(),
            model: self.model.as_str().to_string(),
            variant: self.variant.as_str().to_string(),
            samples: self.samples,
            seed: self.seed,
        }
    }

    /// Sets one option by its flag name (`batch-size` and `batch_size` alike).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Usage(format!("invalid value {value:?} for {key}")))
        }
        match key
            .trim()
            .trim_start_matches("--")
            .replace('_', "-")
            .as_str()
        {
            "field" => self.field = value.parse()?,
            "n" => self.n = parse(key, value)?,
            "m" => self.m = Some(parse(key, value)?),
            "samples" => self.samples = parse(key, value)?,
            "seed" => {
                self.seed = parse(key, value)?;
                self.train.seed = self.seed;
            }
            "model" => self.model = value.parse()?,
            "variant" => self.variant = value.parse()?,
            "epochs" => self.train.max_epochs = parse(key, value)?,
            "lr" => self.train.learning_rate = parse(key, value)?,
            "batch-size" => self.train.batch_size = parse(key, value)?,
            "patience" => self.train.patience = parse(key, value)?,
            "reg" => self.train.reg = value.parse()?,
            "reg-lambda" => self.train.reg_lambda = parse(key, value)?,
            "standardize" => self.train.standardize_inputs = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "repeats" => self.repeats = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Usage(format!("unknown option {other:?}"))),
        }
        Ok(())
    }

    /// Builds a config from `key=value` text; unknown keys are errors.
    pub fn from_key_values(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }
}

/// Everything a single run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub model: Option<MlpModel>,
    pub history: Option<History>,
}

/// Generates the data, then fits and scores the configured learner.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let report = if cfg.repeats == 1 {
        run_once(cfg)?.report
    } else {
        let mut runs = Vec::with_capacity(cfg.repeats);
        for r in 0..cfg.repeats as u64 {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(r);
            c.train.seed = cfg.train.seed.wrapping_add(r);
            runs.push(run_once(&c)?.report);
        }
        let mean_error = runs.iter().map(|r| r.mean_error).sum::<f64>() / runs.len() as f64;
        EvalReport {
            info: cfg.info(),
            mean_error,
            errors: runs.iter().flat_map(|r| r.errors.iter().copied()).collect(),
            wall_seconds: runs.iter().map(|r| r.wall_seconds).sum(),
        }
    };
    if let Some(path) = &cfg.out {
        write_report(&report, path).map_err(|e| e.at_stage("persist"))?;
    }
    Ok(report)
}

fn run_once(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let dataset = generate(cfg.field, cfg.n, cfg.m(), cfg.samples, cfg.seed)
        .map_err(|e| e.at_stage("generate"))?;
    let split = dataset.split(cfg.seed).map_err(|e| e.at_stage("split"))?;
    let mut outcome = run_on(cfg, &dataset, &split)?;
    outcome.report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(outcome)
}

/// Fits on the train/val part of `dataset` and evaluates on its raw test part.
pub fn run_on(cfg: &ExperimentConfig, dataset: &Dataset, split: &Split) -> Result<RunOutcome> {
    // Test data is scored against the raw signals; a pre-canonicalized
    // dataset would mean the test partition had been preprocessed.
    if dataset.canonicalized() {
        return Err(
            Error::contract("test partition must not be canonicalized").at_stage("evaluate")
        );
    }
    let canon = cfg.variant.breaks_symmetry();
    let mut info = cfg.info();
    info.samples = dataset.len();
    info.n = dataset.n();
    info.m = dataset.m();
    info.field = dataset.field();

    match cfg.model.architecture() {
        None => {
            let knn =
                knn_fit(dataset, &split.train, cfg.k, canon).map_err(|e| e.at_stage("fit"))?;
            let report =
                evaluate(&knn, dataset, &split.test, info).map_err(|e| e.at_stage("evaluate"))?;
            Ok(RunOutcome {
                report,
                model: None,
                history: None,
            })
        }
        Some(arch) => {
            let train_ex =
                examples_from(dataset, &split.train, canon).map_err(|e| e.at_stage("fit"))?;
            let val_ex =
                examples_from(dataset, &split.val, canon).map_err(|e| e.at_stage("fit"))?;
            let dims = arch.dims(dataset.field(), dataset.n(), dataset.m());
            let model = MlpModel::new(dataset.field(), &dims, cfg.train.seed)
                .map_err(|e| e.at_stage("fit"))?;
            let (model, history) =
                train(model, &train_ex, &val_ex, &cfg.train).map_err(|e| e.at_stage("train"))?;
            info!(
                "{}-{} n={} stopped after {} epochs (best {})",
                cfg.model.as_str(),
                cfg.variant.as_str(),
                dataset.n(),
                history.epochs.len(),
                history.best_epoch
            );
            let report =
                evaluate(&model, dataset, &split.test, info).map_err(|e| e.at_stage("evaluate"))?;
            Ok(RunOutcome {
                report,
                model: Some(model),
                history: Some(history),
            })
        }
    }
}

/// Writes a report as CSV when the path ends in `.csv`, else as `key=value` text.
pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = if path.extension().is_some_and(|e| e == "csv") {
        format!("{}\n{}\n", EvalReport::csv_header(), report.csv_row())
    } else {
        report.to_key_values()
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
