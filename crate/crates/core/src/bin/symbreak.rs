use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use symbreak::dataset::{generate, Dataset};
use symbreak::error::{Error, Result};
use symbreak::harness::{
    demo_sqrt, render_report, run_experiment, run_on, run_sweep, write_report, ExperimentConfig,
    ModelKind, SweepSpec,
};
use symbreak::learners::{examples_from, train, MlpModel};
use symbreak::metrics::evaluate;

#[derive(Parser)]
#[command(
    name = "symbreak",
    version,
    about = "Symmetry breaking for learned phase retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset and write it as a GPRD file.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Also write a CSV dump here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train a network and write a GPRM checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train on this GPRD file instead of generating data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a full experiment, or score an existing checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Vary one hyperparameter and record the test error of each run.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// batch_size | learning_rate | regularization | dimension | samples
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. 1,10,100,1000
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Render saved reports as a markdown table.
    Report {
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn the square root from y = x^2 with and without symmetry breaking.
    DemoSqrt {
        #[command(flatten)]
        common: Common,
        /// on | off | both
        #[arg(long, default_value = "both")]
        breaking: String,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat key=value file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Defaults to 4n.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    reg: Option<String>,
    #[arg(long)]
    reg_lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Average this many independent seeds into one report.
    #[arg(long)]
    repeats: Option<usize>,
    /// Feed raw, unstandardized measurements to the network.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                ExperimentConfig::from_key_values(&text)?
            }
            None => ExperimentConfig::default(),
        };
        let flags: [(&str, Option<String>); 16] = [
            ("field", self.field.clone()),
            ("n", self.n.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("samples", self.samples.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("model", self.model.clone()),
            ("variant", self.variant.clone()),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("lr", self.lr.map(|v| v.to_string())),
            ("batch-size", self.batch_size.map(|v| v.to_string())),
            ("patience", self.patience.map(|v| v.to_string())),
            ("reg", self.reg.clone()),
            ("reg-lambda", self.reg_lambda.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("repeats", self.repeats.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if self.no_standardize {
            cfg.train.standardize_inputs = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_or_generate(data: Option<&Path>, cfg: &ExperimentConfig) -> Result<Dataset> {
    match data {
        Some(path) => Dataset::load(path).map_err(|e| e.at_stage("load")),
        None => generate(cfg.field, cfg.n, cfg.m(), cfg.samples, cfg.seed)
            .map_err(|e| e.at_stage("generate")),
    }
}

fn require_out(cfg: &ExperimentConfig, what: &str) -> Result<PathBuf> {
    cfg.out
        .clone()
        .ok_or_else(|| Error::Usage(format!("--out is required for {what}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, csv } => {
            let cfg = common.config()?;
            let out = require_out(&cfg, "generate")?;
            let data = load_or_generate(None, &cfg)?;
            data.save(&out)?;
            if let Some(csv) = csv {
                data.save_csv(csv)?;
            }
            println!("wrote {} samples to {}", data.len(), out.display());
        }
        Command::Train { common, data } => {
            let cfg = common.config()?;
            let out = require_out(&cfg, "train")?;
            let Some(arch) = cfg.model.architecture() else {
                return Err(Error::Usage(
                    "K-NN has no checkpoint; use `eval --model knn`".into(),
                ));
            };
            let dataset = load_or_generate(data.as_deref(), &cfg)?;
            let split = dataset.split(cfg.seed).map_err(|e| e.at_stage("split"))?;
            let canon = cfg.variant.breaks_symmetry();
            let train_ex = examples_from(&dataset, &split.train, canon)?;
            let val_ex = examples_from(&dataset, &split.val, canon)?;
            let dims = arch.dims(dataset.field(), dataset.n(), dataset.m());
            let model = MlpModel::new(dataset.field(), &dims, cfg.train.seed)?;
            let (model, history) =
                train(model, &train_ex, &val_ex, &cfg.train).map_err(|e| e.at_stage("train"))?;
            model.save(&out)?;
            println!(
                "trained {} epochs (best {} with val loss {:.6e}); wrote {}",
                history.epochs.len(),
                history.best_epoch,
                history.best_val_loss,
                out.display()
            );
        }
        Command::Eval {
            common,
            data,
            checkpoint,
        } => {
            let cfg = common.config()?;
            let report = match (checkpoint, data) {
                (Some(ckpt), data) => {
                    let model = MlpModel::load(&ckpt).map_err(|e| e.at_stage("load"))?;
                    let dataset = load_or_generate(data.as_deref(), &cfg)?;
                    let split = dataset.split(cfg.seed)?;
                    let mut info = cfg.info();
                    (info.field, info.n, info.m, info.samples) =
                        (dataset.field(), dataset.n(), dataset.m(), dataset.len());
                    evaluate(&model, &dataset, &split.test, info)
                        .map_err(|e| e.at_stage("evaluate"))?
                }
                (None, Some(path)) => {
                    let dataset = Dataset::load(&path).map_err(|e| e.at_stage("load"))?;
                    let split = dataset.split(cfg.seed)?;
                    run_on(&cfg, &dataset, &split)?.report
                }
                (None, None) => {
                    let mut c = cfg.clone();
                    c.out = None;
                    run_experiment(&c)?
                }
            };
            match &cfg.out {
                Some(path) => write_report(&report, path)?,
                None => print!("{}", report.to_key_values()),
            }
            info!("mean rectified error {:.6}", report.mean_error);
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let mut cfg = common.config()?;
            let out = cfg.out.take();
            let spec = SweepSpec::new(cfg, axis.parse()?, values)?;
            let result = run_sweep(&spec, out.as_deref())?;
            print!("{}", result.summary_table());
            if let Some(ratio) = result.max_min_ratio() {
                println!("max/min error ratio: {ratio:.3}");
            }
        }
        Command::Report { files, out } => {
            let table = render_report(&files)?;
            for (path, err) in &table.failures {
                eprintln!("error: {}: {err}", path.display());
            }
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            if table.failures.len() == files.len() {
                return Err(Error::Malformed("no readable report files".into()));
            }
            match out {
                Some(path) => {
                    fs::write(&path, &table.markdown).map_err(|e| Error::Io { path, source: e })?
                }
                None => print!("{}", table.markdown),
            }
        }
        Command::DemoSqrt {
            mut common,
            breaking,
        } => {
            if common.samples.is_none() {
                common.samples = Some(10_000);
            }
            let cfg = common.config()?;
            let modes: &[bool] = match breaking.as_str() {
                "on" => &[true],
                "off" => &[false],
                "both" => &[true, false],
                other => {
                    return Err(Error::Usage(format!(
                        "--breaking must be on, off or both (got {other:?})"
                    )))
                }
            };
            if cfg.model != ModelKind::Nn {
                return Err(Error::Usage("demo-sqrt always trains the NN model".into()));
            }
            for &with in modes {
                let demo = demo_sqrt(cfg.samples, with, cfg.seed, &cfg.train)?;
                let tag = if with { "breaking" } else { "raw" };
                println!("{tag}: mean rectified error {:.6e}", demo.report.mean_error);
                if let Some(dir) = &cfg.out {
                    fs::create_dir_all(dir).map_err(|e| Error::Io {
                        path: dir.clone(),
                        source: e,
                    })?;
                    let svg = dir.join(format!("sqrt_{tag}.svg"));
                    fs::write(&svg, &demo.svg).map_err(|e| Error::Io {
                        path: svg.clone(),
                        source: e,
                    })?;
                    write_report(&demo.report, &dir.join(format!("sqrt_{tag}.txt")))?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
