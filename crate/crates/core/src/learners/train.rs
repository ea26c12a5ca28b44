//! Mini-batch training loop with validation-based early stopping.

use log::debug;

use super::adam::AdamState;
use super::mlp::{MlpModel, Regularization, Workspace};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// RNG stream that drives the per-epoch shuffles.
pub const SHUFFLE_STREAM: u64 = 4;

/// Default penalty weight when a regularization scheme is switched on.
pub const DEFAULT_REG_LAMBDA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub batch_size: usize,
    pub reg: Regularization,
    pub reg_lambda: f64,
    /// Train on per-feature standardized inputs and fold the affine map
    /// into the first layer afterwards.
    pub standardize_inputs: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            learning_rate: 0.001,
            patience: 10,
            batch_size: 128,
            reg: Regularization::None,
            reg_lambda: DEFAULT_REG_LAMBDA,
            standardize_inputs: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(Error::contract(
                "epochs, patience and batch size must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::contract("learning rate must be positive and finite"));
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            return Err(Error::contract("reg_lambda must be nonnegative and finite"));
        }
        Ok(())
    }

    fn effective_lambda(&self) -> f64 {
        if self.reg == Regularization::None {
            0.0
        } else {
            self.reg_lambda
        }
    }
}

/// Row-major input/target blocks of equal row count.
#[derive(Debug, Clone, PartialEq)]
pub struct Examples {
    pub input_dim: usize,
    pub output_dim: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Examples {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::contract("example dimensions must be positive"));
        }
        if !inputs.len().is_multiple_of(input_dim)
            || !targets.len().is_multiple_of(output_dim)
            || inputs.len() / input_dim != targets.len() / output_dim
        {
            return Err(Error::contract(
                "example blocks are ragged or differ in row count",
            ));
        }
        Ok(Examples {
            input_dim,
            output_dim,
            inputs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn input_row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    fn target_row(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once the validation loss has failed to improve for `patience`
/// consecutive epochs.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

fn feature_stats(ex: &Examples) -> (Vec<f64>, Vec<f64>) {
    let d = ex.input_dim;
    let rows = ex.len() as f64;
    let mut mean = vec![0.0; d];
    for row in ex.inputs.chunks_exact(d) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= rows);
    let mut var = vec![0.0; d];
    for row in ex.inputs.chunks_exact(d) {
        for k in 0..d {
            var[k] += (row[k] - mean[k]).powi(2);
        }
    }
    let std = var
        .iter()
        .map(|v| {
            let s = (v / rows).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

fn standardize(ex: &Examples, mean: &[f64], std: &[f64]) -> Examples {
    let mut out = ex.clone();
    for row in out.inputs.chunks_exact_mut(ex.input_dim) {
        for k in 0..row.len() {
            row[k] = (row[k] - mean[k]) / std[k];
        }
    }
    out
}

/// Trains `model` on `train`, monitoring `val`; returns the parameters with
/// the lowest validation loss.
pub fn train(
    mut model: MlpModel,
    train: &Examples,
    val: &Examples,
    cfg: &TrainConfig,
) -> Result<(MlpModel, History)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::contract(
            "training and validation sets must be nonempty",
        ));
    }
    for ex in [train, val] {
        if ex.input_dim != model.input_dim() || ex.output_dim != model.output_dim() {
            return Err(Error::contract(format!(
                "model maps {} -> {} but examples are {} -> {}",
                model.input_dim(),
                model.output_dim(),
                ex.input_dim,
                ex.output_dim
            )));
        }
    }

    let stats = cfg.standardize_inputs.then(|| feature_stats(train));
    let (train_std, val_std);
    let (train, val) = match &stats {
        Some((mean, std)) => {
            train_std = standardize(train, mean, std);
            val_std = standardize(val, mean, std);
            (&train_std, &val_std)
        }
        None => (train, val),
    };

    let lambda = cfg.effective_lambda();
    let mut adam = AdamState::new(model.count_parameters(), cfg.learning_rate);
    let mut rng = RngStream::new(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut ws = Workspace::default();
    let mut grads = vec![0.0; model.count_parameters()];
    let mut batch_in = Vec::with_capacity(cfg.batch_size * train.input_dim);
    let mut batch_out = Vec::with_capacity(cfg.batch_size * train.output_dim);

    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best_params = model.params().to_vec();
    let mut history = History::default();

    for epoch in 1..=cfg.max_epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            batch_in.clear();
            batch_out.clear();
            for &i in chunk {
                batch_in.extend_from_slice(train.input_row(i));
                batch_out.extend_from_slice(train.target_row(i));
            }
            let loss = model.loss_and_grad_into(
                &batch_in,
                &batch_out,
                chunk.len(),
                cfg.reg,
                lambda,
                &mut ws,
                &mut grads,
            );
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch: Some(epoch),
                    batch: b,
                    loss,
                });
            }
            adam.step(model.params_mut(), &grads)?;
            loss_sum += loss;
            batches += 1;
        }
        let val_loss = model.mean_squared_error(&val.inputs, &val.targets, &mut ws);
        if !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch: Some(epoch),
                batch: batches,
                loss: val_loss,
            });
        }
        let train_loss = loss_sum / batches as f64;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        debug!("epoch {epoch}: train {train_loss:.6e}, val {val_loss:.6e}");

        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best_params.copy_from_slice(model.params()),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }

    model.params_mut().copy_from_slice(&best_params);
    if let Some((mean, std)) = &stats {
        model.fold_input_standardization(mean, std);
    }
    history.best_epoch = stopper.best_epoch();
    history.best_val_loss = stopper.best();
    Ok((model, history))
}
