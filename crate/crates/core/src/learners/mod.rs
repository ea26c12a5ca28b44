//! Dense-network and nearest-neighbor learners for the inverse map `y -> x`.

mod adam;
mod knn;
mod mlp;
mod train;

pub use adam::AdamState;
pub use knn::{KnnModel, DEFAULT_K};
pub use mlp::{
    count_parameters_for, Activation, Architecture, MlpModel, Regularization, Workspace,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION, INIT_STREAM,
};
pub use train::{
    train, EarlyStopping, EpochRecord, Examples, History, StopDecision, TrainConfig,
    DEFAULT_REG_LAMBDA, SHUFFLE_STREAM,
};

use crate::dataset::Dataset;
use crate::error::Result;

/// Examples for the given sample indices: inputs are the measurements,
/// targets the real-encoded signals (canonicalized on request).
pub fn examples_from(
    dataset: &Dataset,
    idx: &[usize],
    canonicalize_targets: bool,
) -> Result<Examples> {
    Examples::new(
        dataset.m(),
        dataset.field().real_width(dataset.n()),
        dataset.input_rows(idx),
        dataset.target_rows(idx, canonicalize_targets),
    )
}

/// K-NN fitted on the training indices of `dataset`.
pub fn knn_fit(
    dataset: &Dataset,
    train_idx: &[usize],
    k: usize,
    canonicalize_targets: bool,
) -> Result<KnnModel> {
    let ex = examples_from(dataset, train_idx, canonicalize_targets)?;
    KnnModel::fit(ex.inputs, ex.targets, ex.input_dim, ex.output_dim, k)
}
