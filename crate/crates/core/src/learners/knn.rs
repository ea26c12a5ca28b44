//! Brute-force K-nearest-neighbor regression.

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

/// Stores training inputs (`y` rows) and real-encoded targets (`x` rows).
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl KnnModel {
    pub fn fit(
        inputs: Vec<f64>,
        targets: Vec<f64>,
        input_dim: usize,
        output_dim: usize,
        k: usize,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::contract("K-NN dimensions must be positive"));
        }
        if !inputs.len().is_multiple_of(input_dim) || !targets.len().is_multiple_of(output_dim) {
            return Err(Error::contract("K-NN training blocks are ragged"));
        }
        let rows = inputs.len() / input_dim;
        if targets.len() / output_dim != rows {
            return Err(Error::contract(
                "K-NN inputs and targets differ in row count",
            ));
        }
        if rows == 0 {
            return Err(Error::contract("K-NN needs at least one training sample"));
        }
        if k == 0 || k > rows {
            return Err(Error::contract(format!("K = {k} is outside 1..={rows}")));
        }
        Ok(KnnModel {
            k,
            input_dim,
            output_dim,
            inputs,
            targets,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Mean target of the `K` stored inputs closest to `query`; equal
    /// distances go to the lower training index.
    pub fn predict(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.input_dim {
            return Err(Error::contract(format!(
                "K-NN expects {} inputs, got {}",
                self.input_dim,
                query.len()
            )));
        }
        let mut scratch = Vec::with_capacity(self.len());
        Ok(self.predict_with(query, &mut scratch))
    }

    pub(crate) fn predict_with(&self, query: &[f64], scratch: &mut Vec<(f64, usize)>) -> Vec<f64> {
        scratch.clear();
        scratch.extend(
            self.inputs
                .chunks_exact(self.input_dim)
                .enumerate()
                .map(|(i, row)| {
                    let d: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d, i)
                }),
        );
        let by_distance =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < scratch.len() {
            scratch.select_nth_unstable_by(self.k - 1, by_distance);
        }
        let nearest = &mut scratch[..self.k];
        nearest.sort_unstable_by(by_distance);

        let mut out = vec![0.0; self.output_dim];
        for &(_, i) in nearest.iter() {
            let row = &self.targets[i * self.output_dim..(i + 1) * self.output_dim];
            out.iter_mut().zip(row).for_each(|(o, t)| *o += t);
        }
        out.iter_mut().for_each(|o| *o /= self.k as f64);
        out
    }
}
