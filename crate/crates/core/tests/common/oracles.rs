//! Independent reference implementations used to check the library.

use std::f64::consts::TAU;

use symbreak::learners::MlpModel;

/// Equally spaced angles on `[0, 2π)` for brute-force phase alignment.
pub struct PhaseGrid(Vec<(f64, f64)>);

impl PhaseGrid {
    pub fn new(points: usize) -> Self {
        PhaseGrid(
            (0..points)
                .map(|j| (TAU * j as f64 / points as f64).sin_cos())
                .collect(),
        )
    }

    /// `min_θ ||e^{iθ} u - v||^2` over the grid; vectors are `(re, im)` pairs.
    pub fn min_sq_distance(&self, u: &[(f64, f64)], v: &[(f64, f64)]) -> f64 {
        let mut best = f64::INFINITY;
        for &(s, c) in &self.0 {
            let mut acc = 0.0;
            for (&(ur, ui), &(vr, vi)) in u.iter().zip(v) {
                let dr = c * ur - s * ui - vr;
                let di = s * ur + c * ui - vi;
                acc += dr * dr + di * di;
            }
            best = best.min(acc);
        }
        best
    }
}

/// K-NN by sorting every training point by `(distance, index)`.
pub fn knn_full_sort(
    inputs: &[f64],
    targets: &[f64],
    d_in: usize,
    d_out: usize,
    k: usize,
    q: &[f64],
) -> Vec<f64> {
    let mut all: Vec<(f64, usize)> = inputs
        .chunks_exact(d_in)
        .enumerate()
        .map(|(i, row)| (row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut out = vec![0.0; d_out];
    for &(_, i) in &all[..k] {
        for (o, t) in out.iter_mut().zip(&targets[i * d_out..(i + 1) * d_out]) {
            *o += t;
        }
    }
    out.iter().map(|o| o / k as f64).collect()
}

/// Plain loop forward pass, returning every layer's pre-activations.
/// Weights are read as `d_in x d_out` row-major.
pub fn naive_forward(model: &MlpModel, input: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dims = model.dims();
    let mut h = input.to_vec();
    let mut pre = Vec::new();
    for l in 0..dims.len() - 1 {
        let (d_in, d_out) = (dims[l], dims[l + 1]);
        let (w, b) = (model.weights(l), model.biases(l));
        let z: Vec<f64> = (0..d_out)
            .map(|j| b[j] + (0..d_in).map(|i| h[i] * w[i * d_out + j]).sum::<f64>())
            .collect();
        pre.push(z.clone());
        h = if l + 2 < dims.len() {
            z.iter().map(|v| v.max(0.0)).collect()
        } else {
            z
        };
    }
    (h, pre)
}

/// Batch-mean squared error plus the weight penalty, all in plain loops.
pub fn naive_loss(model: &MlpModel, inputs: &[f64], targets: &[f64], l1: f64, l2: f64) -> f64 {
    let (d_in, d_out) = (model.input_dim(), model.output_dim());
    let rows = inputs.len() / d_in;
    let mut data = 0.0;
    for r in 0..rows {
        let (out, _) = naive_forward(model, &inputs[r * d_in..(r + 1) * d_in]);
        data += out
            .iter()
            .zip(&targets[r * d_out..(r + 1) * d_out])
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>();
    }
    let mut pen = 0.0;
    for l in 0..model.num_layers() {
        for &w in model.weights(l) {
            pen += l1 * w.abs() + l2 * w * w;
        }
    }
    data / rows as f64 + pen
}

/// Smallest distance of any hidden pre-activation to the ReLU kink.
pub fn kink_margin(model: &MlpModel, inputs: &[f64]) -> f64 {
    let d_in = model.input_dim();
    let hidden = model.num_layers() - 1;
    inputs
        .chunks_exact(d_in)
        .flat_map(|row| {
            naive_forward(model, row)
                .1
                .into_iter()
                .take(hidden)
                .flatten()
        })
        .fold(f64::INFINITY, |m, z| m.min(z.abs()))
}

/// Central differences of `f` with respect to every parameter of `model`.
pub fn central_differences(
    model: &mut MlpModel,
    step: f64,
    f: impl Fn(&MlpModel) -> f64,
) -> Vec<f64> {
    (0..model.count_parameters())
        .map(|i| {
            let orig = model.params()[i];
            model.params_mut()[i] = orig + step;
            let up = f(model);
            model.params_mut()[i] = orig - step;
            let down = f(model);
            model.params_mut()[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Dense lookup-table regressor for `x` given `y = x^2`: `y ∈ [0, 1]` is
/// cut into `bins` equal cells and each cell predicts the mean training
/// target inside it. Returns the mean rectified error on the query points,
/// for raw (`±√y`) or sign-broken (`|x|`) targets.
pub fn sqrt_lookup_error(
    train_x: &[f64],
    query_x: &[f64],
    break_symmetry: bool,
    bins: usize,
) -> f64 {
    let cell = |y: f64| ((y * bins as f64) as usize).min(bins - 1);
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for &x in train_x {
        let c = cell(x * x);
        sum[c] += if break_symmetry { x.abs() } else { x };
        count[c] += 1;
    }
    let table: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let total: f64 = query_x
        .iter()
        .map(|&x| {
            let p = table[cell(x * x)];
            (p - x).powi(2).min((p + x).powi(2))
        })
        .sum();
    total / query_x.len() as f64
}
