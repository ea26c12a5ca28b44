//! Dense feedforward network with ReLU hidden layers and a linear output.
//!
//! All parameters live in one flat buffer. Layer `l` owns a weight block of
//! shape `d_in x d_out` (row-major, so `z = x W + b` for a row vector `x`)
//! followed by its `d_out` biases. Gradients and Adam moments share this
//! layout.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::dataset::{
    field_tag, parse_field_tag, read_exact, read_f64s, read_u16, read_u32, write_f64s,
};
use crate::error::{Error, Result};
use crate::numerics::{Field, RngStream};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GPRM";
pub const CHECKPOINT_VERSION: u32 = 1;

/// RNG stream used for weight initialization.
pub const INIT_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regularization {
    #[default]
    None,
    L1,
    L2,
    L1L2,
}

impl Regularization {
    pub fn as_str(self) -> &'static str {
        match self {
            Regularization::None => "none",
            Regularization::L1 => "l1",
            Regularization::L2 => "l2",
            Regularization::L1L2 => "l1l2",
        }
    }

    fn has_l1(self) -> bool {
        matches!(self, Regularization::L1 | Regularization::L1L2)
    }

    fn has_l2(self) -> bool {
        matches!(self, Regularization::L2 | Regularization::L1L2)
    }
}

impl std::str::FromStr for Regularization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['+', '_', '-'], "").as_str() {
            "none" => Ok(Regularization::None),
            "l1" => Ok(Regularization::L1),
            "l2" => Ok(Regularization::L2),
            "l1l2" => Ok(Regularization::L1L2),
            other => Err(Error::Usage(format!("unknown regularization {other:?}"))),
        }
    }
}

impl std::fmt::Display for Regularization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hidden-layer layouts of the three network sizes in the comparative study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// `m-256-128-64-out`
    Nn,
    /// `m-512-256-128-out`
    Wnn,
    /// `m-2048-1024-512-256-128-out`
    Dnn,
}

impl Architecture {
    pub fn hidden(self) -> &'static [usize] {
        match self {
            Architecture::Nn => &[256, 128, 64],
            Architecture::Wnn => &[512, 256, 128],
            Architecture::Dnn => &[2048, 1024, 512, 256, 128],
        }
    }

    /// Full layer list for a problem with `n` unknowns and `m` measurements.
    /// Complex problems regress the `2n` concatenated real and imaginary parts.
    pub fn dims(self, field: Field, n: usize, m: usize) -> Vec<usize> {
        let mut dims = vec![m];
        dims.extend_from_slice(self.hidden());
        dims.push(field.real_width(n));
        dims
    }
}

/// `Σ (d_in + 1) * d_out` over consecutive layer pairs.
pub fn count_parameters_for(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

#[derive(Debug, Clone, PartialEq)]
struct LayerSlot {
    d_in: usize,
    d_out: usize,
    w: Range<usize>,
    b: Range<usize>,
}

fn layout(dims: &[usize]) -> Vec<LayerSlot> {
    let mut at = 0;
    dims.windows(2)
        .map(|w| {
            let (d_in, d_out) = (w[0], w[1]);
            let slot = LayerSlot {
                d_in,
                d_out,
                w: at..at + d_in * d_out,
                b: at + d_in * d_out..at + d_in * d_out + d_out,
            };
            at = slot.b.end;
            slot
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    field: Field,
    dims: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    layers: Vec<LayerSlot>,
}

/// Scratch buffers reused across batches.
#[derive(Debug, Default)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::contract(
            "an MLP needs at least an input and an output layer",
        ));
    }
    if dims.contains(&0) {
        return Err(Error::contract("layer dimensions must be positive"));
    }
    Ok(())
}

/// `C = A B + beta C` for row-major `C` (`rows x cols`); `A` and `B` are
/// described by explicit strides so transposed views cost nothing.
#[allow(clippy::too_many_arguments)]
fn gemm(
    rows: usize,
    inner: usize,
    cols: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if rows == 0 || cols == 0 {
        return;
    }
    if inner > 0 {
        assert!(a.len() > (rows - 1) * rsa + (inner - 1) * csa);
        assert!(b.len() > (inner - 1) * rsb + (cols - 1) * csb);
    }
    assert!(c.len() >= rows * cols);
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            rows,
            inner,
            cols,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            cols as isize,
            1,
        );
    }
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(field: Field, dims: &[usize], seed: u64) -> Result<MlpModel> {
        check_dims(dims)?;
        let layers = layout(dims);
        let mut params = vec![0.0; layers.last().map_or(0, |l| l.b.end)];
        let mut rng = RngStream::new(seed, INIT_STREAM);
        for slot in &layers {
            let limit = (6.0 / (slot.d_in + slot.d_out) as f64).sqrt();
            for w in &mut params[slot.w.clone()] {
                *w = (2.0 * rng.uniform() - 1.0) * limit;
            }
        }
        Ok(MlpModel {
            field,
            dims: dims.to_vec(),
            activation: Activation::Relu,
            params,
            layers,
        })
    }

    /// Builds a model from explicit per-layer weights (`d_in x d_out`
    /// row-major) and biases.
    pub fn from_layers(
        field: Field,
        dims: &[usize],
        weights: &[Vec<f64>],
        biases: &[Vec<f64>],
    ) -> Result<MlpModel> {
        check_dims(dims)?;
        let layers = layout(dims);
        if weights.len() != layers.len() || biases.len() != layers.len() {
            return Err(Error::contract(
                "one weight and bias block per layer required",
            ));
        }
        let mut params = Vec::with_capacity(layers.last().map_or(0, |l| l.b.end));
        for ((slot, w), b) in layers.iter().zip(weights).zip(biases) {
            if w.len() != slot.d_in * slot.d_out || b.len() != slot.d_out {
                return Err(Error::contract(format!(
                    "layer {}x{} given {} weights and {} biases",
                    slot.d_in,
                    slot.d_out,
                    w.len(),
                    b.len()
                )));
            }
            params.extend_from_slice(w);
            params.extend_from_slice(b);
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("MLP parameters".into()));
        }
        Ok(MlpModel {
            field,
            dims: dims.to_vec(),
            activation: Activation::Relu,
            params,
            layers,
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn count_parameters(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].w.clone()]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].b.clone()]
    }

    pub(crate) fn weight_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.layers.iter().map(|l| l.w.clone())
    }

    /// Forward pass for one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::contract(format!(
                "model expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let mut ws = Workspace::default();
        Ok(self.forward_batch(input, 1, &mut ws).to_vec())
    }

    /// Forward pass for `rows` row-major inputs; returns the output block.
    pub fn forward_batch<'w>(
        &self,
        input: &[f64],
        rows: usize,
        ws: &'w mut Workspace,
    ) -> &'w [f64] {
        assert_eq!(input.len(), rows * self.input_dim(), "input block shape");
        let last = self.layers.len() - 1;
        ws.acts.resize_with(self.layers.len(), Vec::new);
        for (l, slot) in self.layers.iter().enumerate() {
            let (done, rest) = ws.acts.split_at_mut(l);
            let x: &[f64] = if l == 0 { input } else { &done[l - 1] };
            let z = &mut rest[0];
            z.clear();
            let bias = &self.params[slot.b.clone()];
            for _ in 0..rows {
                z.extend_from_slice(bias);
            }
            gemm(
                rows,
                slot.d_in,
                slot.d_out,
                x,
                (slot.d_in, 1),
                &self.params[slot.w.clone()],
                (slot.d_out, 1),
                1.0,
                z,
            );
            if l != last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        &ws.acts[last]
    }

    /// Regularization penalty over weights (biases excluded).
    pub fn penalty(&self, reg: Regularization, lambda: f64) -> f64 {
        if reg == Regularization::None || lambda == 0.0 {
            return 0.0;
        }
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for r in self.weight_ranges() {
            for &w in &self.params[r] {
                l1 += w.abs();
                l2 += w * w;
            }
        }
        let mut total = 0.0;
        if reg.has_l1() {
            total += lambda * l1;
        }
        if reg.has_l2() {
            total += lambda * l2;
        }
        total
    }

    /// Mean squared error over a batch plus penalty, with the gradient
    /// accumulated into `grads` (overwritten). Returns the loss.
    #[allow(clippy::too_many_arguments)]
    pub fn loss_and_grad_into(
        &self,
        inputs: &[f64],
        targets: &[f64],
        rows: usize,
        reg: Regularization,
        lambda: f64,
        ws: &mut Workspace,
        grads: &mut [f64],
    ) -> f64 {
        let d_out = self.output_dim();
        assert_eq!(targets.len(), rows * d_out, "target block shape");
        assert_eq!(grads.len(), self.params.len(), "gradient buffer shape");
        self.forward_batch(inputs, rows, ws);

        let last = self.layers.len() - 1;
        let scale = 2.0 / rows as f64;
        let mut data_loss = 0.0;
        ws.delta.clear();
        for (o, t) in ws.acts[last].iter().zip(targets) {
            let r = o - t;
            data_loss += r * r;
            ws.delta.push(scale * r);
        }
        data_loss /= rows as f64;

        for l in (0..self.layers.len()).rev() {
            let slot = &self.layers[l];
            let x: &[f64] = if l == 0 { inputs } else { &ws.acts[l - 1] };
            // dW = x^T delta
            gemm(
                slot.d_in,
                rows,
                slot.d_out,
                x,
                (1, slot.d_in),
                &ws.delta,
                (slot.d_out, 1),
                0.0,
                &mut grads[slot.w.clone()],
            );
            let db = &mut grads[slot.b.clone()];
            db.iter_mut().for_each(|v| *v = 0.0);
            for row in ws.delta.chunks_exact(slot.d_out) {
                db.iter_mut().zip(row).for_each(|(g, d)| *g += d);
            }
            if l > 0 {
                // delta_prev = delta W^T, masked by the ReLU derivative.
                ws.delta_prev.resize(rows * slot.d_in, 0.0);
                gemm(
                    rows,
                    slot.d_out,
                    slot.d_in,
                    &ws.delta,
                    (slot.d_out, 1),
                    &self.params[slot.w.clone()],
                    (1, slot.d_out),
                    0.0,
                    &mut ws.delta_prev,
                );
                for (d, a) in ws.delta_prev.iter_mut().zip(&ws.acts[l - 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
            }
        }

        if reg != Regularization::None && lambda != 0.0 {
            for r in self.weight_ranges() {
                for (g, &w) in grads[r.clone()].iter_mut().zip(&self.params[r]) {
                    if reg.has_l1() {
                        *g += lambda * sign(w);
                    }
                    if reg.has_l2() {
                        *g += 2.0 * lambda * w;
                    }
                }
            }
        }
        data_loss + self.penalty(reg, lambda)
    }

    /// Loss and gradient for a batch of row-major inputs and targets.
    ///
    /// Loss is `(1/B) Σ ||f(y_b) - x_b||^2` plus the weight penalty
    /// (`λ Σ|w|`, `λ Σw²`, or both).
    pub fn loss_and_grad(
        &self,
        inputs: &[f64],
        targets: &[f64],
        reg: Regularization,
        lambda: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let rows = inputs.len() / self.input_dim();
        if rows == 0 || inputs.len() != rows * self.input_dim() {
            return Err(Error::contract("input block is empty or ragged"));
        }
        if targets.len() != rows * self.output_dim() {
            return Err(Error::contract(format!(
                "expected {} target values, got {}",
                rows * self.output_dim(),
                targets.len()
            )));
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut ws = Workspace::default();
        let loss = self.loss_and_grad_into(inputs, targets, rows, reg, lambda, &mut ws, &mut grads);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch: None,
                batch: 0,
                loss,
            });
        }
        Ok((loss, grads))
    }

    /// Mean squared error (no penalty) over a row-major block, evaluated in chunks.
    pub fn mean_squared_error(&self, inputs: &[f64], targets: &[f64], ws: &mut Workspace) -> f64 {
        const CHUNK: usize = 1024;
        let (d_in, d_out) = (self.input_dim(), self.output_dim());
        let rows = inputs.len() / d_in;
        if rows == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for (xin, tgt) in inputs
            .chunks(CHUNK * d_in)
            .zip(targets.chunks(CHUNK * d_out))
        {
            let out = self.forward_batch(xin, xin.len() / d_in, ws);
            total += out
                .iter()
                .zip(tgt)
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>();
        }
        total / rows as f64
    }

    /// Rewrites the first layer so that the model applied to raw inputs
    /// equals the current model applied to `(input - mean) / std`.
    pub(crate) fn fold_input_standardization(&mut self, mean: &[f64], std: &[f64]) {
        let slot = self.layers[0].clone();
        for k in 0..slot.d_in {
            for j in 0..slot.d_out {
                let w = &mut self.params[slot.w.start + k * slot.d_out + j];
                *w /= std[k];
                let shift = *w * mean[k];
                self.params[slot.b.start + j] -= shift;
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// GPRM checkpoint: magic, version u32, field u8, dim count u16, dims
    /// u32 each, then per layer the `d_in x d_out` weights and `d_out` biases.
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&[field_tag(self.field)])?;
        w.write_all(&(self.dims.len() as u16).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        write_f64s(w, &self.params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MlpModel> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        MlpModel::read_from(&mut BufReader::new(file))
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<MlpModel> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, "magic")?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::BadMagic {
                expected: CHECKPOINT_MAGIC,
                found: magic,
            });
        }
        let version = read_u32(r, "version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let mut tag = [0u8; 1];
        read_exact(r, &mut tag, "field")?;
        let field = parse_field_tag(tag[0])?;
        let count = read_u16(r, "layer count")? as usize;
        let dims = (0..count)
            .map(|i| read_u32(r, &format!("dim {i}")).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        check_dims(&dims).map_err(|e| Error::Malformed(e.to_string()))?;
        let layers = layout(&dims);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (l, slot) in layers.iter().enumerate() {
            weights.push(read_f64s(
                r,
                slot.d_in * slot.d_out,
                &format!("layer {l} weights"),
            )?);
            biases.push(read_f64s(r, slot.d_out, &format!("layer {l} biases"))?);
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)
            .map_err(|e| Error::Malformed(e.to_string()))?
            != 0
        {
            return Err(Error::Malformed("trailing bytes after last layer".into()));
        }
        MlpModel::from_layers(field, &dims, &weights, &biases)
    }
}

fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}
