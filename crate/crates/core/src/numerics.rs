//! Dense containers, complex-as-pairs arithmetic and deterministic sampling.
//!
//! Everything is `f64`. Complex data is stored as separate real and
//! imaginary planes rather than interleaved pairs, which is also how it is
//! laid out on disk.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Scalar field of a signal or operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }

    /// Width of the real encoding of an `n`-dimensional signal.
    pub fn real_width(self, n: usize) -> usize {
        match self {
            Field::Real => n,
            Field::Complex => 2 * n,
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(Error::Usage(format!("unknown field {other:?}"))),
        }
    }
}

fn check_finite(data: &[f64], what: &str) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// A nonempty vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVec(Vec<f64>);

impl RealVec {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::contract("RealVec must be nonempty"));
        }
        check_finite(&data, "RealVec")?;
        Ok(RealVec(data))
    }

    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        debug_assert!(!data.is_empty());
        RealVec(data)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn neg(&self) -> RealVec {
        RealVec(self.0.iter().map(|v| -v).collect())
    }
}

impl std::ops::Index<usize> for RealVec {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A nonempty complex vector held as equal-length real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct CplxVec {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl CplxVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::contract(format!(
                "CplxVec planes differ in length ({} vs {})",
                re.len(),
                im.len()
            )));
        }
        if re.is_empty() {
            return Err(Error::contract("CplxVec must be nonempty"));
        }
        check_finite(&re, "CplxVec (re)")?;
        check_finite(&im, "CplxVec (im)")?;
        Ok(CplxVec { re, im })
    }

    pub(crate) fn from_raw(re: Vec<f64>, im: Vec<f64>) -> Self {
        debug_assert_eq!(re.len(), im.len());
        CplxVec { re, im }
    }

    /// Builds from a concatenated `[re; im]` real encoding.
    pub fn from_concat(data: &[f64]) -> Result<Self> {
        if !data.len().is_multiple_of(2) {
            return Err(Error::contract(
                "concatenated complex vector has odd length",
            ));
        }
        let n = data.len() / 2;
        CplxVec::new(data[..n].to_vec(), data[n..].to_vec())
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn get(&self, k: usize) -> (f64, f64) {
        (self.re[k], self.im[k])
    }

    pub fn norm_sq(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum()
    }

    /// Multiplies every entry by `e^{iθ}`.
    pub fn phase_shift(&self, theta: f64) -> CplxVec {
        let (s, c) = theta.sin_cos();
        let (re, im) = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&a, &b)| (a * c - b * s, a * s + b * c))
            .unzip();
        CplxVec { re, im }
    }

    /// Concatenated `[re; im]` encoding of length `2n`.
    pub fn to_concat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.len());
        out.extend_from_slice(&self.re);
        out.extend_from_slice(&self.im);
        out
    }
}

/// A real or complex signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Real(RealVec),
    Complex(CplxVec),
}

impl Signal {
    pub fn field(&self) -> Field {
        match self {
            Signal::Real(_) => Field::Real,
            Signal::Complex(_) => Field::Complex,
        }
    }

    /// Dimension `n` (number of real or complex entries).
    pub fn len(&self) -> usize {
        match self {
            Signal::Real(v) => v.len(),
            Signal::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            Signal::Real(v) => v.norm_sq(),
            Signal::Complex(v) => v.norm_sq(),
        }
    }

    /// Real encoding: the vector itself, or `[re; im]` for complex signals.
    pub fn to_real_encoding(&self) -> Vec<f64> {
        match self {
            Signal::Real(v) => v.as_slice().to_vec(),
            Signal::Complex(v) => v.to_concat(),
        }
    }

    pub fn from_real_encoding(field: Field, data: &[f64]) -> Result<Signal> {
        match field {
            Field::Real => Ok(Signal::Real(RealVec::new(data.to_vec())?)),
            Field::Complex => Ok(Signal::Complex(CplxVec::from_concat(data)?)),
        }
    }
}

/// Row-major dense matrix; complex matrices carry a second (imaginary) plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Option<Vec<f64>>,
}

impl Matrix {
    pub fn real(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::check_plane(rows, cols, &data)?;
        Ok(Matrix {
            rows,
            cols,
            re: data,
            im: None,
        })
    }

    pub fn complex(rows: usize, cols: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        Self::check_plane(rows, cols, &re)?;
        Self::check_plane(rows, cols, &im)?;
        Ok(Matrix {
            rows,
            cols,
            re,
            im: Some(im),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut re = vec![0.0; n * n];
        for i in 0..n {
            re[i * n + i] = 1.0;
        }
        Matrix {
            rows: n,
            cols: n,
            re,
            im: None,
        }
    }

    fn check_plane(rows: usize, cols: usize, data: &[f64]) -> Result<()> {
        if rows == 0 || cols == 0 {
            return Err(Error::contract("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "matrix plane has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        check_finite(data, "Matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> Field {
        if self.im.is_some() {
            Field::Complex
        } else {
            Field::Real
        }
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> Option<&[f64]> {
        self.im.as_deref()
    }
}

/// Matrix-vector product for matching fields.
pub fn matvec(a: &Matrix, x: &Signal) -> Result<Signal> {
    if a.cols != x.len() {
        return Err(Error::contract(format!(
            "matvec: matrix has {} columns but vector has length {}",
            a.cols,
            x.len()
        )));
    }
    match (x, &a.im) {
        (Signal::Real(x), None) => {
            let out =
                a.re.chunks_exact(a.cols)
                    .map(|row| row.iter().zip(x.as_slice()).map(|(r, v)| r * v).sum())
                    .collect();
            Ok(Signal::Real(RealVec::from_raw(out)))
        }
        (Signal::Complex(x), Some(im)) => {
            let mut out_re = Vec::with_capacity(a.rows);
            let mut out_im = Vec::with_capacity(a.rows);
            for (ar, ai) in a.re.chunks_exact(a.cols).zip(im.chunks_exact(a.cols)) {
                let mut sr = 0.0;
                let mut si = 0.0;
                for k in 0..a.cols {
                    sr += ar[k] * x.re[k] - ai[k] * x.im[k];
                    si += ar[k] * x.im[k] + ai[k] * x.re[k];
                }
                out_re.push(sr);
                out_im.push(si);
            }
            Ok(Signal::Complex(CplxVec::from_raw(out_re, out_im)))
        }
        _ => Err(Error::contract(format!(
            "matvec: {} matrix applied to {} vector",
            a.field(),
            x.field()
        ))),
    }
}

/// Deterministic random stream keyed by `(seed, stream_id)`.
///
/// Backed by the ChaCha20 block function, which is counter based and gives
/// the same sequence on every platform. Distinct stream ids select disjoint
/// keystreams under the same seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    core: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut core = ChaCha20Rng::seed_from_u64(seed);
        core.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            core,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Uniform draw on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.core.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.core.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's nearly-divisionless method).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let wide = (self.core.next_u64() as u128) * (bound as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Standard normal draw via Box–Muller; the sine branch is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// `count` iid standard normal draws.
pub fn gaussian(rng: &mut RngStream, count: usize) -> Result<RealVec> {
    if count == 0 {
        return Err(Error::contract("gaussian: count must be positive"));
    }
    Ok(RealVec::from_raw(
        (0..count).map(|_| rng.normal()).collect(),
    ))
}

/// Uniform point in the closed unit ball of `R^dim`.
pub fn sample_unit_ball(rng: &mut RngStream, dim: usize) -> Result<RealVec> {
    if dim == 0 {
        return Err(Error::contract("sample_unit_ball: dim must be positive"));
    }
    let mut dir: Vec<f64>;
    let mut norm;
    loop {
        dir = (0..dim).map(|_| rng.normal()).collect();
        norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            break;
        }
    }
    let radius = rng.uniform().powf(1.0 / dim as f64);
    let scale = radius / norm;
    dir.iter_mut().for_each(|v| *v *= scale);
    // Guard the last ulp: rounding can push the norm a hair above one.
    let out_norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if out_norm > 1.0 {
        dir.iter_mut().for_each(|v| *v /= out_norm);
    }
    Ok(RealVec::from_raw(dir))
}
