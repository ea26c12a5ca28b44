//! Gaussian phase-retrieval forward maps `y = |Ax|^2`.

use crate::error::{Error, Result};
use crate::numerics::{matvec, Field, Matrix, RealVec, RngStream, Signal};

/// RNG stream reserved for drawing sensing matrices.
pub const SENSING_STREAM: u64 = 0;

/// Measurement operator `A` of shape `m x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    field: Field,
    m: usize,
    n: usize,
    a: Matrix,
    seed: u64,
}

/// Draws an iid Gaussian sensing matrix.
///
/// Real entries are `N(0, 1)`. Complex entries are `CN(0, 1)`: independent
/// `N(0, 1/2)` real and imaginary parts, real plane drawn first.
pub fn make_sensing(
    field: Field,
    n: usize,
    m: usize,
    rng: &mut RngStream,
) -> Result<SensingMatrix> {
    if n == 0 || m == 0 {
        return Err(Error::contract(format!(
            "make_sensing: need m, n >= 1 (got m={m}, n={n})"
        )));
    }
    let len = m * n;
    let a = match field {
        Field::Real => Matrix::real(m, n, (0..len).map(|_| rng.normal()).collect())?,
        Field::Complex => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let re = (0..len).map(|_| s * rng.normal()).collect();
            let im = (0..len).map(|_| s * rng.normal()).collect();
            Matrix::complex(m, n, re, im)?
        }
    };
    Ok(SensingMatrix {
        field,
        m,
        n,
        a,
        seed: rng.seed(),
    })
}

impl SensingMatrix {
    /// Regenerates the matrix determined by `(field, n, m, seed)`.
    pub fn from_seed(field: Field, n: usize, m: usize, seed: u64) -> Result<Self> {
        make_sensing(field, n, m, &mut RngStream::new(seed, SENSING_STREAM))
    }

    /// Wraps an explicit matrix. `seed` is carried only as metadata.
    pub fn from_matrix(a: Matrix, seed: u64) -> Self {
        SensingMatrix {
            field: a.field(),
            m: a.rows(),
            n: a.cols(),
            a,
            seed,
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Elementwise squared modulus of `Ax`.
pub fn forward(s: &SensingMatrix, x: &Signal) -> Result<RealVec> {
    if x.field() != s.field {
        return Err(Error::contract(format!(
            "forward: {} signal given to {} sensing matrix",
            x.field(),
            s.field
        )));
    }
    let y = match matvec(&s.a, x)? {
        Signal::Real(v) => v.as_slice().iter().map(|v| v * v).collect(),
        Signal::Complex(v) => v
            .re()
            .iter()
            .zip(v.im())
            .map(|(a, b)| a * a + b * b)
            .collect(),
    };
    Ok(RealVec::from_raw(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_unit_ball, CplxVec};

    fn max_abs_diff(a: &RealVec, b: &RealVec) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn max_abs(a: &RealVec) -> f64 {
        a.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn random_real(rng: &mut RngStream, n: usize) -> Signal {
        Signal::Real(sample_unit_ball(rng, n).unwrap())
    }

    fn random_complex(rng: &mut RngStream, n: usize) -> Signal {
        let v = sample_unit_ball(rng, 2 * n).unwrap();
        Signal::Complex(CplxVec::from_concat(v.as_slice()).unwrap())
    }

    #[test]
    fn sensing_is_deterministic() {
        let a = SensingMatrix::from_seed(Field::Real, 5, 20, 42).unwrap();
        let b = SensingMatrix::from_seed(Field::Real, 5, 20, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matrix().re().len(), 100);
    }

    #[test]
    fn real_sensing_mean_near_zero() {
        let s = SensingMatrix::from_seed(Field::Real, 5, 20, 42).unwrap();
        let mean = s.matrix().re().iter().sum::<f64>() / 100.0;
        assert!(mean.abs() <= 0.6, "mean {mean}");
    }

    #[test]
    fn complex_sensing_unit_power() {
        let s = SensingMatrix::from_seed(Field::Complex, 5, 20, 42).unwrap();
        let im = s.matrix().im().unwrap();
        let power = s
            .matrix()
            .re()
            .iter()
            .zip(im)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            / 100.0;
        assert!((power - 1.0).abs() <= 0.35, "power {power}");
    }

    #[test]
    fn scalar_examples() {
        let s = SensingMatrix::from_matrix(Matrix::real(1, 1, vec![2.0]).unwrap(), 0);
        let y = forward(&s, &Signal::Real(RealVec::new(vec![3.0]).unwrap())).unwrap();
        assert_eq!(y.as_slice(), &[36.0]);

        let s = SensingMatrix::from_matrix(Matrix::complex(1, 1, vec![1.0], vec![0.0]).unwrap(), 0);
        let x = Signal::Complex(CplxVec::new(vec![0.0], vec![2.0]).unwrap());
        assert_eq!(forward(&s, &x).unwrap().as_slice(), &[4.0]);
    }

    #[test]
    fn field_mismatch_is_rejected() {
        let s = SensingMatrix::from_seed(Field::Complex, 2, 8, 1).unwrap();
        let x = Signal::Real(RealVec::new(vec![1.0, 2.0]).unwrap());
        assert!(matches!(forward(&s, &x), Err(Error::Contract(_))));
    }

    #[test]
    fn sign_invariance_is_bit_exact() {
        let mut rng = RngStream::new(3, 9);
        for trial in 0..1000u64 {
            let n = 1 + (trial % 8) as usize;
            let s = SensingMatrix::from_seed(Field::Real, n, 4 * n, trial).unwrap();
            let x = random_real(&mut rng, n);
            let Signal::Real(v) = &x else { unreachable!() };
            let neg = Signal::Real(v.neg());
            assert_eq!(forward(&s, &x).unwrap(), forward(&s, &neg).unwrap());
        }
    }

    #[test]
    fn phase_invariance() {
        let mut rng = RngStream::new(4, 9);
        for trial in 0..1000u64 {
            let n = 1 + (trial % 8) as usize;
            let s = SensingMatrix::from_seed(Field::Complex, n, 4 * n, trial).unwrap();
            let x = random_complex(&mut rng, n);
            let theta = std::f64::consts::TAU * rng.uniform();
            let Signal::Complex(v) = &x else {
                unreachable!()
            };
            let shifted = Signal::Complex(v.phase_shift(theta));
            let y = forward(&s, &x).unwrap();
            let ys = forward(&s, &shifted).unwrap();
            assert!(max_abs_diff(&y, &ys) <= 1e-10 * max_abs(&y));
        }
    }

    #[test]
    fn nonnegative_and_quadratic_scaling() {
        let mut rng = RngStream::new(8, 1);
        for trial in 0..200u64 {
            let field = if trial % 2 == 0 {
                Field::Real
            } else {
                Field::Complex
            };
            let n = 1 + (trial % 6) as usize;
            let s = SensingMatrix::from_seed(field, n, 4 * n, trial).unwrap();
            let x = match field {
                Field::Real => random_real(&mut rng, n),
                Field::Complex => random_complex(&mut rng, n),
            };
            let c = 4.0 * rng.uniform() - 2.0;
            let scaled = Signal::from_real_encoding(
                field,
                &x.to_real_encoding()
                    .iter()
                    .map(|v| c * v)
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let y = forward(&s, &x).unwrap();
            assert!(y.as_slice().iter().all(|&v| v >= 0.0));
            let yc = forward(&s, &scaled).unwrap();
            let scale = c * c * max_abs(&y);
            for (a, b) in y.as_slice().iter().zip(yc.as_slice()) {
                assert!((c * c * a - b).abs() <= 1e-12 * scale);
            }
        }
    }
}
