//! Canonicalizers that pick one representative per symmetry orbit.
//!
//! Real phase retrieval only sees `x` up to sign. The representative keeps
//! the last nonzero coordinate positive. Complex phase retrieval only sees
//! `x` up to a global phase. The representative rotates the first nonzero
//! coordinate onto the positive real axis.
//!
//! Inputs whose deciding coordinate (last for real, first for complex) is
//! zero fall back to the next coordinate inward, so the rule stays
//! deterministic on the measure-zero boundary. The zero vector is a fixed
//! point.

use std::f64::consts::TAU;

use crate::numerics::{CplxVec, RealVec, Signal};

/// Symmetry element that maps an input onto its representative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    SignFlip,
    /// Multiplication by `e^{iθ}`, `θ ∈ [0, 2π)`.
    Phase(f64),
}

impl Transform {
    pub fn is_identity(&self) -> bool {
        match *self {
            Transform::Identity => true,
            Transform::SignFlip => false,
            Transform::Phase(theta) => theta == 0.0,
        }
    }

    /// Applies the transform to a signal of the matching field.
    pub fn apply(&self, x: &Signal) -> Signal {
        match (*self, x) {
            (Transform::Identity, _) => x.clone(),
            (Transform::SignFlip, Signal::Real(v)) => Signal::Real(v.neg()),
            (Transform::Phase(theta), Signal::Complex(v)) => Signal::Complex(v.phase_shift(theta)),
            (t, x) => panic!("transform {t:?} does not act on {} signals", x.field()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonResult {
    pub x_canon: Signal,
    pub transform: Transform,
    /// True when the deciding coordinate was zero and the rule had to recurse.
    pub was_boundary: bool,
}

pub fn canonicalize_real(x: &RealVec) -> CanonResult {
    let data = x.as_slice();
    let Some(k) = data.iter().rposition(|&v| v != 0.0) else {
        // Signed zeros collapse to +0 so that x and -x agree bit for bit.
        return CanonResult {
            x_canon: Signal::Real(RealVec::from_raw(vec![0.0; data.len()])),
            transform: Transform::Identity,
            was_boundary: true,
        };
    };
    let was_boundary = k + 1 != data.len();
    if data[k] > 0.0 {
        CanonResult {
            x_canon: Signal::Real(x.clone()),
            transform: Transform::Identity,
            was_boundary,
        }
    } else {
        CanonResult {
            x_canon: Signal::Real(x.neg()),
            transform: Transform::SignFlip,
            was_boundary,
        }
    }
}

pub fn canonicalize_complex(x: &CplxVec) -> CanonResult {
    let Some(k) = (0..x.len()).find(|&k| x.get(k) != (0.0, 0.0)) else {
        return CanonResult {
            x_canon: Signal::Complex(CplxVec::from_raw(vec![0.0; x.len()], vec![0.0; x.len()])),
            transform: Transform::Phase(0.0),
            was_boundary: true,
        };
    };
    let was_boundary = k != 0;
    let (re, im) = x.get(k);
    let theta = reduce_angle(-im.atan2(re));
    if theta == 0.0 {
        return CanonResult {
            x_canon: Signal::Complex(x.clone()),
            transform: Transform::Phase(0.0),
            was_boundary,
        };
    }
    let rotated = x.phase_shift(theta);
    // Pin the deciding coordinate exactly onto the positive real axis.
    let mut out_re = rotated.re().to_vec();
    let mut out_im = rotated.im().to_vec();
    out_re[k] = re.hypot(im);
    out_im[k] = 0.0;
    CanonResult {
        x_canon: Signal::Complex(CplxVec::from_raw(out_re, out_im)),
        transform: Transform::Phase(theta),
        was_boundary,
    }
}

/// Dispatches on the signal's field.
pub fn canonicalize(x: &Signal) -> CanonResult {
    match x {
        Signal::Real(v) => canonicalize_real(v),
        Signal::Complex(v) => canonicalize_complex(v),
    }
}

/// Membership test for the representative set (extended to the boundary).
pub fn is_representative(x: &Signal) -> bool {
    match x {
        Signal::Real(v) => match v.as_slice().iter().rev().find(|&&c| c != 0.0) {
            Some(&c) => c > 0.0,
            None => true,
        },
        Signal::Complex(v) => match (0..v.len()).map(|k| v.get(k)).find(|&c| c != (0.0, 0.0)) {
            Some((re, im)) => im == 0.0 && re > 0.0,
            None => true,
        },
    }
}

fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU || r == 0.0 {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn real(v: &[f64]) -> RealVec {
        RealVec::new(v.to_vec()).unwrap()
    }

    fn cplx(re: &[f64], im: &[f64]) -> CplxVec {
        CplxVec::new(re.to_vec(), im.to_vec()).unwrap()
    }

    fn assert_close(a: &Signal, b: &Signal, tol: f64) {
        let (a, b) = (a.to_real_encoding(), b.to_real_encoding());
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn real_examples() {
        let r = canonicalize_real(&real(&[1.0, 2.0, 3.0]));
        assert_eq!(r.x_canon, Signal::Real(real(&[1.0, 2.0, 3.0])));
        assert_eq!(r.transform, Transform::Identity);
        assert!(!r.was_boundary);

        let r = canonicalize_real(&real(&[1.0, 2.0, -3.0]));
        assert_eq!(r.x_canon, Signal::Real(real(&[-1.0, -2.0, 3.0])));
        assert_eq!(r.transform, Transform::SignFlip);

        let r = canonicalize_real(&real(&[-2.0, 0.0]));
        assert_eq!(r.x_canon, Signal::Real(real(&[2.0, 0.0])));
        assert_eq!(r.transform, Transform::SignFlip);
        assert!(r.was_boundary);
    }

    #[test]
    fn complex_examples() {
        let r = canonicalize_complex(&cplx(&[0.0, 1.0], &[1.0, 0.0]));
        assert_close(
            &r.x_canon,
            &Signal::Complex(cplx(&[1.0, 0.0], &[0.0, -1.0])),
            1e-15,
        );
        let Transform::Phase(theta) = r.transform else {
            panic!()
        };
        assert!((theta - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert!(!r.was_boundary);

        let x = cplx(&[3.0, 0.0], &[0.0, 5.0]);
        let r = canonicalize_complex(&x);
        assert_eq!(r.x_canon, Signal::Complex(x));
        assert_eq!(r.transform, Transform::Phase(0.0));

        let r = canonicalize_complex(&cplx(&[0.0, 0.0], &[0.0, 2.0]));
        assert_close(
            &r.x_canon,
            &Signal::Complex(cplx(&[0.0, 2.0], &[0.0, 0.0])),
            1e-15,
        );
        let Transform::Phase(theta) = r.transform else {
            panic!()
        };
        assert!((theta - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert!(r.was_boundary);
    }

    #[test]
    fn zero_vector_is_fixed() {
        let r = canonicalize_real(&real(&[0.0, 0.0, 0.0]));
        assert!(r.was_boundary);
        assert!(r.transform.is_identity());
        let r = canonicalize_complex(&cplx(&[0.0; 2], &[0.0; 2]));
        assert!(r.was_boundary);
        assert!(r.transform.is_identity());
        assert!(is_representative(&r.x_canon));
    }

    #[test]
    fn representative_predicate() {
        assert!(is_representative(&Signal::Real(real(&[1.0, 2.0, 3.0]))));
        assert!(!is_representative(&Signal::Real(real(&[1.0, 2.0, -3.0]))));
        assert!(is_representative(&Signal::Complex(cplx(
            &[0.0, 2.0],
            &[0.0, 0.0]
        ))));
        assert!(!is_representative(&Signal::Complex(cplx(
            &[1.0, 2.0],
            &[1e-300, 0.0]
        ))));
        assert!(!is_representative(&Signal::Complex(cplx(&[-1.0], &[0.0]))));
    }

    #[test]
    fn transform_reproduces_canonical_form() {
        let x = Signal::Complex(cplx(&[0.3, -0.2], &[-0.7, 0.1]));
        let r = canonicalize(&x);
        assert_close(&r.transform.apply(&x), &r.x_canon, 1e-12);
        let x = Signal::Real(real(&[0.3, -0.2]));
        let r = canonicalize(&x);
        assert_eq!(r.transform.apply(&x), r.x_canon);
    }
}
