//! Randomized property suites. Each returns `Err` with a description of the
//! first counterexample, so they can back both `#[test]`s and the
//! acceptance report.

use std::f64::consts::TAU;

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use symbreak::dataset::{generate, Dataset};
use symbreak::forward_model::{forward, SensingMatrix};
use symbreak::learners::{KnnModel, MlpModel, Regularization};
use symbreak::metrics::epsilon_complex;
use symbreak::symmetry::{
    canonicalize, canonicalize_complex, canonicalize_real, is_representative, Transform,
};
use symbreak::{CplxVec, Field, RealVec, RngStream, Signal};

use super::oracles::{central_differences, kink_margin, knn_full_sort, naive_loss, PhaseGrid};

pub type Outcome = Result<(), String>;

pub const CASES: u32 = 10_000;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

/// Mostly uniform values with some exact zeros, over several magnitudes.
fn coord() -> impl Strategy<Value = f64> + Clone {
    prop_oneof![6 => -1.0f64..1.0, 1 => Just(0.0)]
}

fn scaled(v: Vec<f64>, exp: i32) -> Vec<f64> {
    v.into_iter().map(|c| c * 10f64.powi(exp)).collect()
}

pub fn real_signal() -> impl Strategy<Value = RealVec> {
    (vec(coord(), 1..=10), -3i32..=3).prop_map(|(v, e)| RealVec::new(scaled(v, e)).unwrap())
}

pub fn complex_signal() -> impl Strategy<Value = CplxVec> {
    let entry = prop_oneof![
        6 => (-1.0f64..1.0, -1.0f64..1.0),
        1 => Just((0.0, 0.0)),
        1 => (-1.0f64..1.0).prop_map(|r| (r, 0.0)),
        1 => (-1.0f64..1.0).prop_map(|i| (0.0, i)),
    ];
    (vec(entry, 1..=10), -3i32..=3).prop_map(|(v, e)| {
        let s = 10f64.powi(e);
        CplxVec::new(
            v.iter().map(|p| p.0 * s).collect(),
            v.iter().map(|p| p.1 * s).collect(),
        )
        .unwrap()
    })
}

fn pairs(x: &CplxVec) -> Vec<(f64, f64)> {
    (0..x.len()).map(|k| x.get(k)).collect()
}

fn encoding_bits(s: &Signal) -> Vec<u64> {
    s.to_real_encoding().iter().map(|v| v.to_bits()).collect()
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Hand-picked inputs on or near the boundary of the representative set.
pub fn crafted_real() -> Vec<RealVec> {
    let cases: &[&[f64]] = &[
        &[0.0],
        &[-0.0],
        &[0.0, 0.0, 0.0],
        &[-2.0, 0.0],
        &[0.0, -1.0, 0.0, 0.0],
        &[0.0, 0.0, 3.0],
        &[5.0, 0.0, 0.0],
        &[-5.0, -0.0],
        &[1e-300, 0.0],
        &[-5e-324],
        &[1.0, 2.0, -3.0],
        &[0.0, 0.0, -1e-310],
    ];
    cases
        .iter()
        .map(|c| RealVec::new(c.to_vec()).unwrap())
        .collect()
}

pub fn crafted_complex() -> Vec<CplxVec> {
    let cases: &[(&[f64], &[f64])] = &[
        (&[0.0], &[0.0]),
        (&[0.0, 0.0], &[0.0, 2.0]),
        (&[0.0, 1.0], &[1.0, 0.0]),
        (&[0.0, 0.0, 0.0], &[0.0, 0.0, -1.0]),
        (&[-1.0, 0.0], &[0.0, 0.0]),
        (&[-1.0, 3.0], &[-0.0, 1.0]),
        (&[0.0, -0.0, 4.0], &[-0.0, 0.0, 0.0]),
        (&[3.0, 0.0], &[0.0, 5.0]),
        (&[5e-324, 1.0], &[5e-324, 0.0]),
        (&[0.0, -1e-300], &[0.0, -1e-300]),
        (&[1e-310, 0.0], &[-1e-310, 0.0]),
    ];
    cases
        .iter()
        .map(|(r, i)| CplxVec::new(r.to_vec(), i.to_vec()).unwrap())
        .collect()
}

fn idempotent(x: &Signal) -> Result<(), TestCaseError> {
    let first = canonicalize(x);
    let again = canonicalize(&first.x_canon);
    prop_assert!(
        again.transform.is_identity(),
        "second pass applied {:?} to {:?}",
        again.transform,
        first.x_canon
    );
    prop_assert_eq!(encoding_bits(&again.x_canon), encoding_bits(&first.x_canon));
    // The recorded transform reproduces the output.
    let replay = first.transform.apply(x).to_real_encoding();
    let want = first.x_canon.to_real_encoding();
    prop_assert!(
        l2(&replay, &want) <= 1e-12 * norm(&want).max(f64::MIN_POSITIVE) || replay == want
    );
    if let Transform::Phase(t) = first.transform {
        prop_assert!((0.0..TAU).contains(&t));
    }
    Ok(())
}

pub fn canonicalizer_idempotence() -> Outcome {
    check(CASES, real_signal(), |x| idempotent(&Signal::Real(x)))?;
    check(CASES, complex_signal(), |x| idempotent(&Signal::Complex(x)))?;
    for x in crafted_real() {
        idempotent(&Signal::Real(x)).map_err(|e| e.to_string())?;
    }
    for x in crafted_complex() {
        idempotent(&Signal::Complex(x)).map_err(|e| e.to_string())?;
    }
    Ok(())
}

pub fn orbit_invariance() -> Outcome {
    check(CASES, real_signal(), |x| {
        let a = canonicalize_real(&x).x_canon;
        let b = canonicalize_real(&x.neg()).x_canon;
        prop_assert_eq!(encoding_bits(&a), encoding_bits(&b));
        Ok(())
    })?;
    check(CASES, (complex_signal(), 0.0..TAU), |(x, theta)| {
        let a = canonicalize_complex(&x).x_canon.to_real_encoding();
        let b = canonicalize_complex(&x.phase_shift(theta))
            .x_canon
            .to_real_encoding();
        let bound = 1e-9 * x.norm_sq().sqrt();
        prop_assert!(l2(&a, &b) <= bound, "distance {} > {}", l2(&a, &b), bound);
        Ok(())
    })
}

pub fn representativeness() -> Outcome {
    check(CASES, real_signal(), |x| {
        prop_assert!(is_representative(&canonicalize_real(&x).x_canon));
        Ok(())
    })?;
    check(CASES, complex_signal(), |x| {
        prop_assert!(is_representative(&canonicalize_complex(&x).x_canon));
        Ok(())
    })?;
    for x in crafted_real() {
        if !is_representative(&canonicalize_real(&x).x_canon) {
            return Err(format!(
                "crafted real {:?} not mapped into the representative set",
                x.as_slice()
            ));
        }
    }
    for x in crafted_complex() {
        if !is_representative(&canonicalize_complex(&x).x_canon) {
            return Err(format!(
                "crafted complex {:?}/{:?} not mapped into the representative set",
                x.re(),
                x.im()
            ));
        }
    }
    Ok(())
}

fn dense_real(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    vec(prop_oneof![-1.0f64..-0.01, 0.01f64..1.0], n)
}

/// Distinct representatives are never related by a symmetry, while two
/// members of one orbit land on the same representative.
pub fn smallestness(complex_grid: usize) -> Outcome {
    let real_pair =
        (1usize..=10).prop_flat_map(|n| (dense_real(n..=n), dense_real(n..=n), any::<bool>()));
    check(CASES, real_pair, |(a, b, same_orbit)| {
        let x = RealVec::new(a).unwrap();
        let y = if same_orbit {
            x.neg()
        } else {
            RealVec::new(b).unwrap()
        };
        let u = canonicalize_real(&x).x_canon.to_real_encoding();
        let v = canonicalize_real(&y).x_canon.to_real_encoding();
        let hit = [1.0, -1.0]
            .iter()
            .any(|s| l2(&u.iter().map(|c| s * c).collect::<Vec<_>>(), &v) <= 1e-9);
        if same_orbit {
            prop_assert_eq!(u, v);
        } else {
            prop_assert!(!hit, "{:?} and {:?} are related by a sign", u, v);
        }
        Ok(())
    })?;

    let grid = PhaseGrid::new(complex_grid);
    let cplx_pair = (1usize..=10).prop_flat_map(|n| {
        (
            dense_real(2 * n..=2 * n),
            dense_real(2 * n..=2 * n),
            0.0..TAU,
            any::<bool>(),
        )
    });
    check(CASES, cplx_pair, |(a, b, phi, same_orbit)| {
        let x = CplxVec::from_concat(&a).unwrap();
        let y = if same_orbit {
            x.phase_shift(phi)
        } else {
            CplxVec::from_concat(&b).unwrap()
        };
        let (Signal::Complex(u), Signal::Complex(v)) = (
            canonicalize_complex(&x).x_canon,
            canonicalize_complex(&y).x_canon,
        ) else {
            unreachable!()
        };
        let d = grid.min_sq_distance(&pairs(&u), &pairs(&v)).sqrt();
        if same_orbit {
            prop_assert!(
                d <= 1e-9 * x.norm_sq().sqrt(),
                "same-orbit representatives differ by {}",
                d
            );
        } else {
            prop_assert!(
                d > 1e-9,
                "distinct representatives related by a grid phase (distance {})",
                d
            );
        }
        Ok(())
    })
}

pub fn forward_consistency() -> Outcome {
    let case = (
        any::<bool>(),
        1usize..=8,
        any::<u64>(),
        vec(coord(), 16),
        -3i32..=3,
    );
    check(CASES, case, |(complex, n, seed, raw, e)| {
        let field = if complex { Field::Complex } else { Field::Real };
        let m = 1 + (seed % (4 * n as u64)) as usize;
        let s = SensingMatrix::from_seed(field, n, m, seed).unwrap();
        let x = Signal::from_real_encoding(field, &scaled(raw[..field.real_width(n)].to_vec(), e))
            .unwrap();
        let y = forward(&s, &x).unwrap();
        let yc = forward(&s, &canonicalize(&x).x_canon).unwrap();
        let scale = y.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let worst = y
            .as_slice()
            .iter()
            .zip(yc.as_slice())
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        prop_assert!(
            worst <= 1e-10 * scale,
            "max deviation {} vs scale {}",
            worst,
            scale
        );
        Ok(())
    })
}

/// Closed-form phase alignment against a brute-force grid.
pub fn epsilon_complex_vs_grid(cases: u32, points: usize) -> Outcome {
    let grid = PhaseGrid::new(points);
    let pair =
        (1usize..=10).prop_flat_map(|n| (vec(-1.0f64..1.0, 2 * n), vec(-1.0f64..1.0, 2 * n)));
    check(cases, pair, |(a, b)| {
        let (xh, x) = (
            CplxVec::from_concat(&a).unwrap(),
            CplxVec::from_concat(&b).unwrap(),
        );
        let closed = epsilon_complex(&xh, &x).unwrap();
        let brute = grid.min_sq_distance(&pairs(&xh), &pairs(&x)) / x.len() as f64;
        prop_assert!(
            (closed - brute).abs() <= 1e-6,
            "closed {} vs grid {}",
            closed,
            brute
        );
        prop_assert!(
            closed <= brute + 1e-9,
            "closed {} above grid {}",
            closed,
            brute
        );
        Ok(())
    })
}

const REGS: [Regularization; 4] = [
    Regularization::None,
    Regularization::L1,
    Regularization::L2,
    Regularization::L1L2,
];

/// Analytic gradients of random small networks against central differences
/// of an independent loop implementation. Returns the worst relative error.
pub fn mlp_gradients(models: usize) -> Result<f64, String> {
    const STEP: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    // Keep every pre-activation and weight clear of a kink by more than a
    // finite-difference step can move it.
    const MARGIN: f64 = 1e-4;
    let mut rng = RngStream::new(2024, 0);
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < models {
        attempts += 1;
        if attempts > 50 * models {
            return Err("could not draw kink-free evaluation points".into());
        }
        let layers = 1 + rng.below(3) as usize;
        let dims: Vec<usize> = (0..=layers).map(|_| 1 + rng.below(8) as usize).collect();
        let rows = 1 + rng.below(6) as usize;
        let reg = REGS[done % REGS.len()];
        let lambda = if reg == Regularization::None {
            0.0
        } else {
            0.05
        };
        let mut model =
            MlpModel::new(Field::Real, &dims, rng.next_u64()).map_err(|e| e.to_string())?;
        for l in 0..model.num_layers() {
            // Nonzero biases so the check is not confined to b = 0.
            let offset: usize =
                (0..l).map(|k| (dims[k] + 1) * dims[k + 1]).sum::<usize>() + dims[l] * dims[l + 1];
            for j in 0..dims[l + 1] {
                model.params_mut()[offset + j] = 0.3 * rng.normal();
            }
        }
        let inputs: Vec<f64> = (0..rows * dims[0]).map(|_| rng.normal()).collect();
        let targets: Vec<f64> = (0..rows * dims[layers]).map(|_| rng.normal()).collect();
        let min_weight = (0..model.num_layers())
            .flat_map(|l| model.weights(l).to_vec())
            .fold(f64::INFINITY, |m, w| m.min(w.abs()));
        if kink_margin(&model, &inputs) < MARGIN
            || (reg != Regularization::None && min_weight < MARGIN)
        {
            continue;
        }
        let (l1, l2w) = match reg {
            Regularization::None => (0.0, 0.0),
            Regularization::L1 => (lambda, 0.0),
            Regularization::L2 => (0.0, lambda),
            Regularization::L1L2 => (lambda, lambda),
        };
        let (loss, grads) = model
            .loss_and_grad(&inputs, &targets, reg, lambda)
            .map_err(|e| e.to_string())?;
        let reference = naive_loss(&model, &inputs, &targets, l1, l2w);
        if (loss - reference).abs() > 1e-12 * reference.abs().max(1.0) {
            return Err(format!(
                "dims {dims:?}: loss {loss} but loop oracle gives {reference}"
            ));
        }
        let fd = central_differences(&mut model, STEP, |m| {
            naive_loss(m, &inputs, &targets, l1, l2w)
        });
        for (i, (a, f)) in grads.iter().zip(&fd).enumerate() {
            let rel = (a - f).abs() / a.abs().max(f.abs()).max(1e-6);
            worst = worst.max(rel);
            if rel > TOL {
                return Err(format!("dims {dims:?}, {reg:?}: coordinate {i} analytic {a} vs numeric {f} (rel {rel:.2e})"));
            }
        }
        done += 1;
    }
    Ok(worst)
}

/// K-NN predictions against a full sort, on instances up to 1000 samples
/// with duplicated points and grid-valued inputs to force distance ties.
pub fn knn_matches_full_sort(instances: usize) -> Outcome {
    let mut rng = RngStream::new(77, 0);
    for inst in 0..instances {
        let size = if inst == 0 {
            1000
        } else {
            5 + rng.below(996) as usize
        };
        let d_in = 1 + rng.below(6) as usize;
        let d_out = 1 + rng.below(4) as usize;
        let k = if inst == 1 {
            5.min(size)
        } else {
            1 + rng.below(size.min(12) as u64) as usize
        };
        let on_grid = inst % 3 == 0;
        let draw = |rng: &mut RngStream| {
            if on_grid {
                rng.below(3) as f64 * 0.5
            } else {
                rng.normal()
            }
        };
        let mut inputs = Vec::with_capacity(size * d_in);
        for i in 0..size {
            if i > 0 && rng.uniform() < 0.1 {
                let j = rng.below(i as u64) as usize;
                let row = inputs[j * d_in..(j + 1) * d_in].to_vec();
                inputs.extend(row);
            } else {
                for _ in 0..d_in {
                    inputs.push(draw(&mut rng));
                }
            }
        }
        let targets: Vec<f64> = (0..size * d_out).map(|_| rng.normal()).collect();
        let model = KnnModel::fit(inputs.clone(), targets.clone(), d_in, d_out, k)
            .map_err(|e| e.to_string())?;
        for q in 0..50 {
            let query: Vec<f64> = if q % 5 == 0 {
                let j = rng.below(size as u64) as usize;
                inputs[j * d_in..(j + 1) * d_in].to_vec()
            } else {
                (0..d_in).map(|_| draw(&mut rng)).collect()
            };
            let got = model.predict(&query).map_err(|e| e.to_string())?;
            let want = knn_full_sort(&inputs, &targets, d_in, d_out, k, &query);
            if got
                .iter()
                .map(|v| v.to_bits())
                .ne(want.iter().map(|v| v.to_bits()))
            {
                return Err(format!(
                    "instance {inst} (size {size}, K {k}) query {q}: {got:?} vs oracle {want:?}"
                ));
            }
        }
    }
    Ok(())
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn datasets_bit_equal(a: &Dataset, b: &Dataset) -> bool {
    let (ma, mb) = (a.sensing().matrix(), b.sensing().matrix());
    a.field() == b.field()
        && (a.n(), a.m(), a.len(), a.seed()) == (b.n(), b.m(), b.len(), b.seed())
        && a.canonicalized() == b.canonicalized()
        && a.sensing().seed() == b.sensing().seed()
        && bits(ma.re()) == bits(mb.re())
        && ma.im().map(bits) == mb.im().map(bits)
        && a.xs()
            .iter()
            .zip(b.xs())
            .all(|(p, q)| encoding_bits(p) == encoding_bits(q))
        && a.ys()
            .iter()
            .zip(b.ys())
            .all(|(p, q)| bits(p.as_slice()) == bits(q.as_slice()))
}

pub fn dataset_round_trip(cases: u32) -> Outcome {
    let case = (
        any::<bool>(),
        1usize..=6,
        1usize..=24,
        1usize..=40,
        any::<u64>(),
        any::<bool>(),
    );
    check(cases, case, |(complex, n, m, count, seed, breaking)| {
        let field = if complex { Field::Complex } else { Field::Real };
        let mut d = generate(field, n, m, count, seed).unwrap();
        if breaking {
            d = d.apply_symmetry_breaking().unwrap();
        }
        let mut bytes = Vec::new();
        d.write_to(&mut bytes).unwrap();
        let back = Dataset::read_from(&mut bytes.as_slice()).unwrap();
        prop_assert!(datasets_bit_equal(&d, &back));
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        prop_assert_eq!(bytes, again);
        Ok(())
    })
}
