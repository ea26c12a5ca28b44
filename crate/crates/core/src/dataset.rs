//! Simulated `(x, |Ax|^2)` sample collections, splits and the GPRD file format.
//!
//! GPRD layout, little-endian throughout:
//!
//! ```text
//! magic "GPRD" | version u32 = 1 | field u8 (0 real, 1 complex)
//! n u32 | m u32 | count u64 | seed u64 | canonicalized u8
//! A: m*n f64 row-major (complex: re plane, then im plane)
//! count x { x: n f64 (complex: n re, then n im) | y: m f64 }
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward_model::{forward, SensingMatrix};
use crate::numerics::{sample_unit_ball, CplxVec, Field, Matrix, RealVec, RngStream, Signal};
use crate::symmetry::{canonicalize, is_representative};

pub const DATASET_MAGIC: [u8; 4] = *b"GPRD";
pub const DATASET_VERSION: u32 = 1;

/// RNG stream for drawing the `x` samples.
pub const SAMPLE_STREAM: u64 = 1;
/// RNG stream for the train/val/test permutation.
pub const SPLIT_STREAM: u64 = 2;

/// Relative tolerance used when checking `y = forward(x)` on loaded data.
const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sensing: SensingMatrix,
    xs: Vec<Signal>,
    ys: Vec<RealVec>,
    canonicalized: bool,
    seed: u64,
}

/// Disjoint train/validation/test index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn reserve<T>(v: &mut Vec<T>, count: usize) -> Result<()> {
    v.try_reserve_exact(count).map_err(|_| Error::Allocation {
        bytes: count.saturating_mul(std::mem::size_of::<T>()),
    })
}

/// Draws `count` samples uniformly from the unit ball and measures them.
///
/// Complex samples are drawn from the unit ball of `R^{2n}` and read as
/// `[re; im]`.
pub fn generate(field: Field, n: usize, m: usize, count: usize, seed: u64) -> Result<Dataset> {
    let sensing = SensingMatrix::from_seed(field, n, m, seed)?;
    generate_with(sensing, count, seed)
}

/// Like [`generate`] but with a caller-supplied sensing matrix.
pub fn generate_with(sensing: SensingMatrix, count: usize, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::contract("generate: count must be at least 1"));
    }
    let field = sensing.field();
    let n = sensing.n();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    reserve(&mut xs, count)?;
    reserve(&mut ys, count)?;
    let mut rng = RngStream::new(seed, SAMPLE_STREAM);
    for _ in 0..count {
        let v = sample_unit_ball(&mut rng, field.real_width(n))?;
        let x = match field {
            Field::Real => Signal::Real(v),
            Field::Complex => Signal::Complex(CplxVec::from_concat(v.as_slice())?),
        };
        ys.push(forward(&sensing, &x)?);
        xs.push(x);
    }
    Ok(Dataset {
        sensing,
        xs,
        ys,
        canonicalized: false,
        seed,
    })
}

impl Dataset {
    /// Assembles a dataset from parts, checking every invariant.
    pub fn from_parts(
        sensing: SensingMatrix,
        xs: Vec<Signal>,
        ys: Vec<RealVec>,
        canonicalized: bool,
        seed: u64,
    ) -> Result<Dataset> {
        if xs.len() != ys.len() {
            return Err(Error::contract(format!(
                "{} inputs but {} outputs",
                xs.len(),
                ys.len()
            )));
        }
        for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
            if x.field() != sensing.field() || x.len() != sensing.n() || y.len() != sensing.m() {
                return Err(Error::contract(format!("sample {i} has the wrong shape")));
            }
            let expected = forward(&sensing, x)?;
            let scale = expected
                .as_slice()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let worst = expected
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if worst > CONSISTENCY_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Malformed(format!(
                    "sample {i}: y does not match |Ax|^2"
                )));
            }
            if canonicalized && !is_representative(x) {
                return Err(Error::Malformed(format!(
                    "sample {i} is flagged canonical but is not a representative"
                )));
            }
        }
        Ok(Dataset {
            sensing,
            xs,
            ys,
            canonicalized,
            seed,
        })
    }

    pub fn sensing(&self) -> &SensingMatrix {
        &self.sensing
    }

    pub fn field(&self) -> Field {
        self.sensing.field()
    }

    pub fn n(&self) -> usize {
        self.sensing.n()
    }

    pub fn m(&self) -> usize {
        self.sensing.m()
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[Signal] {
        &self.xs
    }

    pub fn ys(&self) -> &[RealVec] {
        &self.ys
    }

    pub fn canonicalized(&self) -> bool {
        self.canonicalized
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Maps every stored `x` onto its orbit representative; `y` is untouched.
    pub fn apply_symmetry_breaking(&self) -> Result<Dataset> {
        if self.canonicalized {
            return Err(Error::contract("dataset is already canonicalized"));
        }
        Ok(Dataset {
            sensing: self.sensing.clone(),
            xs: self.xs.iter().map(|x| canonicalize(x).x_canon).collect(),
            ys: self.ys.clone(),
            canonicalized: true,
            seed: self.seed,
        })
    }

    /// Row-major `y` matrix for the given indices.
    pub fn input_rows(&self, idx: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(idx.len() * self.m());
        for &i in idx {
            out.extend_from_slice(self.ys[i].as_slice());
        }
        out
    }

    /// Row-major real-encoded `x` matrix for the given indices, optionally
    /// canonicalizing each row on the way out.
    pub fn target_rows(&self, idx: &[usize], canonicalize_targets: bool) -> Vec<f64> {
        let width = self.field().real_width(self.n());
        let mut out = Vec::with_capacity(idx.len() * width);
        for &i in idx {
            if canonicalize_targets {
                out.extend(canonicalize(&self.xs[i]).x_canon.to_real_encoding());
            } else {
                out.extend(self.xs[i].to_real_encoding());
            }
        }
        out
    }

    /// Seeded 80/20 train/test split with 10% of the training part held out
    /// for validation. Sizes are floored; the remainder goes to training.
    pub fn split(&self, seed: u64) -> Result<Split> {
        split_indices(self.len(), seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&[field_tag(self.field())])?;
        w.write_all(&(self.n() as u32).to_le_bytes())?;
        w.write_all(&(self.m() as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&[self.canonicalized as u8])?;
        let a = self.sensing.matrix();
        write_f64s(w, a.re())?;
        if let Some(im) = a.im() {
            write_f64s(w, im)?;
        }
        for (x, y) in self.xs.iter().zip(&self.ys) {
            write_f64s(w, &x.to_real_encoding())?;
            write_f64s(w, y.as_slice())?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::read_from(&mut BufReader::new(file))
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Dataset> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, "magic")?;
        if magic != DATASET_MAGIC {
            return Err(Error::BadMagic {
                expected: DATASET_MAGIC,
                found: magic,
            });
        }
        let version = read_u32(r, "version")?;
        if version != DATASET_VERSION {
            return Err(Error::VersionMismatch {
                expected: DATASET_VERSION,
                found: version,
            });
        }
        let field = parse_field_tag(read_u8(r, "field")?)?;
        let n = read_u32(r, "n")? as usize;
        let m = read_u32(r, "m")? as usize;
        let count = read_u64(r, "count")?;
        let seed = read_u64(r, "seed")?;
        let canonicalized = match read_u8(r, "canonicalized flag")? {
            0 => false,
            1 => true,
            other => return Err(Error::Malformed(format!("canonicalized flag is {other}"))),
        };
        if n == 0 || m == 0 {
            return Err(Error::Malformed("zero dimension in header".into()));
        }
        let count = usize::try_from(count)
            .map_err(|_| Error::Malformed(format!("sample count {count} too large")))?;

        let a_re = read_f64s(r, m * n, "sensing matrix")?;
        let a = match field {
            Field::Real => Matrix::real(m, n, a_re)?,
            Field::Complex => Matrix::complex(m, n, a_re, read_f64s(r, m * n, "sensing matrix")?)?,
        };
        let sensing = SensingMatrix::from_matrix(a, seed);

        let width = field.real_width(n);
        // Grow incrementally so a lying header cannot force a huge up-front allocation.
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..count {
            let what = format!("sample {i} of {count}");
            let x = read_f64s(r, width, &what)?;
            let y = read_f64s(r, m, &what)?;
            xs.push(Signal::from_real_encoding(field, &x)?);
            ys.push(RealVec::new(y)?);
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)
            .map_err(|e| Error::Malformed(e.to_string()))?
            != 0
        {
            return Err(Error::Malformed("trailing bytes after last sample".into()));
        }
        Dataset::from_parts(sensing, xs, ys, canonicalized, seed)
    }

    /// Human-readable CSV dump, one sample per row.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let n = self.n();
        let mut header: Vec<String> = (0..n).map(|k| format!("x_{k}")).collect();
        if self.field() == Field::Complex {
            header.extend((0..n).map(|k| format!("xi_{k}")));
        }
        header.extend((0..self.m()).map(|k| format!("y_{k}")));
        writeln!(w, "{}", header.join(","))?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let row: Vec<String> = x
                .to_real_encoding()
                .iter()
                .chain(y.as_slice())
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

pub fn split_indices(count: usize, seed: u64) -> Result<Split> {
    if count < 10 {
        return Err(Error::contract(format!(
            "split needs at least 10 samples, got {count}"
        )));
    }
    let mut perm: Vec<usize> = (0..count).collect();
    RngStream::new(seed, SPLIT_STREAM).shuffle(&mut perm);
    let n_test = count / 5;
    let n_val = (count - n_test) / 10;
    let train = perm.split_off(n_test + n_val);
    let val = perm.split_off(n_test);
    Ok(Split {
        train,
        val,
        test: perm,
    })
}

pub(crate) fn field_tag(field: Field) -> u8 {
    match field {
        Field::Real => 0,
        Field::Complex => 1,
    }
}

pub(crate) fn parse_field_tag(tag: u8) -> Result<Field> {
    match tag {
        0 => Ok(Field::Real),
        1 => Ok(Field::Complex),
        other => Err(Error::Malformed(format!("unknown field tag {other}"))),
    }
}

pub(crate) fn write_f64s<W: Write>(w: &mut W, data: &[f64]) -> io::Result<()> {
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated(format!("file ends inside {what}")),
        _ => Error::Malformed(format!("{what}: {e}")),
    })
}

pub(crate) fn read_u8<R: Read>(r: &mut R, what: &str) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b, what)?;
    Ok(b[0])
}

pub(crate) fn read_u16<R: Read>(r: &mut R, what: &str) -> Result<u16> {
    let mut b = [0u8; 2];
    read_exact(r, &mut b, what)?;
    Ok(u16::from_le_bytes(b))
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, count: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    read_exact(r, &mut bytes, what)?;
    let out: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_respects_construction() {
        let d = generate(Field::Real, 5, 20, 100, 17).unwrap();
        assert_eq!(d.len(), 100);
        for (x, y) in d.xs().iter().zip(d.ys()) {
            assert!(x.norm_sq() <= 1.0);
            assert!(y.as_slice().iter().all(|&v| v >= 0.0));
        }
        assert_eq!(d, generate(Field::Real, 5, 20, 100, 17).unwrap());

        let c = generate(Field::Complex, 5, 20, 100, 17).unwrap();
        assert!(c.xs().iter().all(|x| x.norm_sq() <= 1.0 && x.len() == 5));
    }

    #[test]
    fn symmetry_breaking_example() {
        let s = SensingMatrix::from_seed(Field::Real, 2, 8, 3).unwrap();
        let x = Signal::Real(RealVec::new(vec![0.1, -0.5]).unwrap());
        let y = forward(&s, &x).unwrap();
        let d = Dataset::from_parts(s, vec![x], vec![y.clone()], false, 3).unwrap();
        let b = d.apply_symmetry_breaking().unwrap();
        assert_eq!(
            b.xs()[0],
            Signal::Real(RealVec::new(vec![-0.1, 0.5]).unwrap())
        );
        assert_eq!(b.ys()[0], y);
        assert!(b.canonicalized());
        assert!(matches!(
            b.apply_symmetry_breaking(),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn symmetry_breaking_keeps_canonical_inputs() {
        let d = generate(Field::Real, 3, 12, 50, 5)
            .unwrap()
            .apply_symmetry_breaking()
            .unwrap();
        let raw = Dataset::from_parts(
            d.sensing().clone(),
            d.xs().to_vec(),
            d.ys().to_vec(),
            false,
            5,
        )
        .unwrap();
        assert_eq!(raw.apply_symmetry_breaking().unwrap().xs(), d.xs());
    }

    #[test]
    fn complex_breaking_makes_first_entry_positive_real() {
        let d = generate(Field::Complex, 4, 16, 200, 8)
            .unwrap()
            .apply_symmetry_breaking()
            .unwrap();
        for x in d.xs() {
            let Signal::Complex(v) = x else { panic!() };
            let (re, im) = v.get(0);
            assert!(re > 0.0 && im == 0.0);
        }
    }

    #[test]
    fn split_sizes() {
        for (count, sizes) in [(100, (72, 8, 20)), (1000, (720, 80, 200))] {
            let s = split_indices(count, 4).unwrap();
            assert_eq!((s.train.len(), s.val.len(), s.test.len()), sizes);
        }
        assert_eq!(
            split_indices(100, 4).unwrap(),
            split_indices(100, 4).unwrap()
        );
        assert!(matches!(split_indices(9, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn bad_magic_and_version() {
        let d = generate(Field::Real, 2, 8, 12, 1).unwrap();
        let mut bytes = Vec::new();
        d.write_to(&mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            Dataset::read_from(&mut bad.as_slice()),
            Err(Error::BadMagic { .. })
        ));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            Dataset::read_from(&mut bad.as_slice()),
            Err(Error::VersionMismatch { found: 2, .. })
        ));

        let cut = &bytes[..bytes.len() - 12];
        assert!(matches!(
            Dataset::read_from(&mut &cut[..]),
            Err(Error::Truncated(_))
        ));
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let d = generate(Field::Real, 2, 8, 12, 1).unwrap();
        let mut bytes = Vec::new();
        d.write_to(&mut bytes).unwrap();
        // First f64 of the sensing matrix sits right after the 34-byte header.
        bytes[34..42].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            Dataset::read_from(&mut bytes.as_slice()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn csv_header() {
        let d = generate(Field::Complex, 2, 3, 10, 1).unwrap();
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "x_0,x_1,xi_0,xi_1,y_0,y_1,y_2"
        );
        assert_eq!(text.lines().count(), 11);
    }
}
