//! Frequency-space matrices of `Π_N ∘ L_S` for grid-sampled maps `S`.
//!
//! Entry `(k, i)` is `w(k) · FT(e_{-k} ∘ S)(-i)`: the Fejér weight of the
//! output frequency times the `-i`-th Fourier coefficient of `e_{-k} ∘ S`,
//! computed by one FFT per output frequency on the `16N` grid.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{self, bin, fejer_weight, frequencies, grid_size, index_of, FourierDensity};
use crate::linalg::CMatrix;

/// Default coefficient max-norm tolerance of [`leading_fixed_density`].
pub const DEFAULT_EIGEN_TOL: f64 = 1e-15;
/// Below this step size an iteration that stops shrinking has reached the
/// rounding floor and counts as converged.
const STAGNATION_LEVEL: f64 = 1e-12;
pub const DEFAULT_EIGEN_MAX_ITER: usize = 10_000;

const DUMP_MAGIC: &[u8; 8] = b"PINOPMAT";

/// Dense `2N × 2N` matrix addressed by logical frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    order: usize,
    entries: CMatrix,
    provenance: String,
}

impl OperatorMatrix {
    pub fn new(order: usize, entries: CMatrix, provenance: impl Into<String>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(order));
        }
        if entries.rows() != 2 * order || entries.cols() != 2 * order {
            return Err(Error::OrderMismatch {
                expected: 2 * order,
                actual: entries.rows(),
            });
        }
        Ok(Self {
            order,
            entries,
            provenance: provenance.into(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// Entry for output frequency `k` and input frequency `i`.
    pub fn entry(&self, k: i64, i: i64) -> Complex64 {
        match (index_of(self.order, k), index_of(self.order, i)) {
            (Some(r), Some(c)) => self.entries[(r, c)],
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// Assembles `Π_N L_S` from lift samples `S(x_j)` on the `16N` grid.
pub fn assemble_transfer(samples: &[f64], order: usize, provenance: &str) -> Result<OperatorMatrix> {
    let rows = transfer_rows(samples, order, true)?;
    let mut entries = CMatrix::zeros(2 * order, 2 * order);
    for (r, row) in rows.into_iter().enumerate() {
        entries.row_mut(r).copy_from_slice(&row);
    }
    OperatorMatrix::new(order, entries, provenance)
}

/// Rows `FT(e_{-k} ∘ S)(-i)` for all `k`, optionally scaled by `w(k)`.
pub(crate) fn transfer_rows(samples: &[f64], order: usize, fejer: bool) -> Result<Vec<Vec<Complex64>>> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    let m = grid_size(order);
    if samples.len() != m {
        return Err(Error::GridMismatch {
            expected: m,
            actual: samples.len(),
        });
    }
    let dim = 2 * order;
    let rows = frequencies(order)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            let w = if fejer { fejer_weight(order, k) } else { 1.0 };
            let mut row = vec![Complex64::new(0.0, 0.0); dim];
            if k == 0 {
                // e_0 ∘ S ≡ 1
                row[index_of(order, 0).unwrap()] = Complex64::new(w, 0.0);
                return row;
            }
            if w == 0.0 {
                return row;
            }
            let mut buf: Vec<Complex64> = samples
                .iter()
                .map(|&s| {
                    let (sn, cs) = (-2.0 * PI * (k as f64) * s).sin_cos();
                    Complex64::new(cs, sn)
                })
                .collect();
            fourier::fft_forward(&mut buf);
            let scale = w / m as f64;
            for (c, i) in frequencies(order).enumerate() {
                row[c] = buf[bin(-i, m)] * scale;
            }
            row
        })
        .collect();
    Ok(rows)
}

pub fn apply_operator(op: &OperatorMatrix, h: &FourierDensity) -> Result<FourierDensity> {
    if h.order() != op.order {
        return Err(Error::OrderMismatch {
            expected: op.order,
            actual: h.order(),
        });
    }
    FourierDensity::new(op.order, op.entries.matvec(h.coeffs()), h.is_real())
}

/// Invariant density of `Π_N L_S` by plain iteration `h ← L h` from `e_0`.
///
/// Row `k = 0` of an assembled operator is the unit row, so every iterate
/// keeps `ĥ(0) = 1` and the iteration converges at the rate of the second
/// eigenvalue. It stops once the step is at most `tol`, or once steps below
/// `1e-12` stop shrinking.
pub fn leading_fixed_density(op: &OperatorMatrix, tol: f64, max_iter: usize) -> Result<FourierDensity> {
    let mut h = FourierDensity::uniform(op.order)?;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = apply_operator(op, &h)?;
        next.symmetrize();
        next.set_coeff(0, Complex64::new(1.0, 0.0))?;
        let step = next.max_coeff_diff(&h)?;
        let stalled = step <= STAGNATION_LEVEL && step >= residual;
        residual = step;
        h = next;
        if residual <= tol || stalled {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Writes the matrix as a 16-byte header (8-byte magic, `N` as u64) followed
/// by row-major `(re, im)` pairs, all little-endian.
pub fn write_operator(op: &OperatorMatrix, mut out: impl Write) -> Result<()> {
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&(op.order as u64).to_le_bytes())?;
    for z in op.entries.as_slice() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_operator(mut input: impl Read) -> Result<OperatorMatrix> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[..8] != DUMP_MAGIC {
        return Err(Error::BadDump("wrong magic".into()));
    }
    let order = u64::from_le_bytes(header[8..].try_into().unwrap()) as usize;
    if order == 0 || order > 1 << 16 {
        return Err(Error::BadDump(format!("implausible order {order}")));
    }
    let dim = 2 * order;
    let mut raw = vec![0u8; dim * dim * 16];
    input.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    OperatorMatrix::new(order, CMatrix::from_vec(dim, dim, data)?, "dump")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::CircleMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn doubling_map_matrix_is_analytic() {
        for n in 1..=8usize {
            let op = assemble_transfer(&CircleMap::doubling().sample(grid_size(n)), n, "doubling").unwrap();
            for k in frequencies(n) {
                for i in frequencies(n) {
                    let expect = if i == 2 * k { fejer_weight(n, k) } else { 0.0 };
                    assert!((op.entry(k, i) - c(expect, 0.0)).norm() < 1e-10, "n={n} k={k} i={i}");
                }
            }
        }
    }

    #[test]
    fn rotation_matrix_is_diagonal() {
        let alpha = 0.3;
        let n = 8;
        let op = assemble_transfer(&CircleMap::rotation(alpha).sample(grid_size(n)), n, "rot").unwrap();
        for k in frequencies(n) {
            for i in frequencies(n) {
                let expect = if i == k {
                    fourier::mode_at(-k, alpha) * fejer_weight(n, k)
                } else {
                    c(0.0, 0.0)
                };
                assert!((op.entry(k, i) - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn row_structure() {
        let n = 12;
        let t = CircleMap::pinched_doubling(0.9).unwrap();
        let op = assemble_transfer(&t.sample(grid_size(n)), n, "pinched").unwrap();
        for i in frequencies(n) {
            assert_eq!(op.entry(0, i), if i == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
            assert_eq!(op.entry(n as i64, i), c(0.0, 0.0));
        }
        let h = fourier::project_fejer(
            &FourierDensity::from_fn(n, |x| 1.0 + 0.5 * (2.0 * PI * x).sin() + 0.1 * (6.0 * PI * x).cos()).unwrap(),
        );
        let mut out = apply_operator(&op, &h).unwrap();
        assert_eq!(out.coeff(0), c(1.0, 0.0));
        assert!(out.hermitian_defect() < 1e-11);
        out.symmetrize();
    }

    #[test]
    fn doubling_pushforward_of_cosine() {
        let n = 4;
        let op = assemble_transfer(&CircleMap::doubling().sample(grid_size(n)), n, "doubling").unwrap();
        let e0 = FourierDensity::uniform(n).unwrap();
        assert!(apply_operator(&op, &e0).unwrap().max_coeff_diff(&e0).unwrap() < 1e-12);
        let h = FourierDensity::from_fn(n, |x| 1.0 + (2.0 * PI * x).cos()).unwrap();
        let out = apply_operator(&op, &h).unwrap();
        assert!(out.max_coeff_diff(&e0).unwrap() < 1e-12);
    }

    #[test]
    fn fixed_density_of_doubling_is_uniform() {
        let n = 16;
        let op = assemble_transfer(&CircleMap::doubling().sample(grid_size(n)), n, "doubling").unwrap();
        let h = leading_fixed_density(&op, DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITER).unwrap();
        assert_eq!(h.coeff(0), c(1.0, 0.0));
        assert!(h.max_coeff_diff(&FourierDensity::uniform(n).unwrap()).unwrap() < 1e-13);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let n = 16;
        let t = CircleMap::pinched_doubling(0.9).unwrap();
        let op = assemble_transfer(&t.sample(grid_size(n)), n, "pinched").unwrap();
        match leading_fixed_density(&op, 1e-15, 2) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-15);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn dump_round_trip() {
        let n = 4;
        let op = assemble_transfer(&CircleMap::pinched_doubling(0.5).unwrap().sample(grid_size(n)), n, "p").unwrap();
        let mut bytes = Vec::new();
        write_operator(&op, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 16 + 64 * 16);
        assert_eq!(&bytes[..8], DUMP_MAGIC);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 4);
        let back = read_operator(&bytes[..]).unwrap();
        assert_eq!(back.entries(), op.entries());
        bytes[0] = b'X';
        assert!(matches!(read_operator(&bytes[..]), Err(Error::BadDump(_))));
    }
}
