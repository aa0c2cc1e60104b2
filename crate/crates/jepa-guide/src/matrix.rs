//! Dense row-major matrices with the few factorizations the rest of the crate
//! needs: full SVD, QR orthonormalization, and seeded Gaussian sampling.
//!
//! Shapes are `rows x cols`, entries are `f64` and finite by construction.
//! Factorizations are delegated to nalgebra behind this module's types; all
//! tolerances live in [`tolerances`] rather than per-call parameters.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Single source of truth for numeric tolerances used across the crate.
pub mod tolerances {
    /// Max allowed deviation of `QᵀQ` from the identity for orthonormal factors.
    pub const ORTHONORMALITY: f64 = 1e-10;
    /// Relative Frobenius error allowed when multiplying an SVD back together.
    pub const RECONSTRUCTION_REL: f64 = 1e-8;
    /// Numerical rank cutoff, relative to the largest singular value.
    pub const RANK_REL: f64 = 1e-10;
    /// Relative cutoff on QR diagonal entries below which a column counts as dependent.
    pub const QR_RANK_REL: f64 = 1e-10;
    /// Iteration cap for the implicit-shift SVD; exceeding it is an error, never a silent result.
    pub const SVD_MAX_ITER: usize = 4000;
    /// Norm slack when a caller must supply a unit-length direction.
    pub const UNIT_NORM: f64 = 1e-10;
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense row-major matrix. Invariants: `rows >= 1`, `cols >= 1`, every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Validates shape, length, and finiteness of every entry.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        for (idx, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: idx / cols,
                    col: idx % cols,
                    value: v,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds entry-by-entry; fails if `f` produces a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Square matrix with `diag` on the diagonal, zero elsewhere.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_fn(diag.len(), diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major backing slice, length `rows * cols`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.rows, "row {i} out of bounds");
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        assert!(j < self.cols, "col {j} out of bounds");
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `self * other`; shapes must chain.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matrix multiply",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &mut data[i * other.cols..(i + 1) * other.cols];
                let rhs_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (out, &b) in lhs_row.iter_mut().zip(rhs_row) {
                    *out += a * b;
                }
            }
        }
        Matrix::new(self.rows, other.cols, data)
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length must match cols");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op: "matrix subtract",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, factor: f64) -> Result<Matrix> {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest singular value, via the full SVD.
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(svd(self)?.s[0])
    }

    /// CSV text: one line per row, comma-separated, 17 significant digits so a
    /// parse round-trip is bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format_float(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`Matrix::to_csv`]. Blank lines and lines
    /// starting with `#` are skipped; rows must be rectangular.
    pub fn from_csv(text: &str) -> Result<Matrix> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    path: format!("csv line {}", lineno + 1),
                    what: format!("not a float: {field:?}"),
                })?;
                row.push(v);
            }
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse {
                        path: format!("csv line {}", lineno + 1),
                        what: format!("expected {} fields, got {}", first.len(), row.len()),
                    });
                }
            }
            rows.push(row);
        }
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Matrix::new(r, c, rows.into_iter().flatten().collect())
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<f64>) -> Matrix {
        // nalgebra stores column-major; re-lay row-major.
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Matrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

/// 17-significant-digit scientific form; round-trips f64 exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

// ---------------------------------------------------------------------------
// Factorizations
// ---------------------------------------------------------------------------

/// Thin SVD `a = U diag(s) Vᵀ`.
///
/// `u` is `rows x m`, `vt` is `m x cols` with `m = min(rows, cols)`; `s` holds
/// all `m` singular values, descending and non-negative.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> Result<Matrix> {
        let m = self.s.len();
        let scaled = Matrix::from_fn(m, self.vt.cols(), |i, j| self.s[i] * self.vt.get(i, j))?;
        self.u.mul(&scaled)
    }
}

/// Full singular value decomposition via implicit-shift bidiagonal QR.
///
/// Fails with [`Error::SvdNoConvergence`] if the iteration cap
/// [`tolerances::SVD_MAX_ITER`] is exceeded.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    let max_iter = tolerances::SVD_MAX_ITER;
    let decomp = nalgebra::linalg::SVD::try_new(a.to_nalgebra(), true, true, f64::EPSILON, max_iter)
        .ok_or(Error::SvdNoConvergence { max_iter })?;
    let mut u = Matrix::from_nalgebra(&decomp.u.expect("u requested"));
    let mut vt = Matrix::from_nalgebra(&decomp.v_t.expect("v_t requested"));
    let mut s: Vec<f64> = decomp.singular_values.iter().copied().collect();

    // Small fixed-size paths may emit a signed value; fold the sign into U.
    for i in 0..s.len() {
        if s[i] < 0.0 {
            s[i] = -s[i];
            for r in 0..u.rows {
                u.data[r * u.cols + i] = -u.data[r * u.cols + i];
            }
        }
    }
    // Re-sort descending in case sign folding disturbed the order.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    if order.iter().enumerate().any(|(pos, &i)| pos != i) {
        let s_sorted: Vec<f64> = order.iter().map(|&i| s[i]).collect();
        let u_sorted = Matrix::from_fn(u.rows, u.cols, |r, c| u.get(r, order[c]))?;
        let vt_sorted = Matrix::from_fn(vt.rows, vt.cols, |r, c| vt.get(order[r], c))?;
        s = s_sorted;
        u = u_sorted;
        vt = vt_sorted;
    }
    Ok(SvdResult { u, s, vt })
}

/// Householder-QR orthonormal basis for the column span of `a`.
///
/// `a` must be tall or square with full column rank; the returned `Q` has the
/// same shape as `a` with `QᵀQ = I`. A dependent column fails with
/// [`Error::RankDeficient`] naming the first offending column.
pub fn qr_orthonormalize(a: &Matrix) -> Result<Matrix> {
    if a.cols > a.rows {
        return Err(Error::DimensionMismatch {
            op: "qr_orthonormalize",
            left: format!("{}x{}", a.rows, a.cols),
            right: "needs rows >= cols".to_string(),
        });
    }
    let qr = a.to_nalgebra().qr();
    let r = qr.r();
    let scale = (0..a.cols).map(|j| r[(j, j)].abs()).fold(0.0_f64, f64::max);
    for j in 0..a.cols {
        if r[(j, j)].abs() <= tolerances::QR_RANK_REL * scale || scale == 0.0 {
            return Err(Error::RankDeficient { col: j });
        }
    }
    Ok(Matrix::from_nalgebra(&qr.q()))
}

/// `rows x cols` matrix of iid standard normal draws from a ChaCha stream
/// seeded with `seed`. Identical arguments give identical bytes, on any platform.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix { rows, cols });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Matrix::new(rows, cols, data)
}

/// Standard normal vector from the same deterministic stream family.
pub fn gaussian_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Lower Cholesky factor `L` with `a = L Lᵀ`, or `None` when `a` is not
/// positive definite to working precision. `a` must be square; symmetry is
/// the caller's responsibility (only the lower triangle is read).
pub fn cholesky_lower(a: &Matrix) -> Option<Matrix> {
    assert_eq!(a.rows(), a.cols(), "cholesky: matrix must be square");
    let chol = nalgebra::linalg::Cholesky::new(a.to_nalgebra())?;
    Some(Matrix::from_nalgebra(&chol.l()))
}

/// Count of singular values above the relative rank cutoff.
pub fn numerical_rank(s: &[f64]) -> usize {
    match s.first() {
        None => 0,
        Some(&smax) => {
            let tol = tolerances::RANK_REL * smax;
            s.iter().filter(|&&v| v > tol).count()
        }
    }
}
