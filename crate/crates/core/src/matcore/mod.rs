//! Dense complex linear algebra.
//!
//! Everything in the crate is carried by [`ComplexMatrix`], a row-major
//! matrix of `Complex64` entries. Tensor products follow the usual
//! Kronecker convention: the row index of `a ⊗ b` is `i1 * b.rows + i2`.
//!
//! Trace conventions are fixed globally: the trace on the system space is
//! the unnormalised matrix trace, while every ancilla trace is a state
//! (value one on the identity), encoded as a probability vector of diagonal
//! weights and applied through [`slice_right`].

mod eig;
mod perm;
pub mod random;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{mismatch, Error, Result};

pub use eig::{hermitian_eig, HermitianEig, MAX_SWEEPS};
pub use perm::{embed_on_legs, Permutation};

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Numerical tolerances shared by all predicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Absolute Frobenius-norm threshold used by structural predicates.
    pub abs_eps: f64,
    /// Threshold for eigenvalue-based decisions and Jacobi convergence.
    pub eig_eps: f64,
}

impl Tolerance {
    pub fn new(abs_eps: f64, eig_eps: f64) -> Result<Self> {
        if !(abs_eps > 0.0 && abs_eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "abs_eps must be positive, got {abs_eps}"
            )));
        }
        if !(eig_eps > 0.0 && eig_eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eig_eps must be positive, got {eig_eps}"
            )));
        }
        Ok(Self { abs_eps, eig_eps })
    }

    /// Same eigen threshold as the default, custom absolute threshold.
    pub fn with_abs(abs_eps: f64) -> Result<Self> {
        Self::new(abs_eps, Self::default().eig_eps)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_eps: 1e-8,
            eig_eps: 1e-10,
        }
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(mismatch("matrix entries", rows * cols, data.len()));
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows of real numbers.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(mismatch("ragged rows", c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let v: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn require_shape(&self, context: &'static str, rows: usize, cols: usize) -> Result<()> {
        if self.shape() == (rows, cols) {
            Ok(())
        } else {
            Err(mismatch(
                context,
                format!("{rows}x{cols}"),
                format!("{}x{}", self.rows, self.cols),
            ))
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// `self += s * other`, shapes must agree.
    pub fn add_scaled(&mut self, s: Complex64, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(mismatch("matmul", format!("inner dimension {}", self.cols), other.rows));
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * p..(k + 1) * p];
                for (o, &b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: p,
            data: out,
        })
    }

    /// `self^* · other` without materialising the adjoint.
    pub fn adjoint_mul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(mismatch("adjoint_mul", self.rows, other.rows));
        }
        let (n, m, p) = (self.cols, self.rows, other.cols);
        let mut out = vec![ZERO; n * p];
        for k in 0..m {
            let brow = &other.data[k * p..(k + 1) * p];
            for i in 0..n {
                let a = self.data[k * n + i].conj();
                if a == ZERO {
                    continue;
                }
                let row = &mut out[i * p..(i + 1) * p];
                for (o, &b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: p,
            data: out,
        })
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance; panics on shape mismatch.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "distance shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise modulus of `self - other`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - self^*`.
    pub fn hermitian_defect(&self) -> Result<f64> {
        let n = self.require_square()?;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }

    /// Copy of the `nr x nc` sub-matrix starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        assert!(
            r0 + b.rows <= self.rows && c0 + b.cols <= self.cols,
            "block out of range"
        );
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Stacked copy of the given rows.
    pub fn row_range(&self, r0: usize, nr: usize) -> Self {
        self.block(r0, 0, nr, self.cols)
    }

    /// Block diagonal matrix `a ⊕ b`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, self.cols, other);
        out
    }

    /// Solves `self · x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.require_square()?;
        if rhs.rows != n {
            return Err(mismatch("solve rhs", n, rhs.rows));
        }
        let mut a = self.clone();
        let mut b = rhs.clone();
        let p = b.cols;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .expect("non-empty pivot range");
            if a[(pivot, col)].norm() <= scale * 1e-14 {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                for j in 0..p {
                    b.data.swap(pivot * p + j, col * p + j);
                }
            }
            let inv = ONE / a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] * inv;
                if f == ZERO {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
                for j in 0..p {
                    let v = b[(col, j)];
                    b[(r, j)] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = ONE / a[(col, col)];
            for j in 0..p {
                let mut acc = b[(col, j)];
                for k in col + 1..n {
                    acc -= a[(col, k)] * b[(k, j)];
                }
                b[(col, j)] = acc * inv;
            }
        }
        Ok(b)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

/// Matrix product; panics on inner-dimension mismatch. Use
/// [`ComplexMatrix::matmul`] for a fallible version.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        if raw.re.len() != raw.im.len() {
            return Err(serde::de::Error::custom(format!(
                "re has {} entries but im has {}",
                raw.re.len(),
                raw.im.len()
            )));
        }
        let data = raw
            .re
            .iter()
            .zip(&raw.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        ComplexMatrix::new(raw.rows, raw.cols, data).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product, `(i1, i2), (j1, j2) -> a[i1, j1] * b[i2, j2]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    for i1 in 0..ar {
        for j1 in 0..ac {
            let s = a[(i1, j1)];
            if s == ZERO {
                continue;
            }
            for i2 in 0..br {
                let row = (i1 * br + i2) * oc + j1 * bc;
                for j2 in 0..bc {
                    out.data[row + j2] = s * b[(i2, j2)];
                }
            }
        }
    }
    out
}

/// The matrix unit `e_i e_j^*` in `M_n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> Result<ComplexMatrix> {
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { row: i, col: j, dim: n });
    }
    let mut m = ComplexMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    Ok(m)
}

/// Frobenius norms of `a^*a - I` and `aa^* - I`, whichever is larger.
pub fn unitarity_defect(a: &ComplexMatrix) -> Result<f64> {
    let n = a.require_square()?;
    let id = ComplexMatrix::identity(n);
    let left = a.adjoint_mul(a)?.distance(&id);
    let right = a.matmul(&a.adjoint())?.distance(&id);
    Ok(left.max(right))
}

pub fn is_unitary(a: &ComplexMatrix, tol: &Tolerance) -> Result<bool> {
    Ok(unitarity_defect(a)? <= tol.abs_eps)
}

/// Checks that `weights` is a probability vector of length `k`.
pub fn validate_weights(weights: &[f64], k: usize) -> Result<()> {
    if weights.len() != k {
        return Err(mismatch("trace weights", k, weights.len()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Slice `id ⊗ τ` of an `(n·k)×(n·k)` matrix, where `τ(y) = Σ_κ w_κ y[κ,κ]`.
///
/// Entry `(i, j)` of the result is the weighted trace of the `(i, j)` block.
/// The diagonal weight vector realises the state of a block algebra exactly
/// on elements of that algebra.
pub fn slice_right(z: &ComplexMatrix, n: usize, k: usize, weights: &[f64]) -> Result<ComplexMatrix> {
    z.require_shape("slice_right input", n * k, n * k)?;
    validate_weights(weights, k)?;
    Ok(slice_right_unchecked(z, n, k, weights))
}

pub(crate) fn slice_right_unchecked(z: &ComplexMatrix, n: usize, k: usize, weights: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        weights
            .iter()
            .enumerate()
            .map(|(kk, &w)| z[(i * k + kk, j * k + kk)] * w)
            .sum()
    })
}

/// `exp(i·t·a)` for Hermitian `a`, through the spectral decomposition.
pub fn unitary_exp(a: &ComplexMatrix, t: f64, tol: &Tolerance) -> Result<ComplexMatrix> {
    let HermitianEig { values, vectors } = hermitian_eig(a, tol)?;
    let phases: Vec<Complex64> = values.iter().map(|&l| Complex64::from_polar(1.0, t * l)).collect();
    let scaled = ComplexMatrix::from_fn(vectors.rows(), vectors.cols(), |r, c| vectors[(r, c)] * phases[c]);
    scaled.matmul(&vectors.adjoint())
}

/// Nearest unitary `a (a^*a)^{-1/2}` (polar factor).
pub fn polar_unitary(a: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix> {
    let gram = a.adjoint_mul(a)?;
    let gram = hermitian_part(&gram);
    let HermitianEig { values, vectors } = hermitian_eig(&gram, tol)?;
    if values
        .first()
        .is_some_and(|&l| l <= 1e-14 * values.last().copied().unwrap_or(1.0))
    {
        return Err(Error::Singular);
    }
    let inv_sqrt = ComplexMatrix::from_fn(vectors.rows(), vectors.cols(), |r, c| {
        vectors[(r, c)] / values[c].sqrt()
    });
    a.matmul(&inv_sqrt.matmul(&vectors.adjoint())?)
}

/// `(a + a^*) / 2`.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Frobenius inner product `tr(a^* b)`.
pub fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    assert_eq!(a.shape(), b.shape(), "inner shape mismatch");
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum()
}
