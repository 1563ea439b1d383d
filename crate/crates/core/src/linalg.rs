//! Small dense real linear algebra.
//!
//! Everything here works on row-major `f64` storage and is sized for the
//! system dimensions this crate deals with (n ≤ 32, frames of 2n × n). The
//! symmetric eigensolver is a cyclic Jacobi iteration, which keeps the
//! eigenvector matrix orthogonal to working precision regardless of
//! eigenvalue clustering.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{MaslovError, Result};

/// Largest system dimension accepted by [`SymMatrix`].
pub const MAX_DIM: usize = 32;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for (i, &vi) in v.iter().enumerate() {
            self[(i, j)] = vi;
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn symmetric_part(&self) -> Matrix {
        assert!(self.is_square());
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        s
    }

    /// Largest entry of `A − Aᵀ` in absolute value.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Stacks `top` over `bottom`.
    pub fn vstack(top: &Matrix, bottom: &Matrix) -> Matrix {
        assert_eq!(top.cols, bottom.cols);
        let mut data = top.data.clone();
        data.extend_from_slice(&bottom.data);
        Matrix {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        }
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Removes row `r` and column `c`.
    pub fn minor(&self, r: usize, c: usize) -> Matrix {
        let mut out = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for i in (0..self.rows).filter(|&i| i != r) {
            for j in (0..self.cols).filter(|&j| j != c) {
                out.push(self[(i, j)]);
            }
        }
        Matrix {
            rows: self.rows - 1,
            cols: self.cols - 1,
            data: out,
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:>12.6e}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Real symmetric n × n matrix, 1 ≤ n ≤ [`MAX_DIM`].
#[derive(Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Accepts `m` if it is symmetric to within `1e-12 · max(1, max|m_ij|)`,
    /// then averages it with its transpose.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(MaslovError::InvalidInput(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        if n == 0 || n > MAX_DIM {
            return Err(MaslovError::InvalidInput(format!(
                "dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        if !m.is_finite() {
            return Err(MaslovError::InvalidInput("non-finite entry".into()));
        }
        let tol = 1e-12 * m.max_abs().max(1.0);
        let asym = m.asymmetry();
        if asym > tol {
            return Err(MaslovError::InvalidInput(format!(
                "matrix is not symmetric (asymmetry {asym:e} > {tol:e})"
            )));
        }
        Ok(SymMatrix(m.symmetric_part()))
    }

    /// Symmetrizes `m` unconditionally. Used where asymmetry is numerical
    /// drift that the caller has already measured.
    pub fn symmetrize(m: &Matrix) -> Self {
        assert!(m.is_square() && m.rows() >= 1);
        SymMatrix(m.symmetric_part())
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(Matrix::zeros(n, n))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        SymMatrix(Matrix::from_diag(diag))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        SymMatrix::new(Matrix::from_rows(rows))
    }

    /// Builds from row-major upper-triangle entries `a11, a12, .., a1n, a22, .., ann`.
    pub fn from_upper_triangle(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(MaslovError::InvalidInput(format!(
                "expected {} upper-triangle entries for n = {n}, got {}",
                n * (n + 1) / 2,
                upper.len()
            )));
        }
        let mut m = Matrix::zeros(n, n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in i..n {
                let v = *it.next().expect("length checked");
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix::new(m)
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(self.0.scale(s))
    }

    /// `λI − self`.
    pub fn shifted_negation(&self, lambda: f64) -> SymMatrix {
        let mut m = self.0.scale(-1.0);
        for i in 0..self.n() {
            m[(i, i)] += lambda;
        }
        SymMatrix(m)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.0)
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigDecomp {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver with a threshold sweep.
///
/// Stops once the off-diagonal Frobenius norm drops below `1e-14 · ‖A‖_F`.
pub fn sym_eig(a: &SymMatrix) -> Result<EigDecomp> {
    let n = a.n();
    let mut m = a.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    let target = 1e-14 * scale;

    if scale > 0.0 {
        let mut sweep = 0;
        while off_diagonal_norm(&m) > target {
            if sweep == JACOBI_MAX_SWEEPS {
                return Err(MaslovError::InvalidInput(format!(
                    "Jacobi iteration did not converge after {JACOBI_MAX_SWEEPS} sweeps"
                )));
            }
            // Threshold only during the first sweeps; afterwards rotate every
            // non-negligible entry.
            let threshold = if sweep < 3 {
                0.2 * off_diagonal_norm(&m) / (n * n) as f64
            } else {
                0.0
            };
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= threshold || apq == 0.0 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate(&mut m, &mut v, p, q, c, s);
                }
            }
            sweep += 1;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(EigDecomp { values, vectors })
}

fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    // m ← Jᵀ m J with J the (p, q) plane rotation.
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Principal square root of a symmetric positive definite matrix.
pub fn sqrt_spd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    let min = eig.values[0];
    if min <= 0.0 {
        return Err(MaslovError::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(reconstruct(&eig, f64::sqrt))
}

/// `V · diag(f(μ)) · Vᵀ`.
pub fn reconstruct(eig: &EigDecomp, f: impl Fn(f64) -> f64) -> SymMatrix {
    let n = eig.values.len();
    let mut out = Matrix::zeros(n, n);
    for (k, &mu) in eig.values.iter().enumerate() {
        let fk = f(mu);
        for i in 0..n {
            let vik = eig.vectors[(i, k)] * fk;
            for j in 0..n {
                out[(i, j)] += vik * eig.vectors[(j, k)];
            }
        }
    }
    SymMatrix::symmetrize(&out)
}

/// Determinant. Cofactor expansion for n ≤ 4, partial-pivot LU beyond.
pub fn det(a: &Matrix) -> f64 {
    assert!(a.is_square());
    match a.rows() {
        0 => 1.0,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        n if n <= 4 => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[(0, j)] * det(&a.minor(0, j))
            })
            .sum(),
        _ => lu_det(a),
    }
}

fn lu_det(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m = a.clone();
    let mut d = 1.0;
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty range");
        if pmax == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            d = -d;
        }
        let pivot = m[(k, k)];
        d *= pivot;
        for i in (k + 1)..n {
            let f = m[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in (k + 1)..n {
                m[(i, j)] -= f * m[(k, j)];
            }
        }
    }
    d
}

/// Adjugate and determinant, computed from minors so the result stays exact
/// on singular input: `adj · a = det · I`.
pub fn adjugate_det(a: &Matrix) -> (Matrix, f64) {
    assert!(a.is_square(), "adjugate needs a square matrix");
    let n = a.rows();
    if n == 1 {
        return (Matrix::identity(1), a[(0, 0)]);
    }
    let mut adj = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // adj_ij = (−1)^{i+j} M_ji
            adj[(i, j)] = sign * det(&a.minor(j, i));
        }
    }
    (adj, det(a))
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
///
/// The implied triangular factor has a positive diagonal, so for a stacked
/// frame the sign of the top-block determinant is unchanged.
pub fn orthonormalize(m: &Matrix) -> Result<Matrix> {
    let (rows, cols) = (m.rows(), m.cols());
    let scale = (0..cols).map(|j| norm(&m.column(j))).fold(0.0, f64::max);
    let tol = 1e-13 * scale;
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = m.column(j);
        for _pass in 0..2 {
            for qk in &q {
                let r = dot(qk, &v);
                for i in 0..rows {
                    v[i] -= r * qk[i];
                }
            }
        }
        let nv = norm(&v);
        if !(nv > tol) {
            return Err(MaslovError::DegenerateFrame {
                column: j,
                pivot: nv,
            });
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        q.push(v);
    }
    let mut out = Matrix::zeros(rows, cols);
    for (j, col) in q.iter().enumerate() {
        out.set_column(j, col);
    }
    Ok(out)
}

/// Solves `a x = b` by partial-pivot Gaussian elimination (`b` may have many columns).
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    assert!(a.is_square() && a.rows() == b.rows());
    let n = a.rows();
    let mut m = a.clone();
    let mut r = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty range");
        if pmax <= 1e-300 * scale {
            return Err(MaslovError::InvalidInput("singular matrix in solve".into()));
        }
        if piv != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            for j in 0..r.cols() {
                let t = r[(k, j)];
                r[(k, j)] = r[(piv, j)];
                r[(piv, j)] = t;
            }
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            for j in 0..r.cols() {
                r[(i, j)] -= f * r[(k, j)];
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..r.cols() {
            let mut s = r[(k, j)];
            for c in (k + 1)..n {
                s -= m[(k, c)] * r[(c, j)];
            }
            r[(k, j)] = s / m[(k, k)];
        }
    }
    Ok(r)
}

/// Orthogonal projector onto the column span of `m`: `m (mᵀm)⁻¹ mᵀ`.
pub fn projector(m: &Matrix) -> Result<Matrix> {
    let mt = m.transpose();
    let gram = &mt * m;
    let inv_mt = solve(&gram, &mt)?;
    Ok(m * &inv_mt)
}

/// Signature (positives minus negatives) of a symmetric matrix whose
/// eigenvalues are all at least `tol` away from zero; `None` otherwise.
pub fn signature(a: &SymMatrix, tol: f64) -> Result<Option<i32>> {
    let eig = sym_eig(a)?;
    if eig.values.iter().any(|v| v.abs() < tol) {
        return Ok(None);
    }
    Ok(Some(eig.values.iter().map(|v| v.signum() as i32).sum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_eig_invariants(a: &SymMatrix, e: &EigDecomp) {
        let n = a.n();
        let vtv = &e.vectors.transpose() * &e.vectors;
        let id = Matrix::identity(n);
        assert!((&vtv - &id).max_abs() <= 1e-10);
        for j in 0..n {
            let v = e.vector(j);
            let av = a.as_matrix().mul_vec(&v);
            for i in 0..n {
                assert!((av[i] - e.values[j] * v[i]).abs() <= 1e-10 * e.values[j].abs().max(1.0));
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_identity() {
        let a = SymMatrix::identity(3);
        let e = sym_eig(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert_eig_invariants(&a, &e);
    }

    #[test]
    fn eig_diagonal_sorted() {
        let a = SymMatrix::from_diag(&[2.0, -1.0]);
        let e = sym_eig(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0]);
        assert_abs_diff_eq!(e.vectors[(1, 0)].abs(), 1.0);
        assert_abs_diff_eq!(e.vectors[(0, 1)].abs(), 1.0);
    }

    #[test]
    fn eig_two_by_two() {
        // char. polynomial (2 − μ)² − 1 = 0 → μ = 1, 3
        let a = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eig(&a).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert_abs_diff_eq!(dot(&v0, &[r, -r]).abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dot(&v1, &[r, r]).abs(), 1.0, epsilon = 1e-14);
        assert_eig_invariants(&a, &e);
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.1, 1.0]]);
        assert!(matches!(
            SymMatrix::new(m),
            Err(MaslovError::InvalidInput(_))
        ));
    }

    #[test]
    fn sqrt_cases() {
        let r = sqrt_spd(&SymMatrix::identity(2)).unwrap();
        assert!((r.as_matrix() - &Matrix::identity(2)).max_abs() < 1e-15);
        let r = sqrt_spd(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_abs_diff_eq!(r.get(0, 0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.get(1, 1), 3.0, epsilon = 1e-14);
        let a = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let r = sqrt_spd(&a).unwrap();
        let rr = r.as_matrix() * r.as_matrix();
        assert!((&rr - a.as_matrix()).max_abs() <= 1e-10);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = SymMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(
            sqrt_spd(&a),
            Err(MaslovError::NotPositiveDefinite { .. })
        ));
        let a = SymMatrix::from_diag(&[1.0, -3.0]);
        assert!(sqrt_spd(&a).is_err());
    }

    #[test]
    fn adjugate_small_cases() {
        let (adj, d) = adjugate_det(&Matrix::from_rows(&[[5.0]]));
        assert_eq!(adj.as_slice(), &[1.0]);
        assert_eq!(d, 5.0);

        let (a, b, c, dd) = (1.5, -2.0, 0.25, 3.0);
        let (adj, d) = adjugate_det(&Matrix::from_rows(&[[a, b], [c, dd]]));
        assert_eq!(adj.as_slice(), &[dd, -b, -c, a]);
        assert_eq!(d, a * dd - b * c);

        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        let (adj, d) = adjugate_det(&m);
        assert_eq!(d, 0.0);
        assert_eq!(adj.as_slice(), &[4.0, -2.0, -2.0, 1.0]);
        assert_eq!((&adj * &m).max_abs(), 0.0);
    }

    #[test]
    fn adjugate_large_singular() {
        // rank 4 of 6: rows 4 and 5 are combinations of the others
        let mut rows = vec![
            vec![1.0, 2.0, 0.5, -1.0, 3.0, 0.2],
            vec![0.0, 1.0, -2.0, 4.0, 1.0, 1.1],
            vec![2.0, -1.0, 1.0, 0.0, 0.5, -0.3],
            vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        ];
        let r4: Vec<f64> = (0..6).map(|j| rows[0][j] - rows[1][j]).collect();
        let r5: Vec<f64> = (0..6).map(|j| 2.0 * rows[2][j] + rows[3][j]).collect();
        rows.push(r4);
        rows.push(r5);
        let m = Matrix::from_rows(&rows);
        let (adj, d) = adjugate_det(&m);
        assert!(d.abs() < 1e-12);
        assert!((&adj * &m).max_abs() < 1e-9);
    }

    #[test]
    fn det_lu_matches_cofactor() {
        let m = Matrix::from_rows(&[
            [2.0, 1.0, 0.0, 3.0],
            [1.0, -1.0, 2.0, 0.5],
            [0.0, 4.0, 1.0, 1.0],
            [1.5, 0.0, -2.0, 2.0],
        ]);
        assert_abs_diff_eq!(det(&m), lu_det(&m), epsilon = 1e-12);
    }

    #[test]
    fn orthonormalize_cases() {
        let q = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
        let out = orthonormalize(&q).unwrap();
        assert!((&out - &q).max_abs() <= 1e-14);

        let scaled = q.scale(10.0);
        let out = orthonormalize(&scaled).unwrap();
        assert!((&out - &q).max_abs() <= 1e-14);

        let deficient = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [0.0, 0.0], [3.0, 6.0]]);
        assert!(matches!(
            orthonormalize(&deficient),
            Err(MaslovError::DegenerateFrame { column: 1, .. })
        ));
    }

    #[test]
    fn signature_counts() {
        let a = SymMatrix::from_diag(&[-1.0, 2.0, 3.0]);
        assert_eq!(signature(&a, 1e-12).unwrap(), Some(1));
        let a = SymMatrix::from_diag(&[0.0, 2.0]);
        assert_eq!(signature(&a, 1e-12).unwrap(), None);
    }
}
