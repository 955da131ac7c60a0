//! Dense complex square matrices sized for a three-qubit register, plus the
//! few real-valued solvers the estimation code needs.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;

pub type C64 = num_complex::Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// `e^{iφ}`.
pub fn phase(phi: f64) -> C64 {
    C64::new(math::cos(phi), math::sin(phi))
}

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Panics unless `rows` is square.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| {
            let row = rows[i].as_ref();
            assert_eq!(row.len(), dim, "row {i} has wrong length");
            row[j]
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// `A B A†`.
    pub fn sandwich(&self, inner: &Matrix) -> Matrix {
        self.mul(inner).mul(&self.adjoint())
    }

    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let (m, n) = (self.dim, rhs.dim);
        Matrix::from_fn(m * n, |i, j| self[(i / n, j / n)] * rhs[(i % n, j % n)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Matrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        Matrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.add(&rhs.scale_real(-1.0))
    }

    pub fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }

    /// Largest elementwise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x.norm_sqr()).sum())
    }

    /// `max |A A† - I|`.
    pub fn unitarity_error(&self) -> f64 {
        self.mul(&self.adjoint()).max_abs_diff(&Matrix::identity(self.dim))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length differs from matrix dimension");
        (0..self.dim).map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    /// Real part of the diagonal.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in descending order and the unitary whose columns are
/// the matching eigenvectors. Only the Hermitian part of the input is used.
pub fn hermitian_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.dim();
    let mut m = Matrix::from_fn(n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)].norm_sqr();
                }
            }
        }
        if math::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = m[(p, q)];
                let mag = b.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let e = b / mag;
                let (ap, aq) = (m[(p, p)].re, m[(q, q)].re);
                let theta = 0.5 * math::atan2(2.0 * mag, aq - ap);
                let (c, s) = (math::cos(theta), math::sin(theta));
                // J = I except J_pp = J_qq = c, J_pq = s e, J_qp = -s conj(e)
                let jpq = e * s;
                let jqp = -(e.conj()) * s;
                // M <- M J (columns p, q)
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = mkp * c + mkq * jqp;
                    m[(k, q)] = mkp * jpq + mkq * c;
                }
                // M <- J† M (rows p, q)
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = mpk * c + mqk * jqp.conj();
                    m[(q, k)] = mpk * jpq.conj() + mqk * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(y, y)].re.total_cmp(&m[(x, x)].re));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors = Matrix::from_fn(n, |i, j| v[(i, order[j])]);
    (values, vectors)
}

/// `V diag(λ) V†`.
pub fn from_eigen(values: &[f64], vectors: &Matrix) -> Matrix {
    let n = vectors.dim();
    Matrix::from_fn(n, |i, j| (0..n).map(|k| vectors[(i, k)] * values[k] * vectors[(j, k)].conj()).sum())
}

/// Solves the real `n × n` system `a x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major. Returns `None` when singular.
pub fn solve_real(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix/vector size mismatch");
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let norm = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))?;
        if m[pivot * n + col].abs() <= 1e-14 * norm {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Some(x)
}

/// Inverse of a real row-major `n × n` matrix.
pub fn invert_real(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_real(a, &e)?;
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_of_identities() {
        let k = Matrix::identity(2).kron(&Matrix::identity(4));
        assert_eq!(k, Matrix::identity(8));
    }

    #[test]
    fn eigen_reconstructs_hermitian_matrix() {
        let a = Matrix::from_rows(&[
            [c(2.0, 0.0), c(0.3, 0.4), c(0.0, -0.2)],
            [c(0.3, -0.4), c(-1.0, 0.0), c(0.5, 0.0)],
            [c(0.0, 0.2), c(0.5, 0.0), c(0.25, 0.0)],
        ]);
        let (vals, vecs) = hermitian_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        assert!(vecs.unitarity_error() < 1e-12);
        assert!(from_eigen(&vals, &vecs).max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn eigen_of_diagonal_is_sorted_diagonal() {
        let (vals, _) = hermitian_eigen(&Matrix::from_real_diagonal(&[0.1, 0.7, -0.2, 0.4]));
        assert_eq!(vals, [0.7, 0.4, 0.1, -0.2]);
    }

    #[test]
    fn solve_and_invert() {
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let x = solve_real(&a, &[1.0, 2.0, 3.0]).unwrap();
        let back: Vec<f64> = (0..3).map(|r| (0..3).map(|k| a[r * 3 + k] * x[k]).sum()).collect();
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-13);
        }
        let inv = invert_real(&a, 3).unwrap();
        for r in 0..3 {
            for col in 0..3 {
                let v: f64 = (0..3).map(|k| a[r * 3 + k] * inv[k * 3 + col]).sum();
                assert!((v - if r == col { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_system_is_reported() {
        assert!(solve_real(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0]).is_none());
    }
}
