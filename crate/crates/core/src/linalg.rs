//! Dense complex linear algebra.
//!
//! Square systems go through LU with partial pivoting, tall systems through
//! Householder QR with column pivoting, so [`Factorization::solve`] applies the
//! Moore-Penrose pseudo-inverse whenever the matrix has full column rank.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{cz, Scalar, C};

/// Relative pivot threshold below which a factorization is flagged rank deficient.
pub const RANK_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix has fewer rows ({rows}) than columns ({cols})")]
    Underdetermined { rows: usize, cols: usize },
    #[error("matrix is rank deficient")]
    RankDeficient,
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![cz(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C<T>] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|z| *z = cz());
    }

    /// Resizes to `rows x cols`, zeroing every entry.
    pub fn reset(&mut self, rows: usize, cols: usize) {
        self.rows = rows;
        self.cols = cols;
        self.data.clear();
        self.data.resize(rows * cols, cz());
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Result<Vec<C<T>>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(cz(), |acc, (a, b)| acc + *a * *b)
            })
            .collect())
    }

    pub fn mul(&self, other: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
        if other.rows != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }
}

impl<T: Scalar> Index<(usize, usize)> for Matrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Euclidean norm, computed with scaling to avoid overflow.
pub fn norm2<T: Scalar>(v: &[C<T>]) -> T {
    let scale = v.iter().fold(T::zero(), |m, z| m.max(z.re.abs()).max(z.im.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let s = v
        .iter()
        .map(|z| {
            let re = z.re / scale;
            let im = z.im / scale;
            re * re + im * im
        })
        .fold(T::zero(), |a, b| a + b);
    scale * s.sqrt()
}

/// Hermitian inner product `<x, y> = sum x_i conj(y_i)`.
pub fn inner<T: Scalar>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    x.iter().zip(y).fold(cz(), |acc, (a, b)| acc + *a * b.conj())
}

/// `‖x - y‖`.
pub fn dist2<T: Scalar>(x: &[C<T>], y: &[C<T>]) -> T {
    let d: Vec<C<T>> = x.iter().zip(y).map(|(a, b)| *a - *b).collect();
    norm2(&d)
}

#[derive(Debug, Clone)]
enum Kind<T: Scalar> {
    /// Packed `L\U` with row permutation.
    Lu { lu: Matrix<T>, perm: Vec<usize> },
    /// Householder vectors stored below the diagonal, `R` on and above it.
    Qr {
        qr: Matrix<T>,
        /// Householder scaling `beta_k` such that `H_k = I - beta_k v_k v_k^H`.
        betas: Vec<T>,
        diag: Vec<C<T>>,
        col_perm: Vec<usize>,
    },
}

/// Reusable factorization of an `m x n` matrix with `m >= n`.
#[derive(Debug, Clone)]
pub struct Factorization<T: Scalar> {
    kind: Kind<T>,
    rows: usize,
    cols: usize,
    rank_deficient: bool,
}

impl<T: Scalar> Factorization<T> {
    pub fn is_lu(&self) -> bool {
        matches!(self.kind, Kind::Lu { .. })
    }

    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Least-squares solution of `A x = b` (the exact solution when square).
    pub fn solve(&self, b: &[C<T>]) -> Result<Vec<C<T>>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                got: b.len(),
            });
        }
        if self.rank_deficient {
            return Err(LinalgError::RankDeficient);
        }
        match &self.kind {
            Kind::Lu { lu, perm } => Ok(lu_solve(lu, perm, b)),
            Kind::Qr {
                qr,
                betas,
                diag,
                col_perm,
            } => Ok(qr_solve(qr, betas, diag, col_perm, b)),
        }
    }

    /// Multiplies the factored matrix back together, `P^T L U` or `Q R P^T`.
    pub fn reconstruct(&self) -> Matrix<T> {
        match &self.kind {
            Kind::Lu { lu, perm } => {
                let n = self.cols;
                let mut out = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut s = cz();
                        for k in 0..=i.min(j) {
                            let l = if k == i { C::new(T::one(), T::zero()) } else { lu[(i, k)] };
                            s = s + l * lu[(k, j)];
                        }
                        out[(perm[i], j)] = s;
                    }
                }
                out
            }
            Kind::Qr {
                qr,
                betas,
                diag,
                col_perm,
            } => {
                let (m, n) = (self.rows, self.cols);
                let mut r = Matrix::zeros(m, n);
                for i in 0..n {
                    r[(i, i)] = diag[i];
                    for j in i + 1..n {
                        r[(i, j)] = qr[(i, j)];
                    }
                }
                // Q R = H_0 ... H_{n-1} R
                for k in (0..n).rev() {
                    for j in 0..n {
                        apply_householder(qr, k, betas[k], &mut r, j);
                    }
                }
                let mut out = Matrix::zeros(m, n);
                for i in 0..m {
                    for j in 0..n {
                        out[(i, col_perm[j])] = r[(i, j)];
                    }
                }
                out
            }
        }
    }
}

/// Factorizes `a` (LU when square, column-pivoted QR when tall).
pub fn factorize<T: Scalar>(a: &Matrix<T>) -> Result<Factorization<T>, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(LinalgError::Underdetermined { rows: m, cols: n });
    }
    if m == n {
        Ok(lu_factor(a.clone()))
    } else {
        Ok(qr_factor(a.clone()))
    }
}

/// Factorizes a square matrix in place of a scratch copy, reusing its storage.
pub fn factorize_owned<T: Scalar>(a: Matrix<T>) -> Result<Factorization<T>, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(LinalgError::Underdetermined { rows: m, cols: n });
    }
    if m == n {
        Ok(lu_factor(a))
    } else {
        Ok(qr_factor(a))
    }
}

fn pivots_deficient<T: Scalar>(pivots: impl Iterator<Item = T> + Clone) -> bool {
    let max = pivots.clone().fold(T::zero(), T::max);
    if max == T::zero() || !max.is_finite() {
        return true;
    }
    let tol = T::lit(RANK_TOL) * max;
    pivots.into_iter().any(|p| !(p >= tol))
}

fn lu_factor<T: Scalar>(mut lu: Matrix<T>) -> Factorization<T> {
    let n = lu.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].norm_sqr();
        for i in k + 1..n {
            let v = lu[(i, k)].norm_sqr();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        if pivot.norm_sqr() == T::zero() {
            continue;
        }
        let inv = pivot.inv();
        for i in k + 1..n {
            let f = lu[(i, k)] * inv;
            lu[(i, k)] = f;
            if f.re == T::zero() && f.im == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] = lu[(i, j)] - f * u;
            }
        }
    }
    let rank_deficient = pivots_deficient((0..n).map(|i| lu[(i, i)].norm()));
    Factorization {
        kind: Kind::Lu { lu, perm },
        rows: n,
        cols: n,
        rank_deficient,
    }
}

fn lu_solve<T: Scalar>(lu: &Matrix<T>, perm: &[usize], b: &[C<T>]) -> Vec<C<T>> {
    let n = lu.rows();
    let mut x: Vec<C<T>> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        let mut s = x[i];
        let row = lu.row(i);
        for j in 0..i {
            s = s - row[j] * x[j];
        }
        x[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        let row = lu.row(i);
        for j in i + 1..n {
            s = s - row[j] * x[j];
        }
        x[i] = s / row[i];
    }
    x
}

/// Applies `H_k = I - beta v v^H` (v stored in column k of `qr`, rows k..m, with v_k = 1)
/// to column `j` of `target`.
fn apply_householder<T: Scalar>(qr: &Matrix<T>, k: usize, beta: T, target: &mut Matrix<T>, j: usize) {
    if beta == T::zero() {
        return;
    }
    let m = qr.rows();
    let mut s = target[(k, j)];
    for i in k + 1..m {
        s = s + qr[(i, k)].conj() * target[(i, j)];
    }
    let s = s * beta;
    target[(k, j)] = target[(k, j)] - s;
    for i in k + 1..m {
        target[(i, j)] = target[(i, j)] - qr[(i, k)] * s;
    }
}

fn qr_factor<T: Scalar>(mut a: Matrix<T>) -> Factorization<T> {
    let (m, n) = (a.rows(), a.cols());
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut betas = vec![T::zero(); n];
    let mut diag = vec![cz(); n];
    let mut col_norms: Vec<T> = (0..n)
        .map(|j| (0..m).fold(T::zero(), |s, i| s + a[(i, j)].norm_sqr()))
        .collect();
    for k in 0..n {
        // column pivoting on remaining norms
        let (p, _) = col_norms
            .iter()
            .enumerate()
            .skip(k)
            .fold((k, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        if p != k {
            for i in 0..m {
                a.data.swap(i * n + k, i * n + p);
            }
            col_perm.swap(k, p);
            col_norms.swap(k, p);
        }
        let xnorm = (k..m).fold(T::zero(), |s, i| s + a[(i, k)].norm_sqr()).sqrt();
        if xnorm == T::zero() {
            diag[k] = cz();
            betas[k] = T::zero();
            continue;
        }
        let x0 = a[(k, k)];
        let phase = if x0.norm() == T::zero() {
            C::new(T::one(), T::zero())
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        // v = x - alpha e1, normalized so v_k = 1
        let v0 = x0 - alpha;
        let inv_v0 = v0.inv();
        for i in k + 1..m {
            a[(i, k)] = a[(i, k)] * inv_v0;
        }
        let vnorm_sq = T::one() + (k + 1..m).fold(T::zero(), |s, i| s + a[(i, k)].norm_sqr());
        let beta = T::lit(2.0) / vnorm_sq;
        betas[k] = beta;
        diag[k] = alpha;
        for j in k + 1..n {
            let mut s = a[(k, j)];
            for i in k + 1..m {
                s = s + a[(i, k)].conj() * a[(i, j)];
            }
            let s = s * beta;
            a[(k, j)] = a[(k, j)] - s;
            for i in k + 1..m {
                let v = a[(i, k)];
                a[(i, j)] = a[(i, j)] - v * s;
            }
        }
        for (j, cn) in col_norms.iter_mut().enumerate().skip(k + 1) {
            *cn = (k + 1..m).fold(T::zero(), |s, i| s + a[(i, j)].norm_sqr());
        }
    }
    let rank_deficient = pivots_deficient(diag.iter().map(|d| d.norm()));
    Factorization {
        kind: Kind::Qr {
            qr: a,
            betas,
            diag,
            col_perm,
        },
        rows: m,
        cols: n,
        rank_deficient,
    }
}

fn qr_solve<T: Scalar>(qr: &Matrix<T>, betas: &[T], diag: &[C<T>], col_perm: &[usize], b: &[C<T>]) -> Vec<C<T>> {
    let (m, n) = (qr.rows(), qr.cols());
    let mut y = Matrix::from_rows(&b.iter().map(|z| vec![*z]).collect::<Vec<_>>());
    // y = Q^H b = H_{n-1} ... H_0 b
    for k in 0..n {
        apply_householder(qr, k, betas[k], &mut y, 0);
    }
    let mut z = vec![cz(); n];
    for i in (0..n).rev() {
        let mut s = y[(i, 0)];
        for j in i + 1..n {
            s = s - qr[(i, j)] * z[j];
        }
        z[i] = s / diag[i];
    }
    debug_assert!(m >= n);
    let mut x = vec![cz(); n];
    for (j, &p) in col_perm.iter().enumerate() {
        x[p] = z[j];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix<f64> {
        let mut a = Matrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                a[(i, j)] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        a
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C<f64>> {
        (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// Naive Gaussian elimination without pivoting on a well-conditioned system.
    fn gauss_oracle(a: &Matrix<f64>, b: &[C<f64>]) -> Vec<C<f64>> {
        let n = a.rows();
        let mut m: Vec<Vec<C<f64>>> = (0..n)
            .map(|i| {
                let mut r = a.row(i).to_vec();
                r.push(b[i]);
                r
            })
            .collect();
        for k in 0..n {
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..=n {
                    let v = m[k][j];
                    m[i][j] -= f * v;
                }
            }
        }
        let mut x = vec![c(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = m[i][n];
            for j in i + 1..n {
                s -= m[i][j] * x[j];
            }
            x[i] = s / m[i][i];
        }
        x
    }

    #[test]
    fn identity_solve_is_identity() {
        let f = factorize(&Matrix::<f64>::identity(4)).unwrap();
        assert!(f.is_lu());
        assert!(!f.rank_deficient());
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 0.0), c(7.0, -1.0)];
        assert_eq!(f.solve(&b).unwrap(), b);
    }

    #[test]
    fn scalar_solve() {
        let a = Matrix::from_rows(&[vec![c(2.0, 0.0)]]);
        let x = factorize(&a).unwrap().solve(&[c(6.0, 0.0)]).unwrap();
        assert!((x[0] - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn swap_matrix_needs_pivoting() {
        let a = Matrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        let f = factorize(&a).unwrap();
        assert!(!f.rank_deficient());
        let x = f.solve(&[c(2.0, 0.0), c(5.0, 1.0)]).unwrap();
        assert_eq!(x, vec![c(5.0, 1.0), c(2.0, 0.0)]);
    }

    #[test]
    fn random_square_residual_and_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 6, 6);
            let b = random_vec(&mut rng, 6);
            let f = factorize(&a).unwrap();
            let x = f.solve(&b).unwrap();
            let r = a.mul_vec(&x).unwrap();
            let res: Vec<_> = r.iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm2(&res) / norm2(&b) < 1e-12);
            let oracle = gauss_oracle(&a, &b);
            assert!(dist2(&x, &oracle) / norm2(&oracle) < 1e-10);
            let rec = f.reconstruct();
            let mut diff = rec.clone();
            for i in 0..6 {
                for j in 0..6 {
                    diff[(i, j)] = rec[(i, j)] - a[(i, j)];
                }
            }
            assert!(diff.norm_fro() / a.norm_fro() < 1e-13);
        }
    }

    #[test]
    fn tall_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 3, 2);
            let b = random_vec(&mut rng, 3);
            let f = factorize(&a).unwrap();
            assert!(!f.is_lu());
            let x = f.solve(&b).unwrap();
            // oracle: (A^H A) x = A^H b
            let ah = a.adjoint();
            let aha = ah.mul(&a).unwrap();
            let ahb = ah.mul_vec(&b).unwrap();
            let oracle = gauss_oracle(&aha, &ahb);
            assert!(dist2(&x, &oracle) / norm2(&oracle) < 1e-10);
            // residual orthogonal to the column space
            let r: Vec<_> = a.mul_vec(&x).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm2(&ah.mul_vec(&r).unwrap()) / norm2(&b) < 1e-10);
        }
    }

    #[test]
    fn tall_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 7, 4);
        let rec = factorize(&a).unwrap().reconstruct();
        let mut err = 0.0f64;
        for i in 0..7 {
            for j in 0..4 {
                err = err.max((rec[(i, j)] - a[(i, j)]).norm());
            }
        }
        assert!(err < 1e-13);
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let a = Matrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]);
        let f = factorize(&a).unwrap();
        assert!(f.rank_deficient());
        assert_eq!(f.solve(&[c(1.0, 0.0), c(1.0, 0.0)]), Err(LinalgError::RankDeficient));

        let t = Matrix::from_rows(&[
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 1.0), c(0.0, 1.0)],
        ]);
        assert!(factorize(&t).unwrap().rank_deficient());
    }

    #[test]
    fn shape_errors() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(factorize(&a), Err(LinalgError::Underdetermined { .. })));
        let f = factorize(&Matrix::<f64>::identity(2)).unwrap();
        assert!(matches!(f.solve(&[c(1.0, 0.0)]), Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn norms() {
        assert_eq!(norm2(&[c(3.0, 0.0), c(4.0, 0.0)]), 5.0);
        assert_eq!(norm2(&[c(0.0, 1.0), c(0.0, 0.0)]), 1.0);
        assert_eq!(norm2::<f64>(&[]), 0.0);
        let v = vec![c(1.0, -2.0), c(0.5, 3.0)];
        let alpha = c(-2.0, 1.5);
        let sv: Vec<_> = v.iter().map(|z| alpha * z).collect();
        assert!((norm2(&sv) - alpha.norm() * norm2(&v)).abs() < 1e-15 * norm2(&sv));
        // no overflow on huge entries
        assert!(norm2(&[c(1e300, 0.0), c(1e300, 0.0)]).is_finite());
    }

    #[test]
    fn f32_solve() {
        let a = Matrix::<f32>::from_rows(&[
            vec![C::new(2.0, 0.0), C::new(1.0, 0.0)],
            vec![C::new(1.0, 0.0), C::new(3.0, 0.0)],
        ]);
        let x = factorize(&a).unwrap().solve(&[C::new(3.0, 0.0), C::new(4.0, 0.0)]).unwrap();
        assert!((x[0] - C::new(1.0, 0.0)).norm() < 1e-5);
        assert!((x[1] - C::new(1.0, 0.0)).norm() < 1e-5);
    }

    proptest::proptest! {
        #[test]
        fn full_rank_roundtrip(seed in 0u64..10_000, m in 2usize..7, extra in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = m;
            let a = random_matrix(&mut rng, m + extra, n);
            let x = random_vec(&mut rng, n);
            let ax = a.mul_vec(&x).unwrap();
            let f = factorize(&a).unwrap();
            let y = f.solve(&ax).unwrap();
            let ay = a.mul_vec(&y).unwrap();
            proptest::prop_assert!(dist2(&ay, &ax) / norm2(&ax) < 1e-10);
        }
    }
}
