//! Dense row-major matrices and a one-sided Jacobi SVD.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        write!(f, "]")
    }
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
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", rows * cols),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    ///
    /// Panics on ragged input; intended for literals in tests and examples.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", other.rows),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`. Panics on shape mismatch.
    pub fn frobenius_distance(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        for x in &mut self.data {
            *x = f(*x);
        }
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                out.set(i, k, self.get(i, j));
            }
        }
        out
    }
}

/// Thin singular value decomposition `m = u * diag(sigma) * v^T`.
///
/// With `k = min(rows, cols)`, `u` is `rows x k`, `v` is `cols x k`, and
/// `sigma` is sorted in non-increasing order. The first component of each
/// left singular vector whose magnitude exceeds `1e-12` is non-negative.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|s| s)
    }

    /// `u * diag(f(sigma)) * v^T`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let m = self.u.nrows();
        let n = self.v.nrows();
        let mut out = Matrix::zeros(m, n);
        for (k, &s) in self.sigma.iter().enumerate() {
            let s = f(s);
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let us = self.u.get(i, k) * s;
                if us == 0.0 {
                    continue;
                }
                let row = &mut out.data[i * n..(i + 1) * n];
                for (j, o) in row.iter_mut().enumerate() {
                    *o += us * self.v.get(j, k);
                }
            }
        }
        out
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }
}

const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 80;
const SIGN_EPS: f64 = 1e-12;

pub fn svd(m: &Matrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::NonFinite("svd input".into()));
    }
    let mut out = if m.nrows() >= m.ncols() {
        let (u, sigma, v) = jacobi_tall(m);
        Svd { u, sigma, v }
    } else {
        let (u, sigma, v) = jacobi_tall(&m.transpose());
        Svd { u: v, sigma, v: u }
    };
    fix_signs(&mut out);
    Ok(out)
}

/// One-sided (Hestenes) Jacobi on the columns of a matrix with
/// `rows >= cols`, so the rotations act on the smaller dimension.
fn jacobi_tall(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let rows = m.nrows();
    let n = m.ncols();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                let (left, right) = cols.split_at_mut(q);
                rotate(&mut left[p], &mut right[0], c, s);
                let (left, right) = vcols.split_at_mut(q);
                rotate(&mut left[p], &mut right[0], c, s);
                norms[p] = dot(&cols[p], &cols[p]);
                norms[q] = dot(&cols[q], &cols[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma_raw: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma_raw[b].total_cmp(&sigma_raw[a]).then(a.cmp(&b)));

    let sigma_max = order.first().map_or(0.0, |&k| sigma_raw[k]);
    let cutoff = sigma_max * (rows.max(n) as f64) * f64::EPSILON;

    let mut u = Matrix::zeros(rows, n);
    let mut v = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &src) in order.iter().enumerate() {
        let s = sigma_raw[src];
        if s > cutoff && s > 0.0 {
            for i in 0..rows {
                u.set(i, k, cols[src][i] / s);
            }
            sigma.push(s);
        } else {
            sigma.push(0.0);
            missing.push(k);
        }
        for i in 0..n {
            v.set(i, k, vcols[src][i]);
        }
    }
    if !missing.is_empty() {
        complete_orthonormal(&mut u, &missing);
    }
    (u, sigma, v)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column, by Gram-Schmidt over the standard basis.
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    let rows = u.nrows();
    let k = u.ncols();
    let mut filled: Vec<bool> = vec![true; k];
    for &j in missing {
        filled[j] = false;
    }
    let mut candidate = 0usize;
    for &j in missing {
        while candidate < rows {
            let mut e = vec![0.0; rows];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for (c, &ok) in filled.iter().enumerate() {
                    if !ok {
                        continue;
                    }
                    let col = u.column(c);
                    let proj = dot(&col, &e);
                    for (x, y) in e.iter_mut().zip(&col) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-8 {
                for i in 0..rows {
                    u.set(i, j, e[i] / norm);
                }
                filled[j] = true;
                break;
            }
        }
    }
}

fn fix_signs(svd: &mut Svd) {
    for k in 0..svd.sigma.len() {
        let lead = (0..svd.u.nrows())
            .map(|i| svd.u.get(i, k))
            .find(|x| x.abs() > SIGN_EPS);
        if matches!(lead, Some(x) if x < 0.0) {
            for i in 0..svd.u.nrows() {
                svd.u.set(i, k, -svd.u.get(i, k));
            }
            for i in 0..svd.v.nrows() {
                svd.v.set(i, k, -svd.v.get(i, k));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn gram_error(q: &Matrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        g.max_abs_diff(&Matrix::identity(q.ncols()))
    }

    #[test]
    fn diagonal_singular_values() {
        let s = svd(&Matrix::from_diag(&[3.0, 1.0])).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-12);
        assert!((s.sigma[1] - 1.0).abs() < 1e-12);

        let s = svd(&Matrix::from_diag(&[1.0, 3.0])).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let s = svd(&Matrix::zeros(3, 4)).unwrap();
        assert!(s.sigma.iter().all(|&x| x == 0.0));
        assert!(gram_error(&s.u) < 1e-12);
        assert!(gram_error(&s.v) < 1e-12);
    }

    #[test]
    fn random_reconstruction_both_orientations() {
        for (r, c, seed) in [(5, 7, 1), (7, 5, 2), (1, 6, 3), (6, 1, 4), (20, 30, 5)] {
            let m = random(r, c, seed);
            let s = svd(&m).unwrap();
            let rel = s.reconstruct().frobenius_distance(&m) / m.frobenius_norm();
            assert!(rel < 1e-8, "{r}x{c}: {rel}");
            assert!(gram_error(&s.u) < 1e-8);
            assert!(gram_error(&s.v) < 1e-8);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_keeps_orthonormal_u() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]);
        let s = svd(&m).unwrap();
        assert!(s.sigma[1] < 1e-12);
        assert!(gram_error(&s.u) < 1e-8);
        assert!(s.reconstruct().frobenius_distance(&m) < 1e-10);
    }

    #[test]
    fn sign_convention() {
        let m = random(6, 4, 9);
        let s = svd(&m).unwrap();
        for k in 0..s.sigma.len() {
            let lead = s.u.column(k).into_iter().find(|x| x.abs() > SIGN_EPS).unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = Matrix::from_rows(&[[1.0, f64::NAN]]);
        assert!(matches!(svd(&m), Err(Error::NonFinite(_))));
    }
}
