//! Dense row-major matrices, the covariance families of the simulation study, and
//! the symmetric PSD square root.

// index loops mirror the textbook Householder/QL recurrences; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use crate::error::{DcfError, Result};
use crate::scalar::Real;

/// Smallest eigenvalue tolerated by [`sym_sqrt`], relative to the largest.
pub const PSD_REJECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(DcfError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(DcfError::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(DcfError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `out = self * v`.
    pub fn mul_vec_into(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, i) in out.iter_mut().zip(0..self.rows) {
            *o = self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum();
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Entrywise max |a - b|; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())),
        )
    }

    /// Largest |a_ij - a_ji| with its position.
    fn asymmetry(&self) -> (T, usize, usize) {
        let mut worst = (T::zero(), 0, 0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self.get(i, j) - self.get(j, i)).abs();
                if gap > worst.0 || gap.is_nan() {
                    worst = (gap, i, j);
                }
            }
        }
        worst
    }
}

/// Symmetric `p x p` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix<T>(Matrix<T>);

impl<T: Real> CovMatrix<T> {
    /// Accepts a square matrix symmetric to within `1e-12` times its largest entry.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(DcfError::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let tol = T::of(1e-12).max(T::epsilon() * T::of(16.0)) * m.max_abs().max(T::one());
        let (gap, row, col) = m.asymmetry();
        if !(gap <= tol) {
            return Err(DcfError::NotSymmetric {
                row,
                col,
                gap: gap.as_f64(),
            });
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.0.get(i, j)
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

/// `Sigma_jk = (1 + |j - k|)^{-1/4}`.
pub fn poly_decay_cov<T: Real>(p: usize) -> CovMatrix<T> {
    let decay: Vec<T> = (0..p)
        .map(|lag| T::of((1.0 + lag as f64).powf(-0.25)))
        .collect();
    CovMatrix(Matrix::from_fn(p, p, |j, k| decay[j.abs_diff(k)]))
}

/// `D * base * D` with `D = diag(sqrt(phi))`, i.e. entry `(j, k)` is
/// `sqrt(phi_j * phi_k) * base_jk`.
pub fn scaled_cov<T: Real>(base: &CovMatrix<T>, phi: &[T]) -> Result<CovMatrix<T>> {
    if phi.len() != base.dim() {
        return Err(DcfError::DimensionMismatch {
            expected: base.dim(),
            found: phi.len(),
        });
    }
    if let Some((index, value)) = phi.iter().enumerate().find(|(_, v)| !(**v > T::zero())) {
        return Err(DcfError::NonPositiveScale {
            index,
            value: value.as_f64(),
        });
    }
    let root: Vec<T> = phi.iter().map(|v| v.sqrt()).collect();
    let p = base.dim();
    Ok(CovMatrix(Matrix::from_fn(p, p, |j, k| {
        root[j] * root[k] * base.get(j, k)
    })))
}

/// Eigen-decomposition of a symmetric matrix: Householder reduction to tridiagonal
/// form followed by the implicit QL algorithm.
///
/// Returns eigenvalues ascending and the matching orthonormal eigenvectors as the
/// columns of the returned matrix.
pub fn sym_eigen<T: Real>(m: &CovMatrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = m.dim();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let mut v: Vec<Vec<T>> = (0..n).map(|i| m.matrix().row(i).to_vec()).collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut v, &mut d, &mut e);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[i][order[j]]);
    (values, vectors)
}

fn tridiagonalize<T: Real>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    d.copy_from_slice(&v[n - 1]);
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                let f = d[j];
                v[j][i] = f;
                let mut g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            let mut f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[k][j] -= upd;
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }

    // Accumulate the Householder reflections.
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[k][j] -= upd;
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

fn tridiagonal_ql<T: Real>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) || sweeps > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
}

/// Symmetric square root `R` with `R * R = M` for a numerically PSD `M`.
///
/// Negative eigenvalues down to `-PSD_REJECT_TOL * lambda_max` are clipped to zero;
/// anything more negative is rejected.
pub fn sym_sqrt<T: Real>(m: &CovMatrix<T>) -> Result<Matrix<T>> {
    let n = m.dim();
    if let Some(pos) = m.matrix().as_slice().iter().position(|x| !x.is_finite()) {
        return Err(DcfError::NonFinite {
            row: pos / n.max(1),
            col: pos % n.max(1),
        });
    }
    let (values, vectors) = sym_eigen(m);
    let Some(&max_eig) = values.last() else {
        return Ok(Matrix::zeros(0, 0));
    };
    let min_eig = values[0];
    if min_eig < -T::of(PSD_REJECT_TOL) * max_eig.max(T::zero()) || (max_eig <= T::zero() && min_eig < T::zero()) {
        return Err(DcfError::NotPsd {
            min_eigenvalue: min_eig.as_f64(),
            max_eigenvalue: max_eig.as_f64(),
        });
    }
    let roots: Vec<T> = values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();

    // R = V diag(sqrt(lambda)) V^T, then averaged with its transpose.
    let mut r = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = T::zero();
            for k in 0..n {
                if roots[k] != T::zero() {
                    acc += vectors.get(i, k) * roots[k] * vectors.get(j, k);
                }
            }
            r.set(i, j, acc);
            r.set(j, i, acc);
        }
    }
    Ok(r)
}
