use std::fmt;

use super::LinalgError;

/// Dense real matrix stored row-major.
///
/// Every constructor rejects non-finite entries, so any `Matrix` in hand
/// holds only finite values.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// A feature map is an `n x d_h` matrix of node features.
pub type FeatureMap = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let ncols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(LinalgError::RaggedRow {
                    row: i,
                    expected: ncols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Column vector (`len x 1`).
    pub fn column(values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self, LinalgError> {
        if cols.is_empty() {
            return Err(LinalgError::EmptyMatrix);
        }
        let rows = cols[0].len();
        for (j, c) in cols.iter().enumerate() {
            if c.len() != rows {
                return Err(LinalgError::RaggedRow {
                    row: j,
                    expected: rows,
                    actual: c.len(),
                });
            }
        }
        let mut data = vec![0.0; rows * cols.len()];
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                data[i * cols.len() + j] = *v;
            }
        }
        Self::new(rows, cols.len(), data)
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            let dst = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * p..(k + 1) * p];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Matrix::new(n, p, out).map_err(|_| LinalgError::Overflow { op: "matmul" })
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "t_matmul",
                left: (self.cols, self.rows),
                right: other.shape(),
            });
        }
        let (n, m, p) = (self.cols, self.rows, other.cols);
        let mut out = vec![0.0; n * p];
        for k in 0..m {
            let arow = self.row(k);
            let brow = other.row(k);
            for (i, a) in arow.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                let dst = &mut out[i * p..(i + 1) * p];
                for (d, b) in dst.iter_mut().zip(brow) {
                    *d += a * b;
                }
            }
        }
        Matrix::new(n, p, out).map_err(|_| LinalgError::Overflow { op: "t_matmul" })
    }

    /// Gram matrix `selfᵀ self`.
    pub fn gram(&self) -> Matrix {
        let mut g = self.t_matmul(self).expect("gram of a finite matrix is well-shaped");
        g.symmetrize();
        g
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "matvec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ x`.
    pub fn t_matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "t_matvec",
                left: (self.cols, self.rows),
                right: (x.len(), 1),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix, LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Matrix::new(self.rows, self.cols, data).map_err(|_| LinalgError::Overflow { op })
    }

    /// `self - x yᵀ` for vectors `x` (len rows) and `y` (len cols).
    pub fn rank_one_update(&self, x: &[f64], y: &[f64], alpha: f64) -> Matrix {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + alpha * x[i] * y[j])
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Replace `self` with `(self + selfᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// `‖self − selfᵀ‖_F`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self.get(i, j) - self.get(j, i);
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// Largest singular value by power iteration on `MᵀM`, run to
    /// convergence (relative change below `tol`).
    pub fn spectral_norm(&self, tol: f64) -> f64 {
        if self.max_abs() == 0.0 {
            return 0.0;
        }
        let gram = self.gram();
        let d = self.cols;
        // Deterministic, non-degenerate start vector.
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3).collect();
        normalize(&mut v);
        let mut est = 0.0_f64;
        for _ in 0..10_000 {
            let mut w = gram.matvec(&v).expect("square gram");
            let n = norm2(&w);
            if n == 0.0 {
                // Start vector orthogonal to the range; restart from a basis vector.
                let j = (0..d)
                    .max_by(|&a, &b| gram.get(a, a).total_cmp(&gram.get(b, b)))
                    .unwrap_or(0);
                v = vec![0.0; d];
                v[j] = 1.0;
                continue;
            }
            w.iter_mut().for_each(|x| *x /= n);
            let converged = (n - est).abs() <= tol * n;
            est = n;
            v = w;
            if converged {
                break;
            }
        }
        est.sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Matrix, LinalgError> {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|v| f(*v)).collect())
    }

    /// Integer matrix power by repeated squaring.
    pub fn pow(&self, mut exp: u32) -> Result<Matrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.shape()));
        }
        let mut result = Matrix::identity(self.rows);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.matmul(&base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    // Scaled to avoid overflow for large entries.
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = a.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * s.sqrt()
}

pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm2(a);
    if n > 0.0 {
        a.iter_mut().for_each(|v| *v /= n);
    }
    n
}
