use super::matrix::norm2;
use super::{LinalgError, Matrix};

/// Thin Householder QR of a tall matrix: `A = Q R` with `Q` (m x n) having
/// orthonormal columns and `R` upper triangular with non-negative diagonal.
pub fn qr_thin(a: &Matrix) -> Result<(Matrix, Matrix), LinalgError> {
    let (m, n) = a.shape();
    if m < n {
        return Err(LinalgError::DimensionMismatch {
            op: "qr_thin (needs rows >= cols)",
            left: a.shape(),
            right: a.shape(),
        });
    }
    let mut r: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n {
        let x: Vec<f64> = (k..m).map(|i| r[i][k]).collect();
        let alpha = norm2(&x);
        let mut v = x;
        if alpha == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = norm2(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        for j in k..n {
            let d: f64 = (k..m).map(|i| v[i - k] * r[i][j]).sum();
            for i in k..m {
                r[i][j] -= 2.0 * v[i - k] * d;
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
    let mut q: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for k in (0..n).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        for j in 0..n {
            let d: f64 = (k..m).map(|i| v[i - k] * q[i][j]).sum();
            for i in k..m {
                q[i][j] -= 2.0 * v[i - k] * d;
            }
        }
    }

    // Make diag(R) non-negative.
    for k in 0..n {
        if r[k][k] < 0.0 {
            for j in k..n {
                r[k][j] = -r[k][j];
            }
            for row in q.iter_mut() {
                row[k] = -row[k];
            }
        }
    }
    let qm = Matrix::from_fn(m, n, |i, j| q[i][j]);
    let rm = Matrix::from_fn(n, n, |i, j| if j >= i { r[i][j] } else { 0.0 });
    Ok((qm, rm))
}

/// Orthonormal basis for the column space of a tall matrix.
pub fn orthonormalize(a: &Matrix) -> Result<Matrix, LinalgError> {
    qr_thin(a).map(|(q, _)| q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RngStream;

    #[test]
    fn reconstructs_and_is_orthonormal() {
        let a = RngStream::new(3, 0).sampler().matrix(7, 4);
        let (q, r) = qr_thin(&a).unwrap();
        assert!(q.matmul(&r).unwrap().sub(&a).unwrap().max_abs() < 1e-13);
        assert!(q.gram().sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-14);
        assert!(r.diag().iter().all(|d| *d >= 0.0));
    }

    #[test]
    fn rejects_wide() {
        assert!(qr_thin(&Matrix::zeros(2, 3)).is_err());
    }
}
