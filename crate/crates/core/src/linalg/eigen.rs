use super::{LinalgError, Matrix};

/// Eigen-decomposition of a symmetric matrix, values sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the same order as `values`.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// `V f(Λ) Vᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|v| f(*v)).collect();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * fv[k] * self.vectors.get(j, k))
                .sum()
        })
    }
}

/// Cyclic two-sided Jacobi eigensolver.
pub fn symmetric_eigen(s: &Matrix) -> Result<SymmetricEigen, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare(s.shape()));
    }
    let n = s.rows();
    let scale = s.frobenius_norm();
    if s.asymmetry() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotSymmetric);
    }
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| s.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut sweeps = 0;
    loop {
        sweeps += 1;
        if sweeps > 100 {
            return Err(LinalgError::NoConvergence { sweeps: 100 });
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let negligible = 0.5 * f64::EPSILON * (a[p][p] * a[q][q]).abs().sqrt();
                if apq.abs() <= negligible.max(f64::MIN_POSITIVE * scale.max(1.0)) {
                    continue;
                }
                rotated = true;
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A <- Jᵀ A J on rows/cols p, q.
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - sn * vq;
                    row[q] = sn * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[i][order[j]]);
    Ok(SymmetricEigen { values, vectors })
}
