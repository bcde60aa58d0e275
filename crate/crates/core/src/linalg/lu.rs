use super::{LinalgError, Matrix};

/// `P M = L U` with unit lower-triangular `L` and partial pivoting.
///
/// `perm[i]` is the row of `M` that ends up in row `i` of `P M`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    pub l: Matrix,
    pub u: Matrix,
    pub perm: Vec<usize>,
}

impl LuFactors {
    pub fn permutation_matrix(&self) -> Matrix {
        let n = self.perm.len();
        Matrix::from_fn(n, n, |i, j| if self.perm[i] == j { 1.0 } else { 0.0 })
    }

    /// `L⁻¹` by forward substitution.
    pub fn l_inverse(&self) -> Matrix {
        let n = self.perm.len();
        let mut inv = vec![vec![0.0; n]; n];
        for j in 0..n {
            inv[j][j] = 1.0;
            for i in (j + 1)..n {
                let s: f64 = (j..i).map(|k| self.l.get(i, k) * inv[k][j]).sum();
                inv[i][j] = -s;
            }
        }
        Matrix::from_fn(n, n, |i, j| inv[i][j])
    }

    /// `U⁻¹` by back substitution.
    pub fn u_inverse(&self) -> Matrix {
        let n = self.perm.len();
        let mut inv = vec![vec![0.0; n]; n];
        for j in 0..n {
            inv[j][j] = 1.0 / self.u.get(j, j);
            for i in (0..j).rev() {
                let s: f64 = ((i + 1)..=j).map(|k| self.u.get(i, k) * inv[k][j]).sum();
                inv[i][j] = -s / self.u.get(i, i);
            }
        }
        Matrix::from_fn(n, n, |i, j| inv[i][j])
    }
}

pub fn lu_decompose(m: &Matrix) -> Result<LuFactors, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.shape()));
    }
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
            .expect("non-empty range");
        if a[p][k] == 0.0 {
            return Err(LinalgError::Singular { pivot: k });
        }
        if p != k {
            a.swap(p, k);
            perm.swap(p, k);
        }
        let pivot = a[k][k];
        for i in (k + 1)..n {
            let factor = a[i][k] / pivot;
            a[i][k] = factor;
            for j in (k + 1)..n {
                a[i][j] -= factor * a[k][j];
            }
        }
    }

    let l = Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => a[i][j],
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    });
    let u = Matrix::from_fn(n, n, |i, j| if j >= i { a[i][j] } else { 0.0 });
    Ok(LuFactors { l, u, perm })
}
