//! One-sided (Hestenes) Jacobi SVD.
//!
//! Used as the verification oracle throughout the crate: slow but accurate to
//! near machine precision for desk-scale matrices.

use super::matrix::{dot, norm2};
use super::{LinalgError, Matrix, Spectrum};

pub const MAX_SWEEPS: usize = 60;

/// Thin SVD `M = U diag(sigma) Vᵀ` with `r = min(rows, cols)` triples.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Spectrum,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let (m, r) = self.u.shape();
        let n = self.v.rows();
        Matrix::from_fn(m, n, |i, j| {
            (0..r)
                .map(|k| self.u.get(i, k) * self.sigma[k] * self.v.get(j, k))
                .sum()
        })
    }

    /// Left singular vector `k`.
    pub fn u_col(&self, k: usize) -> Vec<f64> {
        self.u.col(k)
    }

    /// Right singular vector `k`.
    pub fn v_col(&self, k: usize) -> Vec<f64> {
        self.v.col(k)
    }
}

pub fn svd_jacobi(m: &Matrix) -> Result<SvdFactors, LinalgError> {
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose())?;
        let (v, u) = fix_signs(t.u, t.v);
        return Ok(SvdFactors { u, sigma: t.sigma, v });
    }
    let f = svd_tall(m)?;
    let (v, u) = fix_signs(f.v, f.u);
    Ok(SvdFactors { u, sigma: f.sigma, v })
}

struct TallSvd {
    u: Matrix,
    sigma: Spectrum,
    v: Matrix,
}

fn svd_tall(m: &Matrix) -> Result<TallSvd, LinalgError> {
    let (rows, cols) = m.shape();
    debug_assert!(rows >= cols);
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let fro = m.frobenius_norm();
    let abs_floor = (1e-14 * fro) * (1e-14 * fro);
    let rel_tol = f64::EPSILON * (rows as f64).max(4.0);

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma.abs() <= abs_floor || gamma.abs() <= rel_tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = a.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = sigma[0];

    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[k];
        let mut u: Vec<f64> = if s > 0.0 {
            a[j].iter().map(|x| x / s).collect()
        } else {
            vec![0.0; rows]
        };
        // Directions of negligible columns are noise; re-orthogonalize or
        // replace them so that U keeps orthonormal columns.
        if s == 0.0 || s < smax * 1e-8 {
            reorthogonalize(&mut u, &ucols);
            if norm2(&u) < 0.5 {
                u = complete_basis(&ucols, rows);
            } else {
                let n = norm2(&u);
                u.iter_mut().for_each(|x| *x /= n);
            }
        }
        ucols.push(u);
    }
    let vcols: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();

    Ok(TallSvd {
        u: Matrix::from_columns(&ucols)?,
        sigma: Spectrum::new(sigma)?,
        v: Matrix::from_columns(&vcols)?,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

fn reorthogonalize(u: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let d = dot(u, b);
            u.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
}

/// A unit vector orthogonal to every vector in `basis`.
fn complete_basis(basis: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for e in 0..len {
        let mut u = vec![0.0; len];
        u[e] = 1.0;
        reorthogonalize(&mut u, basis);
        let n = norm2(&u);
        if n > best_norm {
            best_norm = n;
            best = Some(u);
        }
        if n > 0.7 {
            break;
        }
    }
    let mut u = best.expect("basis has fewer vectors than the dimension");
    u.iter_mut().for_each(|x| *x /= best_norm);
    u
}

/// Force the largest-magnitude entry of each column of `primary` to be
/// positive, flipping the paired column of `secondary` along with it.
fn fix_signs(primary: Matrix, secondary: Matrix) -> (Matrix, Matrix) {
    let r = primary.cols();
    let mut pcols: Vec<Vec<f64>> = (0..r).map(|j| primary.col(j)).collect();
    let mut scols: Vec<Vec<f64>> = (0..r).map(|j| secondary.col(j)).collect();
    for (p, s) in pcols.iter_mut().zip(scols.iter_mut()) {
        let mut idx = 0;
        for (i, x) in p.iter().enumerate() {
            if x.abs() > p[idx].abs() {
                idx = i;
            }
        }
        if p[idx] < 0.0 {
            p.iter_mut().for_each(|x| *x = -*x);
            s.iter_mut().for_each(|x| *x = -*x);
        }
    }
    (
        Matrix::from_columns(&pcols).expect("finite columns"),
        Matrix::from_columns(&scols).expect("finite columns"),
    )
}
