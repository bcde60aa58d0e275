//! Coupled Newton-Schulz iteration for `M^{1/2}` and `M^{-1/2}`.

use crate::linalg::Matrix;

use super::OpsError;

pub const DEFAULT_NS_ITERS: u32 = 20;
/// Iteration count used for the original experiments.
pub const LEGACY_NS_ITERS: u32 = 10;

const SYMMETRY_TOL: f64 = 1e-10;
const CHECK_EVERY: u32 = 5;
const DIVERGENCE_FLOOR: f64 = 1e-8;
const DIVERGENCE_GROWTH: f64 = 1.5;

#[derive(Debug, Clone)]
pub struct NewtonSchulz {
    /// `A ≈ M^{1/2}`.
    pub sqrt: Matrix,
    /// `B ≈ M^{-1/2}`.
    pub inv_sqrt: Matrix,
    /// Final `‖AA - M‖_F / ‖M‖_F`.
    pub residual: f64,
}

/// Square root and inverse square root of a symmetric positive-definite
/// matrix by `zeta` coupled Newton-Schulz steps.
///
/// With `M' = M / Tr(M)`, `P = ½(3I - M')`, `Y₀ = M'P`, `Z₀ = P`, each step
/// sets `P = ½(3I - ZY)`, `Y ← YP`, `Z ← PZ`; then `Y → M'^{1/2}` and
/// `Z → M'^{-1/2}`, giving `A = Y√Tr(M)` and `B = Z/√Tr(M)`.
///
/// The residual is monitored every few steps and the iteration fails fast if
/// it becomes non-finite or starts growing.
pub fn newton_schulz(m: &Matrix, zeta: u32) -> Result<NewtonSchulz, OpsError> {
    if !m.is_square() {
        return Err(OpsError::Linalg(crate::linalg::LinalgError::NotSquare(m.shape())));
    }
    if zeta == 0 {
        return Err(OpsError::InvalidSpec("ns_iters must be at least 1".into()));
    }
    let asymmetry = m.asymmetry() / m.frobenius_norm().max(f64::MIN_POSITIVE);
    if asymmetry > SYMMETRY_TOL {
        return Err(OpsError::NotSymmetric { asymmetry });
    }
    let n = m.rows();
    let tr = m.trace();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(OpsError::NotPositiveDefinite);
    }
    let mut ms = m.clone();
    ms.symmetrize();
    let mp = ms.scale(1.0 / tr);
    let eye = Matrix::identity(n);
    let three_i = eye.scale(3.0);

    let p = three_i.sub(&mp)?.scale(0.5);
    let mut y = mp.matmul(&p)?;
    let mut z = p;
    let mut last = residual(&y, &mp)?;
    for i in 1..=zeta {
        let blown_up = |_| OpsError::Divergence {
            iteration: i,
            residual: f64::INFINITY,
        };
        let p = three_i.sub(&z.matmul(&y).map_err(blown_up)?)?.scale(0.5);
        y = y.matmul(&p).map_err(blown_up)?;
        z = p.matmul(&z).map_err(blown_up)?;
        if i % CHECK_EVERY == 0 || i == zeta {
            let r = residual(&y, &mp)?;
            if !r.is_finite() || (r > DIVERGENCE_FLOOR && r > DIVERGENCE_GROWTH * last) {
                return Err(OpsError::Divergence {
                    iteration: i,
                    residual: r,
                });
            }
            last = r;
        }
    }
    let root = tr.sqrt();
    let mut sqrt = y.scale(root);
    let mut inv_sqrt = z.scale(1.0 / root);
    sqrt.symmetrize();
    inv_sqrt.symmetrize();
    Ok(NewtonSchulz {
        sqrt,
        inv_sqrt,
        residual: last,
    })
}

/// `‖YY - M'‖_F / ‖M'‖_F`, which equals the residual of the rescaled root.
fn residual(y: &Matrix, mp: &Matrix) -> Result<f64, OpsError> {
    let yy = y.matmul(y)?;
    let num = yy.sub(mp).map(|d| d.frobenius_norm()).unwrap_or(f64::INFINITY);
    Ok(num / mp.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{symmetric_eigen, RngStream};

    #[test]
    fn identity_is_fixed() {
        for zeta in [10, 20, 50] {
            let r = newton_schulz(&Matrix::identity(4), zeta).unwrap();
            assert!(r.sqrt.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-14);
            assert!(r.inv_sqrt.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_closed_form() {
        let r = newton_schulz(&Matrix::from_diag(&[4.0, 1.0]), 20).unwrap();
        assert!(r.sqrt.sub(&Matrix::from_diag(&[2.0, 1.0])).unwrap().max_abs() < 1e-8);
        assert!(r.inv_sqrt.sub(&Matrix::from_diag(&[0.5, 1.0])).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn random_spd_against_eigen_oracle() {
        let mut g = RngStream::new(3, 0).sampler();
        let q = crate::linalg::orthonormalize(&g.matrix(6, 6)).unwrap();
        let evals = [50.0, 20.0, 7.0, 3.0, 1.5, 1.0];
        let m = q
            .matmul(&Matrix::from_diag(&evals))
            .unwrap()
            .matmul(&q.transpose())
            .unwrap();
        let mut m = m;
        m.symmetrize();
        let r = newton_schulz(&m, 25).unwrap();
        let oracle = symmetric_eigen(&m).unwrap().apply(f64::sqrt);
        assert!(r.sqrt.sub(&oracle).unwrap().frobenius_norm() <= 1e-8 * oracle.frobenius_norm());
        let aa = r.sqrt.matmul(&r.sqrt).unwrap();
        assert!(aa.sub(&m).unwrap().frobenius_norm() / m.frobenius_norm() <= 1e-5);
        let ab = r.sqrt.matmul(&r.inv_sqrt).unwrap();
        assert!(ab.sub(&Matrix::identity(6)).unwrap().frobenius_norm() <= 1e-5);
    }

    #[test]
    fn rejects_bad_input() {
        let asym = Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(matches!(newton_schulz(&asym, 10), Err(OpsError::NotSymmetric { .. })));
        assert!(matches!(
            newton_schulz(&Matrix::zeros(2, 2), 10),
            Err(OpsError::NotPositiveDefinite)
        ));
        let indefinite = Matrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(
            newton_schulz(&indefinite, 30),
            Err(OpsError::Divergence { .. })
        ));
        assert!(newton_schulz(&Matrix::zeros(2, 3), 10).is_err());
    }
}
