//! LU preconditioning baseline.

use crate::linalg::{lu_decompose, FeatureMap, Matrix};

use super::{gram_roots, newton_schulz, OpsError, DEFAULT_NS_ITERS};

/// How the rectangular `H̃` is rebuilt from the preconditioned Gram matrix.
pub const RECOVERY_METHOD: &str = "H B sym(M HᵀH)^(1/2) with B = (HᵀH)^(-1/2)";

#[derive(Debug, Clone)]
pub struct Preconditioned {
    pub augmented: FeatureMap,
    /// `M = U⁻¹ L⁻¹ P` from `P HᵀH = L U`.
    pub preconditioner: Matrix,
    /// Newton-Schulz residual of the final square root.
    pub ns_residual: f64,
}

/// Precondition `HᵀH` by its LU factors and recover a feature map whose Gram
/// matrix is the symmetrized `M HᵀH`, keeping the left singular basis of `H`.
pub fn lu_precondition(h: &FeatureMap) -> Result<Preconditioned, OpsError> {
    let g = h.gram();
    let lu = lu_decompose(&g)?;
    let m = lu
        .u_inverse()
        .matmul(&lu.l_inverse())?
        .matmul(&lu.permutation_matrix())?;
    let roots = gram_roots(h, DEFAULT_NS_ITERS)?;
    let mut mg = m.matmul(&g)?;
    mg.symmetrize();
    let s = newton_schulz(&mg, DEFAULT_NS_ITERS)?;
    let augmented = h.matmul(&roots.inv_sqrt)?.matmul(&s.sqrt)?;
    Ok(Preconditioned {
        augmented,
        preconditioner: m,
        ns_residual: s.residual,
    })
}
