use super::qr::orthonormalize;
use super::svd::{svd_jacobi, SvdFactors};
use super::{LinalgError, Matrix, RngStream, Spectrum};

/// Randomized range-finder SVD truncated to `rank` triples.
///
/// Sketches the range with `rank + oversample` Gaussian probes drawn from
/// `stream`, sharpens it with `power_iters` subspace iterations, then takes
/// the exact SVD of the small projected matrix.
pub fn randomized_svd(
    m: &Matrix,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    stream: RngStream,
) -> Result<SvdFactors, LinalgError> {
    let (rows, cols) = m.shape();
    let full = rows.min(cols);
    if rank == 0 || rank > full {
        return Err(LinalgError::RankOutOfRange { rank, max: full });
    }
    let width = (rank + oversample).min(full);

    let omega = stream.sampler().matrix(cols, width);
    let mut q = orthonormalize(&m.matmul(&omega)?)?;
    for _ in 0..power_iters {
        let z = orthonormalize(&m.t_matmul(&q)?)?;
        q = orthonormalize(&m.matmul(&z)?)?;
    }

    let b = q.t_matmul(m)?;
    let small = svd_jacobi(&b)?;
    let u_full = q.matmul(&small.u)?;

    let u = Matrix::from_fn(rows, rank, |i, j| u_full.get(i, j));
    let v = Matrix::from_fn(cols, rank, |i, j| small.v.get(i, j));
    let sigma = Spectrum::new(small.sigma[..rank].to_vec())?;
    Ok(SvdFactors { u, sigma, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_low_rank_is_recovered() {
        let mut g = RngStream::new(21, 0).sampler();
        let a = g.matrix(12, 3);
        let b = g.matrix(3, 9);
        let m = a.matmul(&b).unwrap();
        let f = randomized_svd(&m, 3, 2, 1, RngStream::new(1, 1)).unwrap();
        let resid = f.reconstruct().sub(&m).unwrap().frobenius_norm();
        assert!(resid <= 1e-8 * m.frobenius_norm(), "{resid}");
    }

    #[test]
    fn leading_values_match_oracle() {
        let m = Matrix::from_diag(&[3.0, 2.0, 1.0, 1e-8]);
        let f = randomized_svd(&m, 2, 1, 2, RngStream::new(4, 0)).unwrap();
        let exact = svd_jacobi(&m).unwrap();
        for k in 0..2 {
            assert!((f.sigma[k] - exact.sigma[k]).abs() < 1e-3);
        }
    }

    #[test]
    fn deterministic_per_stream() {
        let m = RngStream::new(2, 2).sampler().matrix(8, 6);
        let a = randomized_svd(&m, 3, 2, 1, RngStream::new(9, 9)).unwrap();
        let b = randomized_svd(&m, 3, 2, 1, RngStream::new(9, 9)).unwrap();
        assert_eq!(a.u.as_slice(), b.u.as_slice());
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.v.as_slice(), b.v.as_slice());
    }

    #[test]
    fn rank_too_large() {
        let m = Matrix::identity(3);
        assert!(matches!(
            randomized_svd(&m, 4, 0, 0, RngStream::new(0, 0)),
            Err(LinalgError::RankOutOfRange { .. })
        ));
    }
}
