use nalgebra::DMatrix;

use crate::rng::Rng;

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of Q's columns fixed so that R has a positive diagonal.
pub fn random_orthogonal(dim: usize, rng: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.normal());
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonality_and_determinism() {
        for dim in [1, 2, 5, 17] {
            let q = random_orthogonal(dim, &mut Rng::new(3, dim as u64));
            let err = (q.transpose() * &q - DMatrix::<f64>::identity(dim, dim)).abs().max();
            assert!(err < 1e-10, "dim {dim}: {err}");
            let again = random_orthogonal(dim, &mut Rng::new(3, dim as u64));
            assert_eq!(q, again);
        }
        let q1 = random_orthogonal(1, &mut Rng::new(9, 9));
        assert_eq!(q1[(0, 0)].abs(), 1.0);
    }
}
