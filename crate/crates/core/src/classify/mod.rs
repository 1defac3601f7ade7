//! RBF support vector machines: SMO training, one-vs-one voting, stratified
//! cross-validation and a particle swarm search over `(C, γ)`.

mod ovo;
mod search;
mod smo;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use ovo::{ovo_train, OvoModel, PairModel};
pub use search::{cross_validate, pso_maximize, pso_search, stratified_folds, PsoConfig, PsoResult, PsoSearch};
pub use smo::{dual_objective, smo_solve, smo_train, BinarySvmModel, SmoOptions, SmoSolution, ALPHA_EPS};

/// `exp(−γ‖a − b‖²)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("kernel arguments have lengths {} and {}", a.len(), b.len())));
    }
    if !(gamma >= 0.0) {
        return Err(Error::config(format!("gamma must be non-negative, got {gamma}")));
    }
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-gamma * d2).exp())
}

/// Symmetric Gram matrix of the RBF kernel over `z`.
pub fn kernel_matrix(z: &[Vec<f64>], gamma: f64) -> Result<DMatrix<f64>> {
    let n = z.len();
    if let Some(bad) = z.iter().find(|v| v.len() != z[0].len()) {
        return Err(Error::shape(format!(
            "feature vectors have lengths {} and {}",
            z[0].len(),
            bad.len()
        )));
    }
    rbf_kernel(&[], &[], gamma)?;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..i).map(|j| rbf_kernel(&z[i], &z[j], gamma).expect("checked")).collect())
        .collect();
    let mut k = DMatrix::identity(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 1.0);
        assert!((rbf_kernel(&[0.0], &[1.0], 1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(rbf_kernel(&[0.0], &[5.0], 0.0).unwrap(), 1.0);
        assert!(rbf_kernel(&[0.0], &[5.0, 1.0], 1.0).is_err());
        assert!(rbf_kernel(&[0.0], &[5.0], -1.0).is_err());
    }

    #[test]
    fn kernel_matrix_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let z: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let k = kernel_matrix(&z, rng.random_range(0.1..5.0)).unwrap();
            assert_eq!(k, k.transpose());
            assert!(k.diagonal().iter().all(|&v| v == 1.0));
            assert!(k.symmetric_eigenvalues().min() >= -1e-8);
        }
    }
}
