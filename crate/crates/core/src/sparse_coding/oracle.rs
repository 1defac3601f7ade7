use nalgebra::DVector;

use super::{CodingProblem, SparseVector};

/// Cyclic coordinate descent with exact soft-threshold updates.
///
/// Sweeps until the largest coordinate change in a sweep drops below
/// `tol`, or `max_sweeps` is reached (the last iterate is returned either
/// way). Independent of the feature-sign code path; meant for
/// verification.
pub fn oracle_solve(p: &CodingProblem<'_>, max_sweeps: usize, tol: f64) -> SparseVector {
    let d = p.dictionary();
    let k = d.ncols();
    let lambda = p.lambda();
    let norms: Vec<f64> = d.column_iter().map(|c| c.norm_squared()).collect();
    let mut x = vec![0.0; k];
    let mut residual = DVector::from_column_slice(p.target());

    for _ in 0..max_sweeps {
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            if norms[j] == 0.0 {
                continue;
            }
            let col = d.column(j);
            let rho = col.dot(&residual) + norms[j] * x[j];
            let updated = if rho > lambda {
                (rho - lambda) / norms[j]
            } else if rho < -lambda {
                (rho + lambda) / norms[j]
            } else {
                0.0
            };
            let change = updated - x[j];
            if change != 0.0 {
                residual.axpy(-change, &col, 1.0);
                x[j] = updated;
                max_change = max_change.max(change.abs());
            }
        }
        if max_change < tol {
            break;
        }
    }
    SparseVector::from_dense(&x)
}
