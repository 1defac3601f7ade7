//! ℓ1-penalized least-squares coding against a fixed dictionary.
//!
//! For a dictionary `D` (d×k), target `y` and penalty `λ > 0` the coder
//! minimizes `½‖y − Dx‖² + λ‖x‖₁`. [`feature_sign`] is the production
//! solver; [`oracle_solve`] is an independent coordinate-descent solver
//! used to cross-check it.

mod feature_sign;
mod oracle;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use feature_sign::{feature_sign, FeatureSign, FeatureSignOutput};
pub use oracle::oracle_solve;

/// Column norms may exceed one by at most this much.
pub const NORM_SLACK: f64 = 1e-9;

/// A sparse coefficient vector with sorted, unique, non-zero entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from `(index, value)` pairs. Zero values are dropped;
    /// indices must be unique and below `dim`.
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(i, _)| i);
        if let Some(&(i, _)) = entries.iter().find(|&&(i, _)| i >= dim) {
            return Err(Error::shape(format!("index {i} out of range for dimension {dim}")));
        }
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::shape("duplicate index in sparse vector"));
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite coefficient".into()));
        }
        Ok(SparseVector { dim, entries })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v.abs()).sum()
    }

    pub fn to_dense(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        v
    }

    pub fn scaled(&self, c: f64) -> Self {
        SparseVector::from_dense(self.to_dense().scale(c).as_slice())
    }

    /// `D x` for a dictionary with `dim` columns.
    pub fn synthesize(&self, dictionary: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(dictionary.nrows());
        for &(j, x) in &self.entries {
            out.axpy(x, &dictionary.column(j), 1.0);
        }
        out
    }
}

/// One coding problem: `min ½‖y − Dx‖² + λ‖x‖₁`.
#[derive(Clone, Copy, Debug)]
pub struct CodingProblem<'a> {
    dictionary: &'a DMatrix<f64>,
    target: &'a [f64],
    lambda: f64,
}

impl<'a> CodingProblem<'a> {
    pub fn new(dictionary: &'a DMatrix<f64>, target: &'a [f64], lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if dictionary.nrows() != target.len() {
            return Err(Error::shape(format!(
                "dictionary has {} rows, target has {} entries",
                dictionary.nrows(),
                target.len()
            )));
        }
        check_unit_ball(dictionary)?;
        Ok(CodingProblem {
            dictionary,
            target,
            lambda,
        })
    }

    pub fn dictionary(&self) -> &DMatrix<f64> {
        self.dictionary
    }

    pub fn target(&self) -> &[f64] {
        self.target
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn atoms(&self) -> usize {
        self.dictionary.ncols()
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::config(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

pub(crate) fn check_unit_ball(dictionary: &DMatrix<f64>) -> Result<()> {
    for (j, col) in dictionary.column_iter().enumerate() {
        let n = col.norm();
        if !(n <= 1.0 + NORM_SLACK) {
            return Err(Error::shape(format!("dictionary atom {j} has norm {n}, expected <= 1")));
        }
    }
    Ok(())
}

/// `½‖y − Dx‖² + λ‖x‖₁`.
pub fn lasso_objective(p: &CodingProblem<'_>, x: &SparseVector) -> Result<f64> {
    if x.dim() != p.atoms() {
        return Err(Error::shape(format!(
            "code has dimension {}, dictionary has {} atoms",
            x.dim(),
            p.atoms()
        )));
    }
    let residual = DVector::from_column_slice(p.target) - x.synthesize(p.dictionary);
    Ok(0.5 * residual.norm_squared() + p.lambda * x.l1_norm())
}

/// Codes every column of `y` independently with feature-sign search.
///
/// Columns are solved in parallel; the output does not depend on the
/// scheduling. Solver failures carry the failing column index.
pub fn encode_all(
    dictionary: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    solver: &FeatureSign,
) -> Result<Vec<SparseVector>> {
    check_lambda(lambda)?;
    if dictionary.nrows() != y.nrows() {
        return Err(Error::shape(format!(
            "dictionary has {} rows, features have {}",
            dictionary.nrows(),
            y.nrows()
        )));
    }
    check_unit_ball(dictionary)?;
    let gram = dictionary.transpose() * dictionary;
    let dty = dictionary.transpose() * y;
    (0..y.ncols())
        .into_par_iter()
        .map(|c| {
            let col = dty.column(c).into_owned();
            solver
                .solve_gram(&gram, &col, lambda)
                .map(|out| out.code)
                .map_err(|e| match e {
                    Error::MaxIterations { iterations, .. } => Error::MaxIterations {
                        iterations,
                        context: Some(format!("feature column {c}")),
                    },
                    other => other,
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_of_empty_code() {
        let d = DMatrix::<f64>::identity(2, 2);
        let y = [3.0, 4.0];
        let p = CodingProblem::new(&d, &y, 0.1).unwrap();
        let v = lasso_objective(&p, &SparseVector::zeros(2)).unwrap();
        assert!((v - 12.5).abs() < 1e-15);
    }

    #[test]
    fn objective_exact_fit() {
        let d = DMatrix::<f64>::identity(2, 2);
        let y = [1.0, 0.0];
        let p = CodingProblem::new(&d, &y, 0.1).unwrap();
        let x = SparseVector::new(2, vec![(0, 1.0)]).unwrap();
        assert!((lasso_objective(&p, &x).unwrap() - 0.1).abs() < 1e-15);
        assert!(lasso_objective(&p, &SparseVector::zeros(3)).is_err());
    }

    #[test]
    fn problem_validation() {
        let d = DMatrix::<f64>::identity(2, 2);
        assert!(CodingProblem::new(&d, &[1.0, 0.0], 0.0).is_err());
        assert!(CodingProblem::new(&d, &[1.0], 0.1).is_err());
        let big = DMatrix::from_element(2, 2, 1.0);
        assert!(CodingProblem::new(&big, &[1.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn sparse_vector_invariants() {
        let v = SparseVector::new(5, vec![(3, 2.0), (1, 0.0), (0, -1.0)]).unwrap();
        assert_eq!(v.entries(), &[(0, -1.0), (3, 2.0)]);
        assert_eq!(v.get(3), 2.0);
        assert_eq!(v.get(2), 0.0);
        assert!(SparseVector::new(2, vec![(2, 1.0)]).is_err());
        assert!(SparseVector::new(4, vec![(1, 1.0), (1, 2.0)]).is_err());
    }

    #[test]
    fn encode_zero_features() {
        let d = DMatrix::<f64>::identity(3, 3);
        let y = DMatrix::<f64>::zeros(3, 4);
        let codes = encode_all(&d, &y, 0.1, &FeatureSign::default()).unwrap();
        assert_eq!(codes.len(), 4);
        assert!(codes.iter().all(|c| c.nnz() == 0));
    }
}
