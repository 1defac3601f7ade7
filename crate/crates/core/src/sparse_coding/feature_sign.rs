//! Feature-sign search.
//!
//! The solver keeps an active set of non-zero coefficients together with a
//! guess of their signs. With signs fixed the objective is an unconstrained
//! quadratic on the active set, solved in closed form; a discrete line
//! search over the points where coefficients cross zero keeps every step a
//! descent step. Zero coefficients whose gradient exceeds `λ` in magnitude
//! are activated one at a time, largest violation first.

use nalgebra::{DMatrix, DVector};

use super::{CodingProblem, SparseVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct FeatureSign {
    /// Cap on feature-sign steps; `None` means `4·k`.
    pub max_iterations: Option<usize>,
    /// Added to the diagonal of the active Gram matrix when it is not
    /// numerically positive definite.
    pub ridge: f64,
    /// A zero coefficient is activated only if `|gradient| > λ + slack`.
    pub activation_slack: f64,
}

impl Default for FeatureSign {
    fn default() -> Self {
        FeatureSign {
            max_iterations: None,
            ridge: 1e-10,
            activation_slack: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeatureSignOutput {
    pub code: SparseVector,
    pub iterations: usize,
    /// Objective after each feature-sign step. When produced by
    /// [`FeatureSign::solve_gram`] the constant `½‖y‖²` is omitted.
    pub objective_path: Vec<f64>,
}

/// Solves `p` with default settings.
pub fn feature_sign(p: &CodingProblem<'_>) -> Result<SparseVector> {
    FeatureSign::default().solve(p).map(|o| o.code)
}

impl FeatureSign {
    pub fn solve(&self, p: &CodingProblem<'_>) -> Result<FeatureSignOutput> {
        let d = p.dictionary();
        let y = DVector::from_column_slice(p.target());
        let gram = d.transpose() * d;
        let dty = d.transpose() * &y;
        let mut out = self.solve_gram(&gram, &dty, p.lambda())?;
        let offset = 0.5 * y.norm_squared();
        out.objective_path.iter_mut().for_each(|v| *v += offset);
        Ok(out)
    }

    /// Solves from the precomputed Gram matrix `DᵀD` and correlation `Dᵀy`.
    pub fn solve_gram(
        &self,
        gram: &DMatrix<f64>,
        dty: &DVector<f64>,
        lambda: f64,
    ) -> Result<FeatureSignOutput> {
        let k = gram.nrows();
        if gram.ncols() != k || dty.len() != k {
            return Err(Error::shape(format!(
                "Gram matrix is {}x{}, correlation has {} entries",
                gram.nrows(),
                gram.ncols(),
                dty.len()
            )));
        }
        let cap = self.max_iterations.unwrap_or(4 * k).max(1);
        let mut state = State {
            gram,
            dty,
            lambda,
            x: vec![0.0; k],
            theta: vec![0.0; k],
            active: Vec::new(),
        };
        let mut iterations = 0;
        let mut objective_path = Vec::new();

        loop {
            let g = state.gradient();
            let candidate = (0..k)
                .filter(|&i| state.x[i] == 0.0)
                .max_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs()));
            match candidate {
                Some(i) if g[i].abs() > lambda + self.activation_slack => {
                    state.theta[i] = -g[i].signum();
                    state.active.push(i);
                }
                _ => break,
            }

            loop {
                iterations += 1;
                if iterations > cap {
                    return Err(Error::MaxIterations {
                        iterations: cap,
                        context: None,
                    });
                }
                let exact = state.step(self.ridge);
                objective_path.push(state.objective());
                if exact || state.active.is_empty() {
                    break;
                }
            }
        }

        let entries = state
            .active
            .iter()
            .map(|&i| (i, state.x[i]))
            .collect::<Vec<_>>();
        Ok(FeatureSignOutput {
            code: SparseVector::new(k, entries)?,
            iterations,
            objective_path,
        })
    }
}

struct State<'a> {
    gram: &'a DMatrix<f64>,
    dty: &'a DVector<f64>,
    lambda: f64,
    x: Vec<f64>,
    theta: Vec<f64>,
    active: Vec<usize>,
}

impl State<'_> {
    /// Gradient of the smooth part, `DᵀD x − Dᵀy`.
    fn gradient(&self) -> Vec<f64> {
        let k = self.x.len();
        let mut g: Vec<f64> = (0..k).map(|i| -self.dty[i]).collect();
        for &j in &self.active {
            let xj = self.x[j];
            if xj != 0.0 {
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi += self.gram[(i, j)] * xj;
                }
            }
        }
        g
    }

    /// Objective without the constant `½‖y‖²`.
    fn objective(&self) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut l1 = 0.0;
        for &i in &self.active {
            let xi = self.x[i];
            lin += self.dty[i] * xi;
            l1 += xi.abs();
            for &j in &self.active {
                quad += xi * self.gram[(i, j)] * self.x[j];
            }
        }
        0.5 * quad - lin + self.lambda * l1
    }

    /// Drops zero coefficients from the active set and resets the signs.
    fn sync_active(&mut self) {
        let x = &self.x;
        self.active.retain(|&i| x[i] != 0.0);
        for t in self.theta.iter_mut() {
            *t = 0.0;
        }
        for &i in &self.active {
            self.theta[i] = self.x[i].signum();
        }
    }

    /// Handles a rank-deficient active set. Moving along a null direction
    /// of the active atoms leaves the fit unchanged, so the objective is
    /// linear in the step; if it decreases, walk to the first zero crossing,
    /// which removes one coefficient. Returns false if no such move exists.
    fn null_step(&mut self, sub: &DMatrix<f64>) -> bool {
        let n = self.active.len();
        let eig = sub.clone().symmetric_eigen();
        let idx = eig.eigenvalues.imin();
        let v = eig.eigenvectors.column(idx).into_owned();
        let x_cur: Vec<f64> = self.active.iter().map(|&i| self.x[i]).collect();
        let slope = |s: f64| -> f64 {
            (0..n)
                .map(|r| {
                    if x_cur[r] != 0.0 {
                        x_cur[r].signum() * s * v[r]
                    } else {
                        v[r].abs()
                    }
                })
                .sum()
        };
        let s = if slope(1.0) <= slope(-1.0) { 1.0 } else { -1.0 };
        if slope(s) >= -1e-12 * v.iter().map(|x| x.abs()).sum::<f64>() {
            return false;
        }
        let hit = (0..n)
            .filter(|&r| x_cur[r] * s * v[r] < 0.0)
            .map(|r| (-x_cur[r] / (s * v[r]), r))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((t, hit)) = hit else {
            return false;
        };
        for r in 0..n {
            self.x[self.active[r]] = if r == hit { 0.0 } else { x_cur[r] + t * s * v[r] };
        }
        self.sync_active();
        true
    }

    /// One feature-sign step on the current active set. Returns true when
    /// the closed-form solution was sign-consistent and taken in full, in
    /// which case the active coefficients are optimal.
    fn step(&mut self, ridge: f64) -> bool {
        let n = self.active.len();
        let act = self.active.clone();
        let sub = DMatrix::from_fn(n, n, |r, c| self.gram[(act[r], act[c])]);
        let rhs = DVector::from_fn(n, |r, _| self.dty[act[r]] - self.lambda * self.theta[act[r]]);
        let chol = sub.clone().cholesky().filter(|ch| well_conditioned(ch.l_dirty(), &sub));
        if chol.is_none() && self.null_step(&sub) {
            return false;
        }
        let x_new = match chol {
            Some(ch) => ch.solve(&rhs),
            None => {
                let mut regularized = sub.clone();
                for i in 0..n {
                    regularized[(i, i)] += ridge;
                }
                match regularized.clone().cholesky() {
                    Some(ch) => ch.solve(&rhs),
                    None => regularized.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(n)),
                }
            }
        };
        let x_cur = DVector::from_fn(n, |r, _| self.x[act[r]]);

        let consistent = (0..n).all(|r| x_new[r] != 0.0 && x_new[r].signum() == self.theta[act[r]]);

        // Zero crossings of coefficients that are currently non-zero.
        let mut crossings: Vec<(f64, usize)> = (0..n)
            .filter(|&r| x_cur[r] != 0.0 && x_new[r].signum() != x_cur[r].signum())
            .map(|r| (x_cur[r] / (x_cur[r] - x_new[r]), r))
            .filter(|&(t, _)| t > 0.0 && t < 1.0)
            .collect();
        crossings.sort_by(|a, b| a.0.total_cmp(&b.0));

        let (t_best, zeroed) = if crossings.is_empty() {
            (1.0, None)
        } else {
            let delta = &x_new - &x_cur;
            let g_delta = &sub * &delta;
            let a = 0.5 * delta.dot(&g_delta);
            let b = x_cur.dot(&g_delta) - (0..n).map(|r| self.dty[act[r]] * delta[r]).sum::<f64>();
            let f = |t: f64| {
                let l1: f64 = (0..n).map(|r| (x_cur[r] + t * delta[r]).abs()).sum();
                a * t * t + b * t + self.lambda * l1
            };
            let mut best = (f(1.0), 1.0, None);
            for &(t, r) in &crossings {
                let v = f(t);
                if v < best.0 || (v == best.0 && t < best.1) {
                    best = (v, t, Some(r));
                }
            }
            (best.1, best.2)
        };

        for r in 0..n {
            let i = act[r];
            self.x[i] = if t_best == 1.0 {
                x_new[r]
            } else {
                x_cur[r] + t_best * (x_new[r] - x_cur[r])
            };
        }
        if let Some(r) = zeroed {
            // Every coefficient crossing at the chosen point lands on zero.
            for &(t, q) in &crossings {
                if t == t_best || q == r {
                    self.x[act[q]] = 0.0;
                }
            }
        }
        self.sync_active();
        t_best == 1.0 && consistent
    }
}

/// Rejects factorizations whose pivots show the matrix is numerically
/// singular.
fn well_conditioned(l: &DMatrix<f64>, a: &DMatrix<f64>) -> bool {
    let scale = a.diagonal().max();
    let min_pivot = l.diagonal().iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
    min_pivot > 1e-10 * scale
}
