use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{kernel_matrix, rbf_kernel};
use crate::error::{Error, Result};

/// Coefficients at or below this are treated as zero when retaining
/// support vectors.
pub const ALPHA_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoOptions {
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iterations: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            tol: 1e-3,
            max_iterations: 1_000_000,
        }
    }
}

/// Full dual solution over the training set.
#[derive(Clone, Debug)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `min ½αᵀQα − Σα` subject to `0 ≤ α ≤ C`, `Σ yα = 0`, where
/// `Q_ij = y_i y_j K_ij`, by sequential minimal optimization on the
/// maximal violating pair.
///
/// Hitting the iteration cap is not an error: the last iterate is returned
/// with `converged = false`.
pub fn smo_solve(kernel: &DMatrix<f64>, y: &[f64], c: f64, opts: &SmoOptions) -> Result<SmoSolution> {
    let n = y.len();
    if kernel.nrows() != n || kernel.ncols() != n {
        return Err(Error::shape(format!(
            "kernel is {}x{}, labels have {n} entries",
            kernel.nrows(),
            kernel.ncols()
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config(format!("penalty C must be positive, got {c}")));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::config("binary labels must be +1 or -1"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let mut i = None;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = None;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let (below_c, above_0) = (alpha[t] < c, alpha[t] > 0.0);
            let (up, low) = if y[t] > 0.0 { (below_c, above_0) } else { (above_0, below_c) };
            if up && v > gmax {
                gmax = v;
                i = Some(t);
            }
            if low && v < gmin {
                gmin = v;
                j = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i, j) else {
            converged = true;
            break;
        };
        if gmax - gmin < opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = q(i, i) + q(j, j) - 2.0 * y[i] * y[j] * q(i, j);
        if quad <= 0.0 {
            quad = 1e-12;
        }
        // Step along the feasible direction, then clip to the box.
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        // Columns of a column-major matrix are contiguous.
        let (si, sj) = (y[i] * (alpha[i] - old_i), y[j] * (alpha[j] - old_j));
        let ki = &kernel.as_slice()[i * n..(i + 1) * n];
        let kj = &kernel.as_slice()[j * n..(j + 1) * n];
        for t in 0..n {
            grad[t] += y[t] * (si * ki[t] + sj * kj[t]);
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    Ok(SmoSolution {
        alpha,
        bias: -rho,
        iterations,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub converged: bool,
}

impl BinarySvmModel {
    /// Decision value `Σ α_i y_i K(z_i, z) + b`.
    pub fn decision(&self, z: &[f64]) -> Result<f64> {
        let mut f = self.bias;
        for (sv, &coef) in self.support_vectors.iter().zip(&self.coefficients) {
            f += coef * rbf_kernel(sv, z, self.gamma)?;
        }
        Ok(f)
    }

    /// Decision value and ±1 label (zero maps to +1).
    pub fn predict(&self, z: &[f64]) -> Result<(f64, i8)> {
        let f = self.decision(z)?;
        Ok((f, if f >= 0.0 { 1 } else { -1 }))
    }
}

/// Trains an RBF support vector machine on ±1 labels.
pub fn smo_train(z: &[Vec<f64>], y: &[f64], c: f64, gamma: f64, opts: &SmoOptions) -> Result<BinarySvmModel> {
    if z.len() != y.len() {
        return Err(Error::shape(format!("{} samples, {} labels", z.len(), y.len())));
    }
    let kernel = kernel_matrix(z, gamma)?;
    let sol = smo_solve(&kernel, y, c, opts)?;
    if !sol.converged {
        log::warn!("SMO stopped at the iteration cap ({}) before reaching tolerance", sol.iterations);
    }
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > ALPHA_EPS {
            support_vectors.push(z[t].clone());
            coefficients.push(a * y[t]);
        }
    }
    Ok(BinarySvmModel {
        support_vectors,
        coefficients,
        bias: sol.bias,
        gamma,
        c,
        converged: sol.converged,
    })
}

/// `½αᵀQα − Σα` for a kernel matrix and labels.
pub fn dual_objective(kernel: &DMatrix<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[(i, j)];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(rng: &mut ChaCha8Rng, n: usize, sep: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut z = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            z.push(vec![s * sep + noise.sample(rng), noise.sample(rng)]);
            y.push(s);
        }
        (z, y)
    }

    fn assert_kkt(kernel: &DMatrix<f64>, y: &[f64], c: f64, sol: &SmoSolution, tol: f64) {
        let n = y.len();
        for i in 0..n {
            let f: f64 = (0..n).map(|j| sol.alpha[j] * y[j] * kernel[(i, j)]).sum::<f64>() + sol.bias;
            let m = y[i] * f;
            let a = sol.alpha[i];
            if a <= ALPHA_EPS {
                assert!(m >= 1.0 - tol, "bound-0 {i}: {m}");
            } else if a >= c - ALPHA_EPS {
                assert!(m <= 1.0 + tol, "bound-C {i}: {m}");
            } else {
                assert!((m - 1.0).abs() <= tol, "free {i}: {m}");
            }
        }
        let balance: f64 = sol.alpha.iter().zip(y).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-6);
    }

    #[test]
    fn two_points_closed_form() {
        let z = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let y = [1.0, -1.0];
        let gamma = 0.5;
        let k = kernel_matrix(&z, gamma).unwrap();
        let sol = smo_solve(&k, &y, 1e6, &SmoOptions::default()).unwrap();
        // α₁ = α₂ = α maximizes 2α − α²(1 − K₁₂), so α = 1/(1 − K₁₂).
        let k12 = (-gamma * 2.0f64).exp();
        let expected = 1.0 / (1.0 - k12);
        assert!((sol.alpha[0] - expected).abs() < 1e-9, "{:?}", sol.alpha);
        assert!((sol.alpha[1] - expected).abs() < 1e-9);
        let model = smo_train(&z, &y, 1e6, gamma, &SmoOptions::default()).unwrap();
        assert_eq!(model.support_vectors.len(), 2);
        assert!((model.decision(&z[0]).unwrap() - 1.0).abs() < 1e-9);
        assert!((model.decision(&z[1]).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (z, y) = blobs(&mut rng, 80, 3.0);
        let model = smo_train(&z, &y, 10.0, 0.5, &SmoOptions::default()).unwrap();
        assert!(model.converged);
        for (zi, &yi) in z.iter().zip(&y) {
            assert_eq!(model.predict(zi).unwrap().1 as f64, yi);
        }
    }

    #[test]
    fn kkt_on_overlapping_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let (z, y) = blobs(&mut rng, 60, 0.6);
            let c = [0.1, 1.0, 10.0][trial % 3];
            let k = kernel_matrix(&z, 0.8).unwrap();
            let sol = smo_solve(&k, &y, c, &SmoOptions::default()).unwrap();
            assert!(sol.converged);
            assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
            assert_kkt(&k, &y, c, &sol, 1e-3);
        }
    }

    #[test]
    fn beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (z, y) = blobs(&mut rng, 10, 0.5);
        let c = 2.0;
        let k = kernel_matrix(&z, 1.0).unwrap();
        let sol = smo_solve(&k, &y, c, &SmoOptions { tol: 1e-8, ..SmoOptions::default() }).unwrap();
        let best = dual_objective(&k, &y, &sol.alpha);
        let pos: Vec<usize> = (0..10).filter(|&i| y[i] > 0.0).collect();
        let neg: Vec<usize> = (0..10).filter(|&i| y[i] < 0.0).collect();
        for _ in 0..10_000 {
            // Random box point, rescaled so both classes carry equal mass.
            let mut a: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..c)).collect();
            let sp: f64 = pos.iter().map(|&i| a[i]).sum();
            let sn: f64 = neg.iter().map(|&i| a[i]).sum();
            let target = sp.min(sn);
            for &i in &pos {
                a[i] *= target / sp;
            }
            for &i in &neg {
                a[i] *= target / sn;
            }
            assert!(best <= dual_objective(&k, &y, &a) + 1e-6);
        }
    }

    #[test]
    fn iteration_cap_flags_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (z, y) = blobs(&mut rng, 40, 0.3);
        let model = smo_train(&z, &y, 100.0, 2.0, &SmoOptions { tol: 1e-3, max_iterations: 2 }).unwrap();
        assert!(!model.converged);
    }

    #[test]
    fn errors_and_degenerate_models() {
        let z = vec![vec![0.0], vec![1.0]];
        assert!(matches!(smo_train(&z, &[1.0, 1.0], 1.0, 1.0, &SmoOptions::default()), Err(Error::SingleClass)));
        assert!(smo_train(&z, &[1.0, -1.0], 0.0, 1.0, &SmoOptions::default()).is_err());
        let empty = BinarySvmModel {
            support_vectors: vec![],
            coefficients: vec![],
            bias: -0.25,
            gamma: 1.0,
            c: 1.0,
            converged: true,
        };
        assert_eq!(empty.predict(&[3.0]).unwrap(), (-0.25, -1));
        let zero = BinarySvmModel { bias: 0.0, ..empty };
        assert_eq!(zero.predict(&[3.0]).unwrap().1, 1);
    }

    #[test]
    fn decision_is_smooth() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (z, y) = blobs(&mut rng, 30, 1.0);
        let model = smo_train(&z, &y, 1.0, 0.7, &SmoOptions::default()).unwrap();
        for _ in 0..50 {
            let p = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let q = vec![p[0] + 1e-9, p[1] - 1e-9];
            let diff = model.decision(&p).unwrap() - model.decision(&q).unwrap();
            assert!(diff.abs() < 1e-6);
        }
    }
}
