use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dictionary;
use crate::error::{Error, Result};
use crate::sparse_coding::{encode_all, FeatureSign, SparseVector};

/// Atoms whose accumulated code energy `A_jj` is at or below this are
/// considered unused.
pub const DEAD_ATOM_EPS: f64 = 1e-10;

const ATOM_CHANGE_TOL: f64 = 1e-4;

/// Default sparsity penalty for feature dimension `d`, `0.3/√d`.
pub fn default_lambda(d: usize) -> f64 {
    0.3 / (d as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub lambda: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub atom_update_passes: usize,
    /// Sparsity level reported in the training log; never enforced.
    pub diag_sparsity: Option<usize>,
    /// Record the surrogate objective around every atom update.
    pub track_surrogate: bool,
}

impl TrainConfig {
    /// Defaults for feature dimension `d`: `k = 2d`, `λ = 0.3/√d`,
    /// batches of 64, ten epochs.
    pub fn for_dimension(d: usize) -> Self {
        TrainConfig {
            k: 2 * d,
            lambda: default_lambda(d),
            batch_size: 64,
            epochs: 10,
            seed: 0,
            atom_update_passes: 1,
            diag_sparsity: None,
            track_surrogate: false,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k <= d {
            return Err(Error::config(format!(
                "atom count k = {} must exceed the feature dimension {d}",
                self.k
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.epochs < 1 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.atom_update_passes < 1 {
            return Err(Error::config("atom update passes must be at least 1"));
        }
        crate::sparse_coding::check_lambda(self.lambda)
    }
}

/// Sufficient statistics of the online objective.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineStats {
    /// Σ x xᵀ over all coded columns (k×k).
    pub a: DMatrix<f64>,
    /// Σ y xᵀ over all coded columns (d×k).
    pub b: DMatrix<f64>,
    /// Number of batches accumulated.
    pub t: usize,
}

impl OnlineStats {
    pub fn new(d: usize, k: usize) -> Self {
        OnlineStats {
            a: DMatrix::zeros(k, k),
            b: DMatrix::zeros(d, k),
            t: 0,
        }
    }

    fn accumulate(&mut self, codes: &[SparseVector], y: &DMatrix<f64>) -> Result<()> {
        let (d, k) = self.b.shape();
        if y.nrows() != d || y.ncols() != codes.len() {
            return Err(Error::shape(format!(
                "batch features are {}x{}, expected {d} rows and {} columns",
                y.nrows(),
                y.ncols(),
                codes.len()
            )));
        }
        if let Some(c) = codes.iter().find(|c| c.dim() != k) {
            return Err(Error::shape(format!("code dimension {} does not match k = {k}", c.dim())));
        }
        for (c, x) in codes.iter().enumerate() {
            let entries = x.entries();
            for &(i, xi) in entries {
                for &(j, xj) in entries {
                    self.a[(i, j)] += xi * xj;
                }
                self.b.column_mut(i).axpy(xi, &y.column(c), 1.0);
            }
        }
        self.t += 1;
        Ok(())
    }

    /// `½Tr(DᵀDA) − Tr(DᵀB)`.
    pub fn surrogate(&self, d: &DMatrix<f64>) -> f64 {
        let gram = d.transpose() * d;
        0.5 * gram.component_mul(&self.a).sum() - d.component_mul(&self.b).sum()
    }
}

/// Returns `stats` with one more batch accumulated.
pub fn update_stats(stats: &OnlineStats, codes: &[SparseVector], y: &DMatrix<f64>) -> Result<OnlineStats> {
    let mut next = stats.clone();
    next.accumulate(codes, y)?;
    Ok(next)
}

#[derive(Clone, Debug)]
pub struct AtomUpdate {
    pub dictionary: Dictionary,
    /// Passes actually run.
    pub passes: usize,
    /// Surrogate before the first pass and after each pass.
    pub surrogate: Vec<f64>,
    /// Atoms replaced because they were unused.
    pub reinitialized: Vec<usize>,
}

/// Block-coordinate descent on the atoms.
///
/// Unused atoms are first replaced by the `replacements` columns in order
/// (normalized; zero candidates are skipped); without candidates they are
/// left as they are. Then each atom is updated in turn,
/// `u_j = d_j + (b_j − D a_j)/A_jj`, `d_j = u_j / max(‖u_j‖, 1)`, for up
/// to `passes` sweeps, stopping early once no atom moves by more than
/// 1e-4.
pub fn update_atoms(
    dictionary: &Dictionary,
    stats: &OnlineStats,
    passes: usize,
    replacements: &[DVector<f64>],
    track_surrogate: bool,
) -> Result<AtomUpdate> {
    let mut d = dictionary.atoms().clone();
    if stats.a.nrows() != d.ncols() || stats.b.shape() != d.shape() {
        return Err(Error::shape(format!(
            "statistics are for {}x{}, dictionary is {}x{}",
            stats.b.nrows(),
            stats.a.nrows(),
            d.nrows(),
            d.ncols()
        )));
    }
    let k = d.ncols();

    let mut reinitialized = Vec::new();
    let mut candidates = replacements.iter().filter(|c| c.norm() > 0.0);
    for j in 0..k {
        if stats.a[(j, j)] <= DEAD_ATOM_EPS {
            match candidates.next() {
                Some(c) => {
                    d.set_column(j, &(c / c.norm()));
                    reinitialized.push(j);
                }
                None => break,
            }
        }
    }

    let mut surrogate = Vec::new();
    if track_surrogate {
        surrogate.push(stats.surrogate(&d));
    }
    let mut passes_run = 0;
    for _ in 0..passes {
        passes_run += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            let ajj = stats.a[(j, j)];
            if ajj <= DEAD_ATOM_EPS {
                continue;
            }
            let da = &d * stats.a.column(j);
            let mut u = d.column(j) + (stats.b.column(j) - da) / ajj;
            let norm = u.norm();
            if norm > 1.0 {
                u /= norm;
            }
            max_change = max_change.max((&u - d.column(j)).amax());
            d.set_column(j, &u);
        }
        if track_surrogate {
            surrogate.push(stats.surrogate(&d));
        }
        if max_change < ATOM_CHANGE_TOL {
            break;
        }
    }
    Ok(AtomUpdate {
        dictionary: Dictionary::new(d)?,
        passes: passes_run,
        surrogate,
        reinitialized,
    })
}

/// `k` distinct training columns, sampled without replacement and scaled
/// to unit norm. All-zero picks are replaced by normalized Gaussian draws.
pub fn init_dictionary(y: &DMatrix<f64>, k: usize, seed: u64) -> Result<Dictionary> {
    let n = y.ncols();
    if n < k {
        return Err(Error::NotEnoughData { needed: k, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, n, k);
    let mut d = DMatrix::zeros(y.nrows(), k);
    for (j, c) in picks.iter().enumerate() {
        let col = y.column(c);
        let norm = col.norm();
        if norm > 0.0 {
            d.set_column(j, &(col / norm));
        } else {
            let g = DVector::from_fn(y.nrows(), |_, _| StandardNormal.sample(&mut rng));
            let gn: f64 = g.norm();
            d.set_column(j, &(g / gn));
        }
    }
    Dictionary::new(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchLog {
    pub epoch: usize,
    pub batch: usize,
    /// Mean LASSO objective of the batch under the dictionary it was coded
    /// with.
    pub mean_objective: f64,
    pub mean_nnz: f64,
    /// Fraction of batch codes with more than `diag_sparsity` non-zeros.
    pub over_sparsity: Option<f64>,
    pub surrogate: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub dictionary: Dictionary,
    pub log: Vec<BatchLog>,
}

impl TrainOutput {
    /// Mean batch objective over one epoch.
    pub fn epoch_objective(&self, epoch: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .log
            .iter()
            .filter(|l| l.epoch == epoch)
            .map(|l| l.mean_objective)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Online dictionary learning over the columns of `y`.
///
/// Column order is reshuffled every epoch with a generator seeded by
/// `cfg.seed`; each mini-batch is coded against the current dictionary,
/// folded into the statistics, and the atoms are updated.
pub fn train_online(y: &DMatrix<f64>, cfg: &TrainConfig) -> Result<TrainOutput> {
    let d = y.nrows();
    cfg.validate(d)?;
    let mut dictionary = init_dictionary(y, cfg.k, cfg.seed)?;
    let mut stats = OnlineStats::new(d, cfg.k);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..y.ncols()).collect();
    let solver = FeatureSign::default();
    let mut log = Vec::new();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let yb = y.select_columns(idx);
            let codes = encode_all(dictionary.atoms(), &yb, cfg.lambda, &solver)?;

            let mut residuals: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
            let mut objective = 0.0;
            for (c, x) in codes.iter().enumerate() {
                let r = (yb.column(c) - x.synthesize(dictionary.atoms())).norm();
                objective += 0.5 * r * r + cfg.lambda * x.l1_norm();
                residuals.push((r, c));
            }
            // Worst-reconstructed columns first, ties by position.
            residuals.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let replacements: Vec<DVector<f64>> =
                residuals.iter().map(|&(_, c)| yb.column(c).into_owned()).collect();

            stats.accumulate(&codes, &yb)?;
            let update = update_atoms(
                &dictionary,
                &stats,
                cfg.atom_update_passes,
                &replacements,
                cfg.track_surrogate,
            )?;
            dictionary = update.dictionary;

            let m = codes.len() as f64;
            log.push(BatchLog {
                epoch,
                batch,
                mean_objective: objective / m,
                mean_nnz: codes.iter().map(|x| x.nnz()).sum::<usize>() as f64 / m,
                over_sparsity: cfg
                    .diag_sparsity
                    .map(|t| codes.iter().filter(|x| x.nnz() > t).count() as f64 / m),
                surrogate: update.surrogate,
            });
        }
        if let Some(last) = log.last() {
            log::debug!("epoch {epoch}: last batch objective {:.6}", last.mean_objective);
        }
    }
    Ok(TrainOutput { dictionary, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_unit_columns(rng: &mut ChaCha8Rng, d: usize, k: usize) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(d, k, |_, _| rng.random_range(-1.0..1.0));
        for mut c in m.column_iter_mut() {
            let n = c.norm();
            c /= n;
        }
        m
    }

    #[test]
    fn stats_single_outer_product() {
        let s = OnlineStats::new(3, 4);
        let x = SparseVector::new(4, vec![(0, 1.0)]).unwrap();
        let y = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let next = update_stats(&s, &[x], &y).unwrap();
        assert_eq!(s.t, 0);
        assert_eq!(next.t, 1);
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 0)] = 1.0;
        assert_eq!(next.a, a);
        assert_eq!(next.b.column(0), y.column(0));
        assert_eq!(next.b.columns(1, 3).amax(), 0.0);
    }

    #[test]
    fn stats_zero_codes_only_count() {
        let s = OnlineStats::new(2, 3);
        let y = DMatrix::from_element(2, 2, 7.0);
        let next = update_stats(&s, &[SparseVector::zeros(3), SparseVector::zeros(3)], &y).unwrap();
        assert_eq!(next.a, s.a);
        assert_eq!(next.b, s.b);
        assert_eq!(next.t, 1);
    }

    #[test]
    fn stats_batch_split_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = DMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
        let codes: Vec<SparseVector> = (0..6)
            .map(|_| {
                let dense: Vec<f64> = (0..5)
                    .map(|_| if rng.random_bool(0.4) { rng.random_range(-1.0..1.0) } else { 0.0 })
                    .collect();
                SparseVector::from_dense(&dense)
            })
            .collect();
        let whole = update_stats(&OnlineStats::new(4, 5), &codes, &y).unwrap();
        let mut split = OnlineStats::new(4, 5);
        for c in 0..6 {
            split = update_stats(&split, &codes[c..c + 1], &y.columns(c, 1).into_owned()).unwrap();
        }
        assert!((&whole.a - &split.a).amax() < 1e-9);
        assert!((&whole.b - &split.b).amax() < 1e-9);
        assert!(update_stats(&whole, &codes[..1], &y).is_err());
    }

    #[test]
    fn fixed_points_of_atom_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Dictionary::new(random_unit_columns(&mut rng, 4, 6)).unwrap();
        let mut stats = OnlineStats::new(4, 6);
        stats.a = DMatrix::identity(6, 6);
        stats.b = d.atoms().clone();
        stats.t = 1;
        let out = update_atoms(&d, &stats, 1, &[], false).unwrap();
        assert!((out.dictionary.atoms() - d.atoms()).amax() < 1e-12);
        stats.b *= 2.0;
        let out = update_atoms(&d, &stats, 1, &[], false).unwrap();
        assert!((out.dictionary.atoms() - d.atoms()).amax() < 1e-12);
    }

    #[test]
    fn surrogate_decreases_each_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let d = Dictionary::new(random_unit_columns(&mut rng, 5, 8)).unwrap();
            let x = DMatrix::from_fn(8, 30, |_, _| rng.random_range(-1.0..1.0));
            let y = DMatrix::from_fn(5, 30, |_, _| rng.random_range(-1.0..1.0));
            let stats = OnlineStats {
                a: &x * x.transpose(),
                b: &y * x.transpose(),
                t: 1,
            };
            let out = update_atoms(&d, &stats, 5, &[], true).unwrap();
            for w in out.surrogate.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
            }
            for c in out.dictionary.atoms().column_iter() {
                assert!(c.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn dead_atoms_take_replacements() {
        let d = Dictionary::new(DMatrix::identity(3, 4) * 0.5).unwrap();
        let mut stats = OnlineStats::new(3, 4);
        stats.a[(0, 0)] = 1.0;
        stats.b[(0, 0)] = 0.5;
        stats.t = 1;
        let cand = vec![DVector::zeros(3), DVector::from_vec(vec![0.0, 3.0, 4.0])];
        let out = update_atoms(&d, &stats, 1, &cand, false).unwrap();
        assert_eq!(out.reinitialized, vec![1]);
        let a = out.dictionary.atoms();
        assert!((a.column(1) - DVector::from_vec(vec![0.0, 0.6, 0.8])).amax() < 1e-15);
        assert_eq!(a.column(2), d.atoms().column(2));
    }

    #[test]
    fn init_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut y = DMatrix::from_fn(6, 40, |_, _| rng.random_range(-1.0..1.0));
        let d1 = init_dictionary(&y, 12, 9).unwrap();
        let d2 = init_dictionary(&y, 12, 9).unwrap();
        let d3 = init_dictionary(&y, 12, 10).unwrap();
        assert_eq!(d1, d2);
        assert_ne!(d1, d3);
        for c in d1.atoms().column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        y.fill(0.0);
        let dz = init_dictionary(&y, 12, 9).unwrap();
        for c in dz.atoms().column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            init_dictionary(&y.columns(0, 5).into_owned(), 12, 0),
            Err(Error::NotEnoughData { needed: 12, got: 5 })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::for_dimension(4);
        assert!(cfg.validate(4).is_ok());
        assert_eq!(cfg.k, 8);
        cfg.epochs = 0;
        assert!(matches!(cfg.validate(4), Err(Error::BadConfig(_))));
        let mut cfg = TrainConfig::for_dimension(4);
        cfg.k = 4;
        assert!(cfg.validate(4).is_err());
        let y = DMatrix::from_element(4, 20, 1.0);
        cfg.epochs = 0;
        cfg.k = 8;
        assert!(train_online(&y, &cfg).is_err());
    }

    #[test]
    fn training_is_deterministic_and_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let truth = random_unit_columns(&mut rng, 6, 12);
        let x = DMatrix::from_fn(12, 300, |_, _| {
            if rng.random_bool(0.2) { rng.random_range(-1.0..1.0) } else { 0.0 }
        });
        let y = &truth * x;
        let cfg = TrainConfig {
            lambda: 0.05,
            batch_size: 32,
            epochs: 4,
            seed: 3,
            track_surrogate: true,
            ..TrainConfig::for_dimension(6)
        };
        let a = train_online(&y, &cfg).unwrap();
        let b = train_online(&y, &cfg).unwrap();
        assert_eq!(a.dictionary.atoms().as_slice(), b.dictionary.atoms().as_slice());
        assert!(a.epoch_objective(3).unwrap() <= a.epoch_objective(0).unwrap());
        for entry in &a.log {
            for w in entry.surrogate.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }
}
