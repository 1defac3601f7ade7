use std::fmt::Debug;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ovo_train, SmoOptions};
use crate::error::{Error, Result};

/// Fold index of every sample. Each class is shuffled with the seeded
/// generator and dealt round-robin, so fold class proportions differ by at
/// most one sample.
pub fn stratified_folds<L>(labels: &[L], folds: usize, seed: u64) -> Result<Vec<usize>>
where
    L: Ord + Clone + Debug,
{
    if folds < 2 {
        return Err(Error::config(format!("need at least 2 folds, got {folds}")));
    }
    let mut classes: Vec<L> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for class in &classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| &labels[i] == class).collect();
        if members.len() < folds {
            return Err(Error::TooFewPerClass {
                class: format!("{class:?}"),
                count: members.len(),
                needed: folds,
            });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Mean held-out accuracy of one-vs-one SVMs over stratified folds.
pub fn cross_validate<L>(z: &[Vec<f64>], labels: &[L], c: f64, gamma: f64, folds: usize, seed: u64) -> Result<f64>
where
    L: Ord + Clone + Debug + Send + Sync,
{
    if z.len() != labels.len() {
        return Err(Error::shape(format!("{} samples, {} labels", z.len(), labels.len())));
    }
    let assignment = stratified_folds(labels, folds, seed)?;
    let accuracies = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (mut zt, mut yt, mut zv, mut yv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, &a) in assignment.iter().enumerate() {
                if a == f {
                    zv.push(z[i].clone());
                    yv.push(labels[i].clone());
                } else {
                    zt.push(z[i].clone());
                    yt.push(labels[i].clone());
                }
            }
            let model = ovo_train(&zt, &yt, c, gamma, &SmoOptions::default())?;
            let pred = model.predict_all(&zv)?;
            let hits = pred.iter().zip(&yv).filter(|(p, t)| p == t).count();
            Ok(hits as f64 / yv.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(accuracies.iter().sum::<f64>() / folds as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsoConfig {
    pub swarm: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    /// Bounds on log2(C).
    pub log2_c: (f64, f64),
    /// Bounds on log2(γ).
    pub log2_gamma: (f64, f64),
    pub folds: usize,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm: 20,
            iterations: 30,
            inertia: 0.72,
            c1: 1.49,
            c2: 1.49,
            log2_c: (-5.0, 15.0),
            log2_gamma: (-15.0, 3.0),
            folds: 5,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("log2 C", self.log2_c), ("log2 gamma", self.log2_gamma)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(format!("{name} bounds [{lo}, {hi}] are invalid")));
            }
        }
        if self.folds < 2 {
            return Err(Error::config("PSO cross-validation needs at least 2 folds"));
        }
        if self.swarm < 1 {
            return Err(Error::config("swarm must have at least one particle"));
        }
        for (name, v) in [("inertia", self.inertia), ("c1", self.c1), ("c2", self.c2)] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    fn bounds(&self) -> [(f64, f64); 2] {
        [self.log2_c, self.log2_gamma]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsoResult {
    pub best: [f64; 2],
    pub fitness: f64,
    /// Incumbent fitness after initialization and after every iteration.
    pub history: Vec<f64>,
}

/// Global-best particle swarm maximizing `fitness` over the config bounds.
///
/// With `start` the particles begin at the given positions (clamped) with
/// zero velocity; otherwise positions are uniform in the bounds and
/// velocities uniform in ±half the range. Fitness values of a generation
/// are computed in parallel; the best-position bookkeeping is serial, in
/// particle order, so the result depends only on the seed.
pub fn pso_maximize<F>(fitness: F, cfg: &PsoConfig, start: Option<&[[f64; 2]]>) -> Result<PsoResult>
where
    F: Fn([f64; 2]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let bounds = cfg.bounds();
    let clamp = |p: [f64; 2]| [p[0].clamp(bounds[0].0, bounds[0].1), p[1].clamp(bounds[1].0, bounds[1].1)];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let (mut pos, mut vel): (Vec<[f64; 2]>, Vec<[f64; 2]>) = match start {
        Some(s) => (s.iter().map(|&p| clamp(p)).collect(), vec![[0.0; 2]; s.len()]),
        None => (0..cfg.swarm)
            .map(|_| {
                let mut p = [0.0; 2];
                let mut v = [0.0; 2];
                for d in 0..2 {
                    let (lo, hi) = bounds[d];
                    p[d] = rng.random_range(lo..=hi);
                    let half = (hi - lo) / 2.0;
                    v[d] = rng.random_range(-half..=half);
                }
                (p, v)
            })
            .unzip(),
    };
    if pos.is_empty() {
        return Err(Error::config("swarm must have at least one particle"));
    }
    let evaluate = |pos: &[[f64; 2]]| -> Result<Vec<f64>> { pos.par_iter().map(|&p| fitness(p)).collect() };

    let values = evaluate(&pos)?;
    let mut pbest = pos.clone();
    let mut pbest_val = values.clone();
    let mut g = 0;
    for i in 1..pos.len() {
        if pbest_val[i] > pbest_val[g] {
            g = i;
        }
    }
    let mut gbest = pbest[g];
    let mut gbest_val = pbest_val[g];
    let mut history = vec![gbest_val];

    for _ in 0..cfg.iterations {
        for i in 0..pos.len() {
            for d in 0..2 {
                let (lo, hi) = bounds[d];
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = cfg.inertia * vel[i][d]
                    + cfg.c1 * r1 * (pbest[i][d] - pos[i][d])
                    + cfg.c2 * r2 * (gbest[d] - pos[i][d]);
                let vmax = hi - lo;
                vel[i][d] = v.clamp(-vmax, vmax);
                pos[i][d] = (pos[i][d] + vel[i][d]).clamp(lo, hi);
            }
        }
        let values = evaluate(&pos)?;
        for i in 0..pos.len() {
            if values[i] > pbest_val[i] {
                pbest_val[i] = values[i];
                pbest[i] = pos[i];
            }
            if values[i] > gbest_val {
                gbest_val = values[i];
                gbest = pos[i];
            }
        }
        history.push(gbest_val);
    }
    Ok(PsoResult {
        best: gbest,
        fitness: gbest_val,
        history,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsoSearch {
    pub c: f64,
    pub gamma: f64,
    pub accuracy: f64,
    pub history: Vec<f64>,
}

/// Searches `(log2 C, log2 γ)` for the best cross-validated accuracy.
pub fn pso_search<L>(z: &[Vec<f64>], labels: &[L], cfg: &PsoConfig) -> Result<PsoSearch>
where
    L: Ord + Clone + Debug + Send + Sync,
{
    cfg.validate()?;
    // Fail fast on unusable data rather than inside the swarm.
    stratified_folds(labels, cfg.folds, cfg.seed)?;
    let res = pso_maximize(
        |p| cross_validate(z, labels, p[0].exp2(), p[1].exp2(), cfg.folds, cfg.seed),
        cfg,
        None,
    )?;
    Ok(PsoSearch {
        c: res.best[0].exp2(),
        gamma: res.best[1].exp2(),
        accuracy: res.fitness,
        history: res.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64, per_class: usize, sep: f64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut z = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * per_class {
            let c = (i % 2) as u8;
            z.push(vec![c as f64 * sep + noise.sample(&mut rng), noise.sample(&mut rng)]);
            y.push(c);
        }
        (z, y)
    }

    #[test]
    fn folds_are_stratified_and_seeded() {
        let labels: Vec<u8> = (0..50).map(|i| (i % 3) as u8).collect();
        let a = stratified_folds(&labels, 5, 1).unwrap();
        assert_eq!(a, stratified_folds(&labels, 5, 1).unwrap());
        for class in 0..3u8 {
            let mut counts = [0; 5];
            for (i, &f) in a.iter().enumerate() {
                if labels[i] == class {
                    counts[f] += 1;
                }
            }
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
        assert!(matches!(stratified_folds(&[0u8, 0, 1], 2, 0), Err(Error::TooFewPerClass { count: 1, .. })));
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let (z, y) = blobs(1, 40, 5.0);
        let acc = cross_validate(&z, &y, 10.0, 0.5, 5, 3).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(acc, cross_validate(&z, &y, 10.0, 0.5, 5, 3).unwrap());
    }

    #[test]
    fn shuffled_labels_near_chance() {
        let (z, mut y) = blobs(2, 100, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        y.shuffle(&mut rng);
        let acc = cross_validate(&z, &y, 1.0, 1.0, 5, 5).unwrap();
        assert!((0.35..=0.65).contains(&acc), "{acc}");
    }

    #[test]
    fn quadratic_surrogate() {
        let cfg = PsoConfig {
            iterations: 50,
            seed: 8,
            ..PsoConfig::default()
        };
        let res = pso_maximize(|p| Ok(-((p[0] - 3.0).powi(2) + (p[1] + 2.0).powi(2))), &cfg, None).unwrap();
        assert!((res.best[0] - 3.0).abs() < 0.1 && (res.best[1] + 2.0).abs() < 0.1, "{:?}", res.best);
        assert_eq!(res.history.len(), 51);
        for w in res.history.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn degenerate_swarm_stays_put() {
        let cfg = PsoConfig { c1: 0.0, c2: 0.0, ..PsoConfig::default() };
        let start = vec![[1.0, -4.0]; 6];
        let res = pso_maximize(|p| Ok(p[0] + p[1]), &cfg, Some(&start)).unwrap();
        assert_eq!(res.best, [1.0, -4.0]);
    }

    #[test]
    fn results_respect_bounds() {
        let cfg = PsoConfig { iterations: 10, ..PsoConfig::default() };
        // Optimum far outside the box pushes particles onto the boundary.
        let res = pso_maximize(|p| Ok(p[0] * 10.0 - p[1] * 3.0), &cfg, None).unwrap();
        assert!(res.best[0] <= 15.0 && res.best[0] >= -5.0);
        assert!(res.best[1] <= 3.0 && res.best[1] >= -15.0);
        let bad = PsoConfig { log2_c: (2.0, 1.0), ..PsoConfig::default() };
        assert!(pso_maximize(|_| Ok(0.0), &bad, None).is_err());
    }

    #[test]
    fn search_on_blobs() {
        let (z, y) = blobs(5, 20, 4.0);
        let cfg = PsoConfig { swarm: 4, iterations: 2, folds: 3, ..PsoConfig::default() };
        let res = pso_search(&z, &y, &cfg).unwrap();
        assert!(res.accuracy >= 0.9);
        assert!(res.c >= 2f64.powi(-5) && res.c <= 2f64.powi(15));
        assert!(res.gamma >= 2f64.powi(-15) && res.gamma <= 8.0);
    }
}
