use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{smo_train, BinarySvmModel, SmoOptions};
use crate::error::{Error, Result};

/// Binary model separating `classes[positive]` (+1) from
/// `classes[negative]` (−1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: usize,
    pub negative: usize,
    pub model: BinarySvmModel,
}

/// One-vs-one ensemble. Prediction is a majority vote; ties go to the
/// class with the larger summed decision magnitude, then to the earlier
/// class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvoModel<L> {
    pub classes: Vec<L>,
    pub pairs: Vec<PairModel>,
    pub tie_break: String,
}

const TIE_BREAK: &str = "votes,decision-magnitude,class-order";

fn cmp_vectors(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Trains one binary model per unordered class pair. Each pair's data is
/// put in a canonical order first, so the result does not depend on the
/// order of the training examples.
pub fn ovo_train<L>(z: &[Vec<f64>], labels: &[L], c: f64, gamma: f64, opts: &SmoOptions) -> Result<OvoModel<L>>
where
    L: Ord + Clone + Send + Sync,
{
    if z.len() != labels.len() {
        return Err(Error::shape(format!("{} samples, {} labels", z.len(), labels.len())));
    }
    let mut classes: Vec<L> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("class collected above"))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
        .collect();
    let pairs = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let mut idx: Vec<usize> = (0..z.len()).filter(|&i| class_of[i] == a || class_of[i] == b).collect();
            idx.sort_by(|&i, &j| class_of[i].cmp(&class_of[j]).then_with(|| cmp_vectors(&z[i], &z[j])));
            let zs: Vec<Vec<f64>> = idx.iter().map(|&i| z[i].clone()).collect();
            let ys: Vec<f64> = idx.iter().map(|&i| if class_of[i] == a { 1.0 } else { -1.0 }).collect();
            Ok(PairModel {
                positive: a,
                negative: b,
                model: smo_train(&zs, &ys, c, gamma, opts)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvoModel {
        classes,
        pairs,
        tie_break: TIE_BREAK.to_string(),
    })
}

impl<L: Clone> OvoModel<L> {
    pub fn predict(&self, z: &[f64]) -> Result<L> {
        let n = self.classes.len();
        let mut votes = vec![0usize; n];
        let mut strength = vec![0.0; n];
        for p in &self.pairs {
            let (f, sign) = p.model.predict(z)?;
            let winner = if sign > 0 { p.positive } else { p.negative };
            votes[winner] += 1;
            strength[winner] += f.abs();
        }
        let best = (0..n)
            .max_by(|&a, &b| {
                votes[a]
                    .cmp(&votes[b])
                    .then(strength[a].total_cmp(&strength[b]))
                    .then(b.cmp(&a))
            })
            .expect("at least two classes");
        Ok(self.classes[best].clone())
    }

    pub fn predict_all(&self, z: &[Vec<f64>]) -> Result<Vec<L>>
    where
        L: Send + Sync,
    {
        z.par_iter().map(|v| self.predict(v)).collect()
    }

    /// True if every pair's solver reached tolerance.
    pub fn converged(&self) -> bool {
        self.pairs.iter().all(|p| p.model.converged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn three_blobs(rng: &mut ChaCha8Rng, per_class: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        let noise = Normal::new(0.0, 0.6).unwrap();
        let mut z = Vec::new();
        let mut y = Vec::new();
        for i in 0..per_class * 3 {
            let c = i % 3;
            z.push(vec![centers[c][0] + noise.sample(rng), centers[c][1] + noise.sample(rng)]);
            y.push(c as u8);
        }
        (z, y)
    }

    #[test]
    fn pair_counts() {
        let z: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let two: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
        let m = ovo_train(&z, &two, 1.0, 1.0, &SmoOptions::default()).unwrap();
        assert_eq!(m.pairs.len(), 1);
        for v in &z {
            let (_, s) = m.pairs[0].model.predict(v).unwrap();
            assert_eq!(m.predict(v).unwrap(), if s > 0 { 0 } else { 1 });
        }
        let six: Vec<u8> = (0..12).map(|i| (i % 6) as u8).collect();
        assert_eq!(ovo_train(&z, &six, 1.0, 1.0, &SmoOptions::default()).unwrap().pairs.len(), 15);
        assert!(matches!(
            ovo_train(&z, &[0u8; 12], 1.0, 1.0, &SmoOptions::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn three_blobs_generalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (z, y) = three_blobs(&mut rng, 60);
        let (zt, yt) = three_blobs(&mut rng, 100);
        let m = ovo_train(&z, &y, 10.0, 0.5, &SmoOptions::default()).unwrap();
        let pred = m.predict_all(&zt).unwrap();
        let acc = pred.iter().zip(&yt).filter(|(a, b)| a == b).count() as f64 / yt.len() as f64;
        assert!(acc >= 0.95, "{acc}");
    }

    #[test]
    fn order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (z, y) = three_blobs(&mut rng, 30);
        let m1 = ovo_train(&z, &y, 1.0, 0.5, &SmoOptions::default()).unwrap();
        let mut idx: Vec<usize> = (0..z.len()).collect();
        idx.shuffle(&mut rng);
        let z2: Vec<Vec<f64>> = idx.iter().map(|&i| z[i].clone()).collect();
        let y2: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
        let m2 = ovo_train(&z2, &y2, 1.0, 0.5, &SmoOptions::default()).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (z, y) = three_blobs(&mut rng, 10);
        let m = ovo_train(&z, &y, 1.0, 0.5, &SmoOptions::default()).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: OvoModel<u8> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
