//! Batch stages shared by the command line and tests: feature extraction
//! over many beats, coding, reconstruction, the vector-quantization
//! baseline and the train/test split.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codec::{compress, decompress, reconstruct_beat, vq_code, SparseCode};
use crate::dictionary::{assign_nearest, Dictionary, KMeansResult};
use crate::error::{Error, Result};
use crate::features::{bow_histogram, l2_normalized, tpm_feature, PyramidConfig};
use crate::ingest::{Beat, BeatLabel};
use crate::sparse_coding::FeatureSign;
use crate::wavelet::{extract_windows, FeatureMatrix, FilterBank, WindowGeometry};

/// Window features of every beat; `beat_index` is the position in `beats`.
pub fn beat_features(beats: &[Beat], fb: &FilterBank, geometry: WindowGeometry) -> Result<Vec<FeatureMatrix>> {
    beats
        .par_iter()
        .enumerate()
        .map(|(i, b)| extract_windows(b.values(), i, fb, geometry))
        .collect()
}

/// All window columns side by side, in beat order.
pub fn stack_columns<'a, I>(features: I) -> Result<DMatrix<f64>>
where
    I: IntoIterator<Item = &'a FeatureMatrix>,
{
    let parts: Vec<&FeatureMatrix> = features.into_iter().collect();
    let Some(first) = parts.first() else {
        return Err(Error::NotEnoughData { needed: 1, got: 0 });
    };
    let d = first.dim();
    if let Some(bad) = parts.iter().find(|f| f.dim() != d) {
        return Err(Error::shape(format!("feature dimensions {d} and {}", bad.dim())));
    }
    let n: usize = parts.iter().map(|f| f.omega()).sum();
    let mut y = DMatrix::zeros(d, n);
    let mut at = 0;
    for f in parts {
        y.columns_mut(at, f.omega()).copy_from(&f.columns);
        at += f.omega();
    }
    Ok(y)
}

/// Sparse codes of every beat. `labels[i]` belongs to the beat whose
/// features carry `beat_index == i`.
pub fn compress_all(
    dictionary: &Dictionary,
    features: &[FeatureMatrix],
    labels: &[BeatLabel],
    lambda: f64,
    solver: &FeatureSign,
) -> Result<Vec<SparseCode>> {
    features
        .par_iter()
        .map(|f| {
            let label = *labels
                .get(f.beat_index)
                .ok_or_else(|| Error::shape(format!("no label for beat {}", f.beat_index)))?;
            compress(dictionary, f, lambda, label, solver)
        })
        .collect()
}

/// Decodes every code and inverts the window features back to beats of
/// `signal_len` samples.
pub fn reconstruct_all(
    atoms: &DMatrix<f64>,
    codes: &[SparseCode],
    fb: &FilterBank,
    geometry: WindowGeometry,
    signal_len: usize,
) -> Result<Vec<Vec<f64>>> {
    codes
        .par_iter()
        .map(|c| reconstruct_beat(&decompress(atoms, c)?, fb, geometry, signal_len))
        .collect()
}

/// Nearest-centroid assignments of every window, per beat.
pub fn vq_assignments(kmeans: &KMeansResult, features: &[FeatureMatrix]) -> Result<Vec<Vec<usize>>> {
    features
        .par_iter()
        .map(|f| assign_nearest(&kmeans.centroids, &f.columns))
        .collect()
}

/// 1-sparse codes of the vector-quantization baseline.
pub fn vq_codes(kmeans: &KMeansResult, features: &[FeatureMatrix], labels: &[BeatLabel]) -> Result<Vec<SparseCode>> {
    let k = kmeans.centroids.ncols();
    vq_assignments(kmeans, features)?
        .iter()
        .zip(features)
        .map(|(a, f)| {
            let label = *labels
                .get(f.beat_index)
                .ok_or_else(|| Error::shape(format!("no label for beat {}", f.beat_index)))?;
            vq_code(a, k, label, f.beat_index)
        })
        .collect()
}

/// Pyramid features of every code.
pub fn tpm_features(codes: &[SparseCode], cfg: &PyramidConfig) -> Result<Vec<(BeatLabel, DVector<f64>)>> {
    codes
        .par_iter()
        .map(|c| tpm_feature(c, cfg).map(|h| (h.label, h.z)))
        .collect()
}

/// Unit-norm bag-of-words histograms from window assignments.
pub fn bow_features(assignments: &[Vec<usize>], k: usize) -> Result<Vec<DVector<f64>>> {
    assignments
        .iter()
        .map(|a| bow_histogram(a, k).map(l2_normalized))
        .collect()
}

/// How many training beats to draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitRule {
    /// A total spread over classes in proportion to their sizes.
    TrainTotal(usize),
    /// The same count from every class.
    TrainPerClass(usize),
    /// A fraction of all beats, spread like `TrainTotal`.
    TrainFraction(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitConfig {
    pub rule: SplitRule,
    /// Draw each class separately. `TrainPerClass` always does.
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            rule: SplitRule::TrainFraction(0.5),
            stratified: true,
            seed: 0,
        }
    }
}

/// Train and test indices into the labelled set, each ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `total` over class sizes. Ties in
/// the remainder go to the earlier class.
fn proportional_quotas(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| s * total / n).collect();
    let mut rest: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(c, &s)| (s * total % n, c)).collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = total - quotas.iter().sum::<usize>();
    for &(_, c) in rest.iter().take(missing) {
        quotas[c] += 1;
    }
    quotas
}

/// Seeded split. Every class keeps at least one training beat.
pub fn split_dataset(labels: &[BeatLabel], cfg: &SplitConfig) -> Result<Split> {
    let mut by_class: BTreeMap<BeatLabel, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.is_empty() {
        return Err(Error::NotEnoughData { needed: 1, got: 0 });
    }
    let sizes: Vec<usize> = by_class.values().map(Vec::len).collect();
    let n = labels.len();
    let total = match cfg.rule {
        SplitRule::TrainPerClass(m) => {
            if m == 0 {
                return Err(Error::config("train_per_class must be at least 1"));
            }
            None
        }
        SplitRule::TrainTotal(t) => {
            if t == 0 || t > n {
                return Err(Error::config(format!("train_total {t} must lie in [1, {n}]")));
            }
            Some(t)
        }
        SplitRule::TrainFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config(format!("train_fraction {f} must lie in (0, 1]")));
            }
            Some(((f * n as f64).round() as usize).max(1))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut train, mut test) = match (total, cfg.stratified) {
        (Some(t), false) => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let test = all.split_off(t);
            (all, test)
        }
        _ => {
            let quotas = match (cfg.rule, total) {
                (SplitRule::TrainPerClass(m), _) => vec![m; sizes.len()],
                (_, Some(t)) => proportional_quotas(&sizes, t),
                _ => unreachable!("every other rule has a total"),
            };
            let mut train = Vec::new();
            let mut test = Vec::new();
            for ((label, mut members), quota) in by_class.iter().map(|(l, m)| (*l, m.clone())).zip(quotas) {
                let needed = quota.max(1);
                if members.len() < needed {
                    return Err(Error::TooFewPerClass {
                        class: label.symbol().to_string(),
                        count: members.len(),
                        needed,
                    });
                }
                members.shuffle(&mut rng);
                train.extend_from_slice(&members[..needed]);
                test.extend_from_slice(&members[needed..]);
            }
            (train, test)
        }
    };
    if let Some(missing) = by_class.keys().find(|&&l| !train.iter().any(|&i| labels[i] == l)) {
        return Err(Error::DegenerateInput(format!(
            "the split leaves class {missing} out of the training set"
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Fraction of matching pairs.
pub fn accuracy<L: PartialEq>(predicted: &[L], truth: &[L]) -> f64 {
    if truth.is_empty() {
        return f64::NAN;
    }
    predicted.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Confusion counts with rows for the true class and columns for the
/// predicted class, both in `classes` order.
pub fn confusion_matrix<L: PartialEq>(classes: &[L], predicted: &[L], truth: &[L]) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; classes.len()]; classes.len()];
    for (p, t) in predicted.iter().zip(truth) {
        if let (Some(i), Some(j)) = (classes.iter().position(|c| c == t), classes.iter().position(|c| c == p)) {
            m[i][j] += 1;
        }
    }
    m
}
