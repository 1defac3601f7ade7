//! Beat compression as sparse coefficient triplets, reconstruction, and the
//! reconstruction-error and compression-ratio metrics.

mod sbc;

use nalgebra::DMatrix;

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::ingest::BeatLabel;
use crate::sparse_coding::{encode_all, FeatureSign, SparseVector};
use crate::wavelet::{idwt, FeatureMatrix, FilterBank, Pyramid, WindowGeometry};

pub use sbc::{decode_codes, encode_codes, CodeFile};

/// One stored coefficient: atom `row`, window `col`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A beat stored as the non-zero entries of its k×Ω code matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCode {
    k: usize,
    omega: usize,
    triplets: Vec<Triplet>,
    pub label: BeatLabel,
    pub beat_id: usize,
}

impl SparseCode {
    /// Validates and sorts the triplets into (col, row) order. Zero values
    /// are dropped.
    pub fn new(
        k: usize,
        omega: usize,
        mut triplets: Vec<Triplet>,
        label: BeatLabel,
        beat_id: usize,
    ) -> Result<Self> {
        triplets.retain(|t| t.value != 0.0);
        triplets.sort_by_key(|t| (t.col, t.row));
        for t in &triplets {
            if t.row >= k || t.col >= omega {
                return Err(Error::shape(format!(
                    "triplet ({}, {}) outside a {k}x{omega} code",
                    t.row, t.col
                )));
            }
            if !t.value.is_finite() {
                return Err(Error::DegenerateInput("non-finite code value".into()));
            }
        }
        if triplets.windows(2).any(|w| (w[0].col, w[0].row) == (w[1].col, w[1].row)) {
            return Err(Error::shape("duplicate triplet position"));
        }
        Ok(SparseCode {
            k,
            omega,
            triplets,
            label,
            beat_id,
        })
    }

    /// Packs per-window code vectors (all of dimension k).
    pub fn from_columns(columns: &[SparseVector], k: usize, label: BeatLabel, beat_id: usize) -> Result<Self> {
        let mut triplets = Vec::new();
        for (col, x) in columns.iter().enumerate() {
            if x.dim() != k {
                return Err(Error::shape(format!("code column has dimension {}, expected {k}", x.dim())));
            }
            triplets.extend(x.entries().iter().map(|&(row, value)| Triplet { row, col, value }));
        }
        SparseCode::new(k, columns.len(), triplets, label, beat_id)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    /// Dense k×Ω coefficient matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.k, self.omega);
        for t in &self.triplets {
            m[(t.row, t.col)] = t.value;
        }
        m
    }

    /// The code as the file stores it: values rounded to single precision,
    /// values that underflow to zero dropped.
    pub fn narrowed(&self) -> Result<Self> {
        let triplets = self
            .triplets
            .iter()
            .map(|t| Triplet {
                value: f64::from(t.value as f32),
                ..*t
            })
            .collect();
        SparseCode::new(self.k, self.omega, triplets, self.label, self.beat_id)
    }

    pub fn to_columns(&self) -> Vec<SparseVector> {
        let mut cols = vec![Vec::new(); self.omega];
        for t in &self.triplets {
            cols[t.col].push((t.row, t.value));
        }
        cols.into_iter()
            .map(|e| SparseVector::new(self.k, e).expect("validated triplets"))
            .collect()
    }
}

/// Codes every window of a beat against `dictionary`.
pub fn compress(
    dictionary: &Dictionary,
    features: &FeatureMatrix,
    lambda: f64,
    label: BeatLabel,
    solver: &FeatureSign,
) -> Result<SparseCode> {
    let codes = encode_all(dictionary.atoms(), &features.columns, lambda, solver)?;
    SparseCode::from_columns(&codes, dictionary.len(), label, features.beat_index)
}

/// `Ŷ = D X`, one column per window. Accepts any d×k atom matrix, so the
/// k-means centroids decode the same way.
pub fn decompress(atoms: &DMatrix<f64>, code: &SparseCode) -> Result<DMatrix<f64>> {
    if code.k() != atoms.ncols() {
        return Err(Error::shape(format!(
            "code has k = {}, dictionary has k = {}",
            code.k(),
            atoms.ncols()
        )));
    }
    let mut y = DMatrix::zeros(atoms.nrows(), code.omega());
    for t in code.triplets() {
        y.column_mut(t.col).axpy(t.value, &atoms.column(t.row), 1.0);
    }
    Ok(y)
}

/// The 1-sparse code of a vector-quantized beat: coefficient 1 on the
/// assigned centroid of each window.
pub fn vq_code(assignments: &[usize], k: usize, label: BeatLabel, beat_id: usize) -> Result<SparseCode> {
    let triplets = assignments
        .iter()
        .enumerate()
        .map(|(col, &row)| Triplet { row, col, value: 1.0 })
        .collect();
    SparseCode::new(k, assignments.len(), triplets, label, beat_id)
}

/// Inverts each window's wavelet feature and averages overlapping windows.
/// Samples no window covers stay zero.
pub fn reconstruct_beat(
    features: &DMatrix<f64>,
    fb: &FilterBank,
    geometry: WindowGeometry,
    signal_len: usize,
) -> Result<Vec<f64>> {
    geometry.validate(signal_len)?;
    let layout = geometry.layout(fb)?;
    let positions = geometry.positions(signal_len);
    if features.nrows() != layout.coefficient_count() || features.ncols() != positions.len() {
        return Err(Error::shape(format!(
            "features are {}x{}, geometry expects {}x{}",
            features.nrows(),
            features.ncols(),
            layout.coefficient_count(),
            positions.len()
        )));
    }
    let mut sum = vec![0.0; signal_len];
    let mut count = vec![0usize; signal_len];
    for (c, &p) in positions.iter().enumerate() {
        let col: Vec<f64> = features.column(c).iter().copied().collect();
        let window = idwt(&Pyramid::unflatten(&col, &layout)?, fb)?;
        for (i, v) in window.into_iter().enumerate() {
            sum[p + i] += v;
            count[p + i] += 1;
        }
    }
    Ok(sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect())
}

/// Per-beat relative error `‖M − N‖₂ / ‖N‖₂`.
pub fn beat_errors<M: AsRef<[f64]>, N: AsRef<[f64]>>(reconstructed: &[M], originals: &[N]) -> Result<Vec<f64>> {
    if reconstructed.len() != originals.len() {
        return Err(Error::shape(format!(
            "{} reconstructed beats for {} originals",
            reconstructed.len(),
            originals.len()
        )));
    }
    reconstructed
        .iter()
        .zip(originals)
        .enumerate()
        .map(|(i, (m, n))| {
            let (m, n) = (m.as_ref(), n.as_ref());
            if m.len() != n.len() {
                return Err(Error::shape(format!(
                    "beat {i}: reconstruction has {} samples, original {}",
                    m.len(),
                    n.len()
                )));
            }
            let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::DegenerateInput(format!("original beat {i} is identically zero")));
            }
            let diff = m.iter().zip(n).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            Ok(diff / norm)
        })
        .collect()
}

/// Mean relative reconstruction error over beats.
pub fn err_metric<M: AsRef<[f64]>, N: AsRef<[f64]>>(reconstructed: &[M], originals: &[N]) -> Result<f64> {
    let errs = beat_errors(reconstructed, originals)?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Mean of `(n − m)/n` over per-beat stored coefficient counts `m`. NaN for
/// an empty list.
///
/// Computed as `(nΓ − Σm)/(nΓ)` in integers, so the only rounding is the
/// final division.
pub fn cr_from_counts(counts: &[usize], n: usize) -> f64 {
    let total = n as i128 * counts.len() as i128;
    let stored: i128 = counts.iter().map(|&m| m as i128).sum();
    (total - stored) as f64 / total as f64
}

/// Compression ratio of a set of codes, counting one stored element per
/// triplet.
pub fn cr_metric(codes: &[SparseCode], n: usize) -> f64 {
    let counts: Vec<usize> = codes.iter().map(SparseCode::nnz).collect();
    cr_from_counts(&counts, n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodecMetrics {
    pub err: f64,
    pub cr: f64,
    pub nnz_per_beat: Vec<usize>,
}

impl CodecMetrics {
    pub fn compute<M: AsRef<[f64]>, N: AsRef<[f64]>>(
        codes: &[SparseCode],
        reconstructed: &[M],
        originals: &[N],
        n: usize,
    ) -> Result<Self> {
        Ok(CodecMetrics {
            err: err_metric(reconstructed, originals)?,
            cr: cr_metric(codes, n),
            nnz_per_beat: codes.iter().map(SparseCode::nnz).collect(),
        })
    }
}
